#pragma once

#include "nlreg/types.hpp"

namespace nlreg {

/// Equidistant piecewise-constant partition of the distance range (0,d).
struct WeightGrid {
  Index n_pieces = 0;
  Scalar d = 1.0;  // domain diameter

  // k-th breakpoint, t_0 = 0, t_{n_pieces} = d.
  Scalar breakpoint(Index k) const {
    return d * static_cast<Scalar>(k) / static_cast<Scalar>(n_pieces);
  }
  Scalar width(Index k) const { return breakpoint(k + 1) - breakpoint(k); }

  bool operator==(const WeightGrid& other) const {
    return n_pieces == other.n_pieces && d == other.d;
  }
};

/// Distance-dependent weight sigma, piecewise constant on the grid,
/// box-constrained by the admissibility conditions: 0 <= sigma <= gamma2
/// everywhere and sigma >= gamma1 on pieces contained in (0,delta).
struct WeightVector {
  WeightGrid grid;
  Vector values;
  Scalar gamma1 = 0.1;
  Scalar gamma2 = 10.0;
  Scalar delta = 1.0;
};

// True if piece k (spanning (t_k, t_{k+1})) lies inside (0, delta).
bool piece_in_lower_band(const WeightGrid& grid, Index k, Scalar delta);

// Per-piece admissible lower bound: gamma1 on pieces in (0,delta), 0 elsewhere.
Vector lower_bound_vector(const WeightGrid& grid, Scalar gamma1, Scalar delta);

bool is_feasible(const WeightVector& sigma, Scalar tol = 1e-12);

// Throws std::invalid_argument when sigma violates the box constraints.
void require_feasible(const WeightVector& sigma, Scalar tol = 1e-12);

// Constant weight nu on every piece (the scalar-parameter baseline).
WeightVector constant_weight(const WeightGrid& grid, Scalar nu, Scalar gamma1,
                             Scalar gamma2, Scalar delta);

}  // namespace nlreg

#include "nlreg/weights.hpp"

#include <stdexcept>

namespace nlreg {

bool piece_in_lower_band(const WeightGrid& grid, Index k, Scalar delta) {
  // Tolerance keeps delta == d robust against breakpoint roundoff.
  return grid.breakpoint(k + 1) <= delta + 1e-12 * grid.d;
}

Vector lower_bound_vector(const WeightGrid& grid, Scalar gamma1, Scalar delta) {
  Vector lo = Vector::Zero(grid.n_pieces);
  for (Index k = 0; k < grid.n_pieces; ++k) {
    if (piece_in_lower_band(grid, k, delta)) lo[k] = gamma1;
  }
  return lo;
}

bool is_feasible(const WeightVector& sigma, Scalar tol) {
  if (sigma.values.size() != sigma.grid.n_pieces) return false;
  if (!(sigma.gamma1 > 0) || sigma.gamma1 > sigma.gamma2) return false;
  if (!(sigma.delta > 0)) return false;
  const Scalar slack = tol * std::max(1.0, sigma.gamma2);
  for (Index k = 0; k < sigma.grid.n_pieces; ++k) {
    const Scalar v = sigma.values[k];
    if (v < -slack || v > sigma.gamma2 + slack) return false;
    if (piece_in_lower_band(sigma.grid, k, sigma.delta) &&
        v < sigma.gamma1 - slack) {
      return false;
    }
  }
  return true;
}

void require_feasible(const WeightVector& sigma, Scalar tol) {
  if (!is_feasible(sigma, tol)) {
    throw std::invalid_argument("weight vector violates admissibility bounds");
  }
}

WeightVector constant_weight(const WeightGrid& grid, Scalar nu, Scalar gamma1,
                             Scalar gamma2, Scalar delta) {
  WeightVector w;
  w.grid = grid;
  w.values = Vector::Constant(grid.n_pieces, nu);
  w.gamma1 = gamma1;
  w.gamma2 = gamma2;
  w.delta = delta;
  return w;
}

}  // namespace nlreg

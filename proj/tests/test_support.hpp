#pragma once

#include "nlreg/datagen.hpp"
#include "nlreg/types.hpp"
#include "nlreg/weights.hpp"

namespace nlreg::testing {

inline Vector random_vector(RandomStream& rng, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

// Uniformly random admissible weight: gamma1 <= sigma <= gamma2 on pieces
// inside (0, delta), 0 <= sigma <= gamma2 elsewhere.
inline WeightVector random_feasible_weight(RandomStream& rng,
                                           const WeightGrid& grid,
                                           Scalar gamma1 = 0.1,
                                           Scalar gamma2 = 10.0,
                                           Scalar delta = 1.0) {
  WeightVector w;
  w.grid = grid;
  w.gamma1 = gamma1;
  w.gamma2 = gamma2;
  w.delta = delta;
  w.values.resize(grid.n_pieces);
  for (Index k = 0; k < grid.n_pieces; ++k) {
    const Scalar lo = piece_in_lower_band(grid, k, delta) ? gamma1 : 0.0;
    w.values[k] = lo + (gamma2 - lo) * rng.uniform();
  }
  return w;
}

}  // namespace nlreg::testing

#pragma once

#include <cmath>

#include "nlreg/types.hpp"

namespace nlreg {

/// Equidistant 1D mesh on [0,1] with linear Lagrange (hat) basis functions.
struct Mesh1D {
  Index n_nodes = 0;
  Vector nodes;  // nodes[0] = 0, nodes[n_nodes-1] = 1
  Scalar h = 0;  // element width, 1/(n_nodes-1)

  Scalar node(Index i) const { return nodes[i]; }

  // Value of the i-th hat function at x. Callers keep x inside [0,1];
  // the formula extends the boundary half-hats linearly outside.
  Scalar hat(Index i, Scalar x) const {
    return std::max(0.0, 1.0 - std::abs(x - nodes[i]) / h);
  }
};

// Builds the equidistant mesh; rejects n_nodes < 2.
Mesh1D build_mesh(Index n_nodes);

}  // namespace nlreg

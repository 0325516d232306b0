#include "nlreg/mesh.hpp"

#include <stdexcept>

namespace nlreg {

Mesh1D build_mesh(Index n_nodes) {
  if (n_nodes < 2) {
    throw std::invalid_argument("build_mesh: n_nodes must be >= 2");
  }
  Mesh1D mesh;
  mesh.n_nodes = n_nodes;
  mesh.nodes.resize(n_nodes);
  for (Index i = 0; i < n_nodes; ++i) {
    // j/(n-1) keeps the endpoints exactly 0 and 1.
    mesh.nodes[i] = static_cast<Scalar>(i) / static_cast<Scalar>(n_nodes - 1);
  }
  mesh.h = 1.0 / static_cast<Scalar>(n_nodes - 1);
  return mesh;
}

}  // namespace nlreg

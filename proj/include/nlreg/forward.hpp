#pragma once

#include <Eigen/Cholesky>

#include "nlreg/mesh.hpp"
#include "nlreg/types.hpp"

namespace nlreg {

/// Discrete forward map of the Helmholtz-type Neumann problem
/// -rho*y'' + y = u, y'(0) = y'(1) = 0, realized as y = (rho*K + M)^{-1} M u
/// on linear Lagrange elements. Immutable after assembly.
struct ForwardSystem {
  Mesh1D mesh;
  Matrix mass;       // consistent mass matrix M
  Matrix stiffness;  // Neumann stiffness K, kernel = constants
  Scalar rho = 0.1;
  Eigen::LLT<Matrix> helmholtz;  // factorized rho*K + M

  Index n() const { return mesh.n_nodes; }
};

// Consistent mass matrix for hat functions on the given mesh.
Matrix mass_matrix(const Mesh1D& mesh);

// Neumann stiffness matrix (no boundary rows modified; K*1 = 0).
Matrix stiffness_matrix(const Mesh1D& mesh);

ForwardSystem assemble_fem(const Mesh1D& mesh, Scalar rho);

// y solving (rho*K + M) y = M u.
Vector apply_forward(const ForwardSystem& sys, const Vector& u);

// Discrete L2(0,1) inner product u^T M v of two nodal vectors.
Scalar l2_inner(const ForwardSystem& sys, const Vector& u, const Vector& v);

inline Scalar l2_norm_sq(const ForwardSystem& sys, const Vector& u) {
  return l2_inner(sys, u, u);
}

}  // namespace nlreg

#include "nlreg/forward.hpp"

#include <stdexcept>

namespace nlreg {

Matrix mass_matrix(const Mesh1D& mesh) {
  const Index n = mesh.n_nodes;
  const Scalar h = mesh.h;
  Matrix m = Matrix::Zero(n, n);
  for (Index e = 0; e + 1 < n; ++e) {
    // element mass h/6 * [2 1; 1 2]
    m(e, e) += h / 3.0;
    m(e + 1, e + 1) += h / 3.0;
    m(e, e + 1) += h / 6.0;
    m(e + 1, e) += h / 6.0;
  }
  return m;
}

Matrix stiffness_matrix(const Mesh1D& mesh) {
  const Index n = mesh.n_nodes;
  const Scalar h = mesh.h;
  Matrix k = Matrix::Zero(n, n);
  for (Index e = 0; e + 1 < n; ++e) {
    // element stiffness 1/h * [1 -1; -1 1]
    k(e, e) += 1.0 / h;
    k(e + 1, e + 1) += 1.0 / h;
    k(e, e + 1) -= 1.0 / h;
    k(e + 1, e) -= 1.0 / h;
  }
  return k;
}

ForwardSystem assemble_fem(const Mesh1D& mesh, Scalar rho) {
  if (!(rho > 0)) {
    throw std::invalid_argument("assemble_fem: rho must be positive");
  }
  ForwardSystem sys;
  sys.mesh = mesh;
  sys.rho = rho;
  sys.mass = mass_matrix(mesh);
  sys.stiffness = stiffness_matrix(mesh);
  sys.helmholtz.compute(rho * sys.stiffness + sys.mass);
  if (sys.helmholtz.info() != Eigen::Success) {
    throw std::runtime_error("assemble_fem: rho*K + M is not SPD");
  }
  return sys;
}

Vector apply_forward(const ForwardSystem& sys, const Vector& u) {
  if (u.size() != sys.n()) {
    throw std::invalid_argument("apply_forward: length mismatch");
  }
  return sys.helmholtz.solve(sys.mass * u);
}

Scalar l2_inner(const ForwardSystem& sys, const Vector& u, const Vector& v) {
  if (u.size() != sys.n() || v.size() != sys.n()) {
    throw std::invalid_argument("l2_inner: length mismatch");
  }
  return u.dot(sys.mass * v);
}

}  // namespace nlreg

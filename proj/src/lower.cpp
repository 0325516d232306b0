#include "nlreg/lower.hpp"

#include <stdexcept>

namespace nlreg {

std::shared_ptr<Matrix> make_normal_matrix(const ForwardSystem& fwd) {
  const Matrix S = fwd.helmholtz.solve(fwd.mass);
  Matrix B = S.transpose() * (fwd.mass * S);
  B = 0.5 * (B + B.transpose()).eval();
  return std::make_shared<Matrix>(std::move(B));
}

LowerSystem build_lower_system(std::shared_ptr<const ForwardSystem> fwd,
                               std::shared_ptr<const NonlocalTensor> tensor,
                               const Vector& y_delta,
                               std::shared_ptr<const Matrix> B) {
  if (!fwd || !tensor) {
    throw std::invalid_argument("build_lower_system: missing operators");
  }
  if (y_delta.size() != fwd->n() || tensor->n_nodes() != fwd->n()) {
    throw std::invalid_argument("build_lower_system: dimension mismatch");
  }
  LowerSystem lsys;
  lsys.fwd = fwd;
  lsys.tensor = tensor;
  lsys.B = B ? std::move(B) : make_normal_matrix(*fwd);
  // S^T M y = M H^{-1} M y = M * apply_forward(y)
  lsys.rhs_base = fwd->mass * apply_forward(*fwd, y_delta);
  lsys.y_delta = y_delta;
  return lsys;
}

Eigen::LLT<Matrix> factorize_lower(const LowerSystem& lsys,
                                   const WeightVector& sigma) {
  require_feasible(sigma);
  Matrix a = weighted_operator(*lsys.tensor, sigma);
  a += *lsys.B;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(
        "factorize_lower: B + L(sigma) not SPD; degenerate configuration");
  }
  return llt;
}

Vector refined_solve(const Eigen::LLT<Matrix>& llt, const Matrix& a,
                     const Vector& b) {
  Vector x = llt.solve(b);
  const Scalar bnorm = b.norm();
  for (int pass = 0; pass < 3; ++pass) {
    Vector r = b - a * x;
    if (r.norm() <= 1e-13 * bnorm) break;
    x += llt.solve(r);
  }
  return x;
}

Vector solve_lower(const LowerSystem& lsys, const WeightVector& sigma) {
  Matrix a = weighted_operator(*lsys.tensor, sigma);
  a += *lsys.B;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(
        "solve_lower: B + L(sigma) not SPD; degenerate configuration");
  }
  require_feasible(sigma);
  return refined_solve(llt, a, lsys.rhs_base);
}

Scalar lower_objective(const LowerSystem& lsys, const WeightVector& sigma,
                       const Vector& u, const Vector& y_delta) {
  if (u.size() != lsys.n() || y_delta.size() != lsys.n()) {
    throw std::invalid_argument("lower_objective: dimension mismatch");
  }
  const Vector misfit = apply_forward(*lsys.fwd, u) - y_delta;
  return l2_norm_sq(*lsys.fwd, misfit) + seminorm_sq(*lsys.tensor, sigma, u);
}

}  // namespace nlreg

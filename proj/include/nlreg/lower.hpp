#pragma once

#include <Eigen/Cholesky>
#include <memory>

#include "nlreg/forward.hpp"
#include "nlreg/nonlocal.hpp"
#include "nlreg/types.hpp"

namespace nlreg {

/// Normal equations of the lower-level problem
///   min_u ||S u - y_delta||^2_{L2} + u^T L(sigma) u,
/// i.e. (B + L(sigma)) u = rhs_base with B = S^T M S and
/// rhs_base = S^T M y_delta. B is shared across samples (it does not depend
/// on the data), so LowerSystem instances are cheap per-sample views.
struct LowerSystem {
  std::shared_ptr<const ForwardSystem> fwd;
  std::shared_ptr<const NonlocalTensor> tensor;
  std::shared_ptr<const Matrix> B;
  Vector rhs_base;
  Vector y_delta;

  Index n() const { return fwd->n(); }
};

// B = S^T M S with S = (rho K + M)^{-1} M realized through the factorized
// Helmholtz solve; formed densely once per forward system.
std::shared_ptr<Matrix> make_normal_matrix(const ForwardSystem& fwd);

LowerSystem build_lower_system(std::shared_ptr<const ForwardSystem> fwd,
                               std::shared_ptr<const NonlocalTensor> tensor,
                               const Vector& y_delta,
                               std::shared_ptr<const Matrix> B = nullptr);

// SPD factorization of B + L(sigma); throws for infeasible sigma and treats
// factorization failure as fatal (impossible for admissible weights).
Eigen::LLT<Matrix> factorize_lower(const LowerSystem& lsys,
                                   const WeightVector& sigma);

// Direct solve of A x = b through an existing factorization, polished with
// iterative refinement so optimality residuals stay near machine level.
Vector refined_solve(const Eigen::LLT<Matrix>& llt, const Matrix& a,
                     const Vector& b);

// The unique lower-level solution u(sigma).
Vector solve_lower(const LowerSystem& lsys, const WeightVector& sigma);

// ||S u - y_delta||^2_{L2} + u^T L(sigma) u.
Scalar lower_objective(const LowerSystem& lsys, const WeightVector& sigma,
                       const Vector& u, const Vector& y_delta);

}  // namespace nlreg

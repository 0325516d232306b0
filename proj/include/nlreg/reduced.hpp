#pragma once

#include <vector>

#include "nlreg/lower.hpp"
#include "nlreg/types.hpp"
#include "nlreg/weights.hpp"

namespace nlreg {

/// Weight regularizer R(sigma) = beta int sigma + alpha |sigma|^2_{L2(0,d)};
/// for admissible (nonnegative) sigma the integral term is the L1 norm.
struct RegularizerParams {
  Scalar alpha = 1e-4;
  Scalar beta = 1e-8;
};

Scalar regularizer_value(const WeightGrid& grid, const RegularizerParams& reg,
                         const Vector& sigma);
Vector regularizer_gradient(const WeightGrid& grid,
                            const RegularizerParams& reg, const Vector& sigma);

struct GradientReport {
  Scalar value = 0;
  Vector grad;        // coordinate partials dF/dsigma_k
  Vector riesz_grad;  // grad_k / w_k, the piecewise-constant L2 representative
  Vector u;           // lower-level solution
  Vector q;           // adjoint state
};

// F(sigma) = 1/2 ||u(sigma) - u_true||^2_{L2} + R(sigma).
Scalar reduced_value(const LowerSystem& lsys, const WeightVector& sigma,
                     const Vector& u_true, const RegularizerParams& reg);

// Adjoint gradient: q solves (B + L(sigma)) q = -M (u - u_true) with the
// factorization reused from the lower solve (the operator is symmetric);
// dF/dsigma_k = q^T A_k u + beta w_k + 2 alpha sigma_k w_k.
GradientReport reduced_gradient(const LowerSystem& lsys,
                                const WeightVector& sigma,
                                const Vector& u_true,
                                const RegularizerParams& reg);

/// Batch reduced objective
///   F(sigma) = 1/(2m) sum_i ||u_i(sigma) - u_true_i||^2_{L2} + R(sigma)
/// over m samples sharing one forward operator and one tensor. One SPD
/// factorization of B + L(sigma) serves every sample in an evaluation.
class BatchReducedObjective {
 public:
  BatchReducedObjective(std::vector<LowerSystem> systems,
                        std::vector<Vector> u_true, RegularizerParams reg,
                        WeightVector prototype);

  Scalar value(const Vector& sigma_values) const;
  Scalar value_and_gradient(const Vector& sigma_values, Vector& grad) const;

  // Mean plain squared L2 reconstruction error over the batch (no
  // regularizer, no 1/2 factor); the table statistic.
  Scalar mean_reconstruction_error(const Vector& sigma_values) const;

  const WeightGrid& grid() const { return prototype_.grid; }
  const RegularizerParams& regularizer() const { return reg_; }
  Index n_samples() const { return static_cast<Index>(systems_.size()); }
  Vector piece_widths() const;

  WeightVector wrap(const Vector& sigma_values) const;

 private:
  std::vector<LowerSystem> systems_;
  std::vector<Vector> u_true_;
  RegularizerParams reg_;
  WeightVector prototype_;  // carries grid and admissibility metadata
};

}  // namespace nlreg

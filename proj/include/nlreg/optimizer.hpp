#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "nlreg/types.hpp"
#include "nlreg/weights.hpp"

namespace nlreg {

/// Componentwise box for the weight pieces: the admissible set has lower
/// bound gamma1 on pieces inside (0, delta), zero elsewhere, and the global
/// upper bound gamma2.
struct BoxBounds {
  Vector lower;
  Vector upper;

  static BoxBounds for_weights(const WeightGrid& grid, Scalar gamma1,
                               Scalar gamma2, Scalar delta);
};

// Componentwise clamp onto [lower, upper]; idempotent.
Vector project_box(const Vector& raw, const BoxBounds& bounds);

/// Projected-gradient fixed-point residual
///   Phi_k = sigma_k - clamp(sigma_k - c * riesz_grad_k)
/// whose vanishing is equivalent to first-order optimality over the box.
Vector phi_residual(const Vector& sigma, const Vector& riesz_grad,
                    const BoxBounds& bounds, Scalar c);

struct StoppingCriteria {
  Scalar phi_tol = 1e-8;     // on ||Phi||_{L2(0,d)}
  int max_outer = 50;
  int max_inner = 500;
  Scalar armijo_c1 = 1e-4;
  Scalar armijo_shrink = 0.5;
  Scalar pdas_c = 1.0;       // active-set predicate constant, any c > 0
  int max_backtracks = 60;
};

enum class OptimizerStatus : std::uint8_t {
  kConverged,
  kIterationCap,
  kLineSearchFailure,
};

struct TraceRow {
  int outer = 0;
  int inner = 0;  // 0 marks the outer-iteration evaluation point
  Scalar value = 0;
  Scalar phi_norm = 0;
  int n_active_lower = 0;
  int n_active_upper = 0;
};

struct OptimizerState {
  Vector sigma;
  Vector multiplier;
  std::vector<std::uint8_t> active_lower;
  std::vector<std::uint8_t> active_upper;
  int outer_iters = 0;
  int inner_iters = 0;
  Scalar value = 0;
  Scalar phi_norm = 0;
  OptimizerStatus status = OptimizerStatus::kIterationCap;
  std::vector<std::pair<Scalar, Scalar>> history;  // (F, ||Phi||) per outer
  std::vector<TraceRow> trace;
};

/// Reduced objective closure handed to the optimizer. piece_widths carries
/// the L2(0,d) geometry used for Riesz representatives and norms.
struct Objective {
  std::function<Scalar(const Vector&)> value;
  std::function<Scalar(const Vector&, Vector&)> value_and_grad;
  Vector piece_widths;
};

/// Box-constrained minimization by a primal-dual active-set outer loop with
/// a projected BFGS/Armijo inner solver on the inactive pieces. Iterates
/// stay feasible throughout; convergence flags are reported, not thrown.
OptimizerState pdas_solve(const Objective& problem, const BoxBounds& bounds,
                          const Vector& init, const StoppingCriteria& crit);

struct ScalarFitResult {
  Scalar nu = 0;
  OptimizerState state;
};

/// Scalar-parameter baseline: minimizes g(nu) = F(nu * 1) over the interval
/// [nu_lo, nu_hi] with the same machinery, all pieces tied to one variable.
ScalarFitResult learn_scalar_nu(const Objective& problem, Scalar nu_lo,
                                Scalar nu_hi, Scalar nu_init,
                                const StoppingCriteria& crit);

}  // namespace nlreg

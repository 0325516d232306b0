#include "nlreg/reduced.hpp"

#include <stdexcept>

namespace nlreg {

Scalar regularizer_value(const WeightGrid& grid, const RegularizerParams& reg,
                         const Vector& sigma) {
  Scalar total = 0;
  for (Index k = 0; k < grid.n_pieces; ++k) {
    const Scalar w = grid.width(k);
    total += reg.beta * sigma[k] * w + reg.alpha * sigma[k] * sigma[k] * w;
  }
  return total;
}

Vector regularizer_gradient(const WeightGrid& grid,
                            const RegularizerParams& reg,
                            const Vector& sigma) {
  Vector g(grid.n_pieces);
  for (Index k = 0; k < grid.n_pieces; ++k) {
    const Scalar w = grid.width(k);
    g[k] = reg.beta * w + 2.0 * reg.alpha * sigma[k] * w;
  }
  return g;
}

Scalar reduced_value(const LowerSystem& lsys, const WeightVector& sigma,
                     const Vector& u_true, const RegularizerParams& reg) {
  require_feasible(sigma);
  const Vector u = solve_lower(lsys, sigma);
  const Vector diff = u - u_true;
  return 0.5 * l2_norm_sq(*lsys.fwd, diff) +
         regularizer_value(sigma.grid, reg, sigma.values);
}

GradientReport reduced_gradient(const LowerSystem& lsys,
                                const WeightVector& sigma,
                                const Vector& u_true,
                                const RegularizerParams& reg) {
  require_feasible(sigma);
  Matrix a = weighted_operator(*lsys.tensor, sigma);
  a += *lsys.B;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("reduced_gradient: B + L(sigma) not SPD");
  }
  GradientReport rep;
  rep.u = refined_solve(llt, a, lsys.rhs_base);
  const Vector diff = rep.u - u_true;
  rep.q = refined_solve(llt, a, Vector(-(lsys.fwd->mass * diff)));
  rep.value = 0.5 * diff.dot(lsys.fwd->mass * diff) +
              regularizer_value(sigma.grid, reg, sigma.values);

  const Index npc = sigma.grid.n_pieces;
  rep.grad = regularizer_gradient(sigma.grid, reg, sigma.values);
  for (Index k = 0; k < npc; ++k) {
    rep.grad[k] += rep.q.dot(lsys.tensor->matrices[k] * rep.u);
  }
  rep.riesz_grad.resize(npc);
  for (Index k = 0; k < npc; ++k) {
    rep.riesz_grad[k] = rep.grad[k] / sigma.grid.width(k);
  }
  return rep;
}

BatchReducedObjective::BatchReducedObjective(std::vector<LowerSystem> systems,
                                             std::vector<Vector> u_true,
                                             RegularizerParams reg,
                                             WeightVector prototype)
    : systems_(std::move(systems)),
      u_true_(std::move(u_true)),
      reg_(reg),
      prototype_(std::move(prototype)) {
  if (systems_.empty() || systems_.size() != u_true_.size()) {
    throw std::invalid_argument("BatchReducedObjective: inconsistent batch");
  }
}

WeightVector BatchReducedObjective::wrap(const Vector& sigma_values) const {
  WeightVector w = prototype_;
  w.values = sigma_values;
  return w;
}

Vector BatchReducedObjective::piece_widths() const {
  Vector w(prototype_.grid.n_pieces);
  for (Index k = 0; k < prototype_.grid.n_pieces; ++k) {
    w[k] = prototype_.grid.width(k);
  }
  return w;
}

Scalar BatchReducedObjective::value(const Vector& sigma_values) const {
  const WeightVector sigma = wrap(sigma_values);
  require_feasible(sigma);
  const auto& first = systems_.front();
  Matrix a = weighted_operator(*first.tensor, sigma);
  a += *first.B;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("batch objective: B + L(sigma) not SPD");
  }
  const Scalar inv_m = 1.0 / static_cast<Scalar>(systems_.size());
  Scalar misfit = 0;
  for (std::size_t i = 0; i < systems_.size(); ++i) {
    const Vector u = refined_solve(llt, a, systems_[i].rhs_base);
    const Vector diff = u - u_true_[i];
    misfit += 0.5 * inv_m * diff.dot(first.fwd->mass * diff);
  }
  return misfit + regularizer_value(prototype_.grid, reg_, sigma_values);
}

Scalar BatchReducedObjective::value_and_gradient(const Vector& sigma_values,
                                                 Vector& grad) const {
  const WeightVector sigma = wrap(sigma_values);
  require_feasible(sigma);
  const auto& first = systems_.front();
  Matrix a = weighted_operator(*first.tensor, sigma);
  a += *first.B;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("batch objective: B + L(sigma) not SPD");
  }
  const Index npc = prototype_.grid.n_pieces;
  const Scalar inv_m = 1.0 / static_cast<Scalar>(systems_.size());
  grad = regularizer_gradient(prototype_.grid, reg_, sigma_values);
  Scalar misfit = 0;
  for (std::size_t i = 0; i < systems_.size(); ++i) {
    const Vector u = refined_solve(llt, a, systems_[i].rhs_base);
    const Vector diff = u - u_true_[i];
    misfit += 0.5 * inv_m * diff.dot(first.fwd->mass * diff);
    const Vector q =
        refined_solve(llt, a, Vector(-inv_m * (first.fwd->mass * diff)));
    for (Index k = 0; k < npc; ++k) {
      grad[k] += q.dot(first.tensor->matrices[k] * u);
    }
  }
  return misfit + regularizer_value(prototype_.grid, reg_, sigma_values);
}

Scalar BatchReducedObjective::mean_reconstruction_error(
    const Vector& sigma_values) const {
  const WeightVector sigma = wrap(sigma_values);
  require_feasible(sigma);
  const auto& first = systems_.front();
  Matrix a = weighted_operator(*first.tensor, sigma);
  a += *first.B;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("batch objective: B + L(sigma) not SPD");
  }
  Scalar total = 0;
  for (std::size_t i = 0; i < systems_.size(); ++i) {
    const Vector u = refined_solve(llt, a, systems_[i].rhs_base);
    const Vector diff = u - u_true_[i];
    total += diff.dot(first.fwd->mass * diff);
  }
  return total / static_cast<Scalar>(systems_.size());
}

}  // namespace nlreg

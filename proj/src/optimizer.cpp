#include "nlreg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlreg {
namespace {

Scalar weighted_norm(const Vector& v, const Vector& w) {
  return std::sqrt((v.array().square() * w.array()).sum());
}

}  // namespace

BoxBounds BoxBounds::for_weights(const WeightGrid& grid, Scalar gamma1,
                                 Scalar gamma2, Scalar delta) {
  BoxBounds b;
  b.lower = lower_bound_vector(grid, gamma1, delta);
  b.upper = Vector::Constant(grid.n_pieces, gamma2);
  return b;
}

Vector project_box(const Vector& raw, const BoxBounds& bounds) {
  return raw.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
}

Vector phi_residual(const Vector& sigma, const Vector& riesz_grad,
                    const BoxBounds& bounds, Scalar c) {
  if (!(c > 0)) throw std::invalid_argument("phi_residual: c must be > 0");
  const Vector step = sigma - c * riesz_grad;
  return sigma - step.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
}

OptimizerState pdas_solve(const Objective& problem, const BoxBounds& bounds,
                          const Vector& init, const StoppingCriteria& crit) {
  const Index n = init.size();
  const Vector& w = problem.piece_widths;
  if (w.size() != n || bounds.lower.size() != n || bounds.upper.size() != n) {
    throw std::invalid_argument("pdas_solve: inconsistent dimensions");
  }

  OptimizerState st;
  st.sigma = project_box(init, bounds);
  st.multiplier = Vector::Zero(n);
  st.active_lower.assign(n, 0);
  st.active_upper.assign(n, 0);
  st.status = OptimizerStatus::kIterationCap;

  Vector grad(n);
  Scalar val = problem.value_and_grad(st.sigma, grad);
  Vector riesz = grad.cwiseQuotient(w);
  bool line_search_failed = false;

  for (int outer = 1; outer <= crit.max_outer; ++outer) {
    st.outer_iters = outer;
    const Vector phi = phi_residual(st.sigma, riesz, bounds, crit.pdas_c);
    const Scalar phi_norm = weighted_norm(phi, w);
    st.history.emplace_back(val, phi_norm);
    st.value = val;
    st.phi_norm = phi_norm;

    // Active-set prediction from the primal-dual pair. The multiplier is the
    // Riesz gradient on bound-pinned pieces, so lambda > 0 flags a binding
    // lower bound and lambda < 0 a binding upper bound.
    int n_lower = 0, n_upper = 0;
    for (Index k = 0; k < n; ++k) {
      bool al = st.multiplier[k] +
                    crit.pdas_c * (bounds.lower[k] - st.sigma[k]) > 0;
      bool au = -st.multiplier[k] +
                    crit.pdas_c * (st.sigma[k] - bounds.upper[k]) > 0;
      if (al && au) au = false;
      st.active_lower[k] = al ? 1 : 0;
      st.active_upper[k] = au ? 1 : 0;
      n_lower += al;
      n_upper += au;
    }
    st.trace.push_back({outer, 0, val, phi_norm, n_lower, n_upper});

    if (phi_norm <= crit.phi_tol) {
      st.status = OptimizerStatus::kConverged;
      return st;
    }
    if (line_search_failed) {
      st.status = OptimizerStatus::kLineSearchFailure;
      return st;
    }

    for (Index k = 0; k < n; ++k) {
      if (st.active_lower[k]) st.sigma[k] = bounds.lower[k];
      if (st.active_upper[k]) st.sigma[k] = bounds.upper[k];
    }

    std::vector<Index> free_idx;
    free_idx.reserve(n);
    for (Index k = 0; k < n; ++k) {
      if (!st.active_lower[k] && !st.active_upper[k]) free_idx.push_back(k);
    }

    if (!free_idx.empty()) {
      const Index m = static_cast<Index>(free_idx.size());
      Vector wf(m);
      for (Index r = 0; r < m; ++r) wf[r] = w[free_idx[r]];
      // Riesz-consistent initial scaling; restarted whenever the active set
      // changes, so stale curvature never crosses a set change.
      Matrix H = Matrix::Zero(m, m);
      for (Index r = 0; r < m; ++r) H(r, r) = 1.0 / wf[r];

      Vector gf(m);
      for (Index r = 0; r < m; ++r) gf[r] = grad[free_idx[r]];

      auto pinned_mask = [&]() {
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(m));
        for (Index r = 0; r < m; ++r) {
          const Index k = free_idx[r];
          mask[static_cast<std::size_t>(r)] =
              (st.sigma[k] <= bounds.lower[k] || st.sigma[k] >= bounds.upper[k])
                  ? 1
                  : 0;
        }
        return mask;
      };
      std::vector<std::uint8_t> pinned = pinned_mask();

      for (int inner = 1; inner <= crit.max_inner; ++inner) {
        Vector phif(m);
        for (Index r = 0; r < m; ++r) {
          const Index k = free_idx[r];
          const Scalar target = std::clamp(
              st.sigma[k] - crit.pdas_c * riesz[k], bounds.lower[k],
              bounds.upper[k]);
          phif[r] = st.sigma[k] - target;
        }
        if (weighted_norm(phif, wf) <= crit.phi_tol) break;

        Vector p = -(H * gf);
        if (p.dot(gf) >= 0) {  // non-descent model: reset to the scaled identity
          H = Matrix::Zero(m, m);
          for (Index r = 0; r < m; ++r) H(r, r) = 1.0 / wf[r];
          p = -(H * gf);
        }

        Vector trial = st.sigma;
        Vector step(m);
        auto try_step = [&](Scalar t, Scalar& tv) {
          Scalar dir = 0;
          for (Index r = 0; r < m; ++r) {
            const Index k = free_idx[r];
            const Scalar v = std::clamp(st.sigma[k] + t * p[r],
                                        bounds.lower[k], bounds.upper[k]);
            step[r] = v - st.sigma[k];
            trial[k] = v;
            dir += gf[r] * step[r];
          }
          if (!(step.norm() > 0) || !(dir < 0)) return false;
          tv = problem.value(trial);
          return tv <= val + crit.armijo_c1 * dir;
        };

        Scalar t = 1.0;
        Scalar trial_val = 0;
        bool accepted = false;
        for (int bt = 0; bt <= crit.max_backtracks; ++bt) {
          if (try_step(t, trial_val)) {
            accepted = true;
            break;
          }
          t *= crit.armijo_shrink;
        }
        if (!accepted) {
          // Distinguish genuine failure from stagnation at the evaluation
          // noise floor, where no representable decrease is left.
          Scalar dir1 = 0;
          for (Index r = 0; r < m; ++r) {
            const Index k = free_idx[r];
            const Scalar v = std::clamp(st.sigma[k] + p[r], bounds.lower[k],
                                        bounds.upper[k]);
            dir1 += gf[r] * (v - st.sigma[k]);
          }
          if (std::abs(dir1) > 1e-13 * (1.0 + std::abs(val))) {
            line_search_failed = true;
          }
          break;
        }
        if (t == 1.0) {
          // The quasi-Newton model can underestimate the step badly in
          // near-linear regions; expand while sufficient decrease holds.
          Vector best_trial = trial;
          Vector best_step = step;
          Scalar best_val = trial_val;
          for (int grow = 0; grow < 40; ++grow) {
            Scalar tv = 0;
            if (!try_step(t * 2.0, tv) || tv >= best_val) break;
            t *= 2.0;
            best_trial = trial;
            best_step = step;
            best_val = tv;
          }
          trial = best_trial;
          step = best_step;
          trial_val = best_val;
        }

        Vector grad_new(n);
        const Scalar val_new = problem.value_and_grad(trial, grad_new);
        Vector gf_new(m);
        for (Index r = 0; r < m; ++r) gf_new[r] = grad_new[free_idx[r]];

        st.sigma = trial;
        std::vector<std::uint8_t> pinned_new = pinned_mask();
        if (pinned_new != pinned) {
          // projection pinned or released pieces: curvature pairs across the
          // change are invalid, restart from the scaled identity
          H = Matrix::Zero(m, m);
          for (Index r = 0; r < m; ++r) H(r, r) = 1.0 / wf[r];
          pinned = std::move(pinned_new);
        } else {
          const Vector y = gf_new - gf;
          const Scalar sy = step.dot(y);
          if (sy > 1e-12 * step.norm() * y.norm()) {
            const Scalar rho = 1.0 / sy;
            const Vector hy = H * y;
            const Scalar yhy = y.dot(hy);
            H += ((1.0 + rho * yhy) * rho) * (step * step.transpose());
            H -= rho * (hy * step.transpose() + step * hy.transpose());
          }
        }

        val = val_new;
        grad = grad_new;
        gf = gf_new;
        riesz = grad.cwiseQuotient(w);
        ++st.inner_iters;
        st.trace.push_back({outer, inner, val,
                            weighted_norm(phif, wf), n_lower, n_upper});
      }
    }

    // Multipliers live on bound-pinned pieces only; elsewhere zero. The next
    // classification turns outward-pushing pinned pieces into active ones.
    st.multiplier.setZero();
    for (Index k = 0; k < n; ++k) {
      if (st.sigma[k] <= bounds.lower[k] || st.sigma[k] >= bounds.upper[k]) {
        st.multiplier[k] = riesz[k];
      }
    }
    st.value = val;
  }

  // Cap exhausted: record the final stationarity measure.
  const Vector phi = phi_residual(st.sigma, riesz, bounds, crit.pdas_c);
  st.phi_norm = weighted_norm(phi, w);
  st.value = val;
  if (st.phi_norm <= crit.phi_tol) st.status = OptimizerStatus::kConverged;
  return st;
}

ScalarFitResult learn_scalar_nu(const Objective& problem, Scalar nu_lo,
                                Scalar nu_hi, Scalar nu_init,
                                const StoppingCriteria& crit) {
  if (!(nu_lo > 0) || !(nu_lo < nu_hi)) {
    throw std::invalid_argument("learn_scalar_nu: need 0 < nu_lo < nu_hi");
  }
  const Index n = problem.piece_widths.size();
  Objective tied;
  tied.piece_widths = Vector::Constant(1, problem.piece_widths.sum());
  tied.value = [&problem, n](const Vector& v) {
    return problem.value(Vector::Constant(n, v[0]));
  };
  tied.value_and_grad = [&problem, n](const Vector& v, Vector& g) {
    Vector full_grad(n);
    const Scalar val =
        problem.value_and_grad(Vector::Constant(n, v[0]), full_grad);
    g.resize(1);
    g[0] = full_grad.sum();
    return val;
  };
  BoxBounds bounds;
  bounds.lower = Vector::Constant(1, nu_lo);
  bounds.upper = Vector::Constant(1, nu_hi);

  ScalarFitResult fit;
  fit.state = pdas_solve(tied, bounds, Vector::Constant(1, nu_init), crit);
  fit.nu = fit.state.sigma[0];
  return fit;
}

}  // namespace nlreg

#include "nlreg/nonlocal.hpp"

#include "nlreg/forward.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace nlreg {
namespace {

// Integral of z^{mu-1} over (a,b), i.e. (b^mu - a^mu)/mu, with the log(b/a)
// limit as mu -> 0. expm1 keeps the difference stable for |mu| near zero
// (the s = 1/2 logarithmic case and its neighborhood). Long double absorbs
// the cancellation left by the binomial recombination of shifted moments.
long double powdiff(long double a, long double b, long double mu) {
  if (a <= 0.0L) return powl(b, mu) / mu;  // only reached with mu > 0
  const long double lr = logl(b / a);
  if (fabsl(mu) < 1e-12L) return lr;
  return powl(a, mu) * expm1l(mu * lr) / mu;
}

// Exact integral of u_a(y + sa) * u_b(y + sb) over (ylo, yhi). The integrand
// is piecewise quadratic with kinks where either shifted hat changes slope,
// so two-point Gauss per kink-free segment is exact.
double hat_product_integral(const Mesh1D& mesh, Index a, double sa, Index b,
                            double sb, double ylo, double yhi) {
  const double h = mesh.h;
  const double xa = mesh.node(a), xb = mesh.node(b);
  const double alo = xa - h - sa, ahi = xa + h - sa;
  const double blo = xb - h - sb, bhi = xb + h - sb;
  const double lo = std::max({ylo, alo, blo});
  const double hi = std::min({yhi, ahi, bhi});
  if (hi <= lo) return 0.0;

  std::array<double, 8> pts;
  int npts = 0;
  pts[npts++] = lo;
  for (double c : {xa - sa, xb - sb}) {
    if (c > lo && c < hi) pts[npts++] = c;
  }
  pts[npts++] = hi;
  std::sort(pts.begin(), pts.begin() + npts);

  constexpr double kGauss = 0.28867513459481288;  // 1/(2 sqrt 3)
  double total = 0.0;
  for (int m = 0; m + 1 < npts; ++m) {
    const double w = pts[m + 1] - pts[m];
    if (w <= 0) continue;
    const double mid = 0.5 * (pts[m] + pts[m + 1]);
    const double y1 = mid - kGauss * w, y2 = mid + kGauss * w;
    total += 0.5 * w *
             (mesh.hat(a, y1 + sa) * mesh.hat(b, y1 + sb) +
              mesh.hat(a, y2 + sa) * mesh.hat(b, y2 + sb));
  }
  return total;
}

// G_ij(z) = int_0^{1-z} (u_i(y+z) - u_i(y)) (u_j(y+z) - u_j(y)) dy for z > 0,
// expanded into four single-product integrals:
//   int_z^1 u_i u_j dx + int_0^{1-z} u_i u_j dy
//   - int_0^{1-z} u_i(y+z) u_j(y) dy - int_0^{1-z} u_j(y+z) u_i(y) dy.
// As a function of z this is piecewise cubic with kinks only at multiples of
// the mesh width (all hat kinks and domain truncation points sit on the node
// lattice or on the lattice shifted by z).
double correlation(const Mesh1D& mesh, Index i, Index j, double z) {
  return hat_product_integral(mesh, i, 0.0, j, 0.0, z, 1.0) +
         hat_product_integral(mesh, i, 0.0, j, 0.0, 0.0, 1.0 - z) -
         hat_product_integral(mesh, i, z, j, 0.0, 0.0, 1.0 - z) -
         hat_product_integral(mesh, j, z, i, 0.0, 0.0, 1.0 - z);
}

// Monomial coefficients of the four Lagrange cardinal polynomials for the
// interior sample points tau = {1/8, 3/8, 5/8, 7/8}; column q maps the q-th
// sample value to the tau-basis coefficients of the interpolating cubic.
struct Vandermonde4 {
  long double inv[4][4];
  Vandermonde4() {
    const long double tau[4] = {0.125L, 0.375L, 0.625L, 0.875L};
    for (int q = 0; q < 4; ++q) {
      long double num[4] = {1.0L, 0.0L, 0.0L, 0.0L};  // running product
      long double denom = 1.0L;
      int deg = 0;
      for (int r = 0; r < 4; ++r) {
        if (r == q) continue;
        for (int p = deg; p >= 0; --p) {
          num[p + 1] += num[p];
          num[p] *= -tau[r];
        }
        ++deg;
        denom *= tau[q] - tau[r];
      }
      for (int p = 0; p < 4; ++p) inv[p][q] = num[p] / denom;
    }
  }
};

// One z-interval (z0, z0+width) of the piecewise-cubic correlation function.
// For the interval touching z = 0 the cubic is constrained to z^2 (c0 + c1 z)
// (the correlation vanishes to second order), which keeps the weighted
// moments finite against the z^{-1-2s} kernel.
struct IntervalFit {
  bool constrained = false;
  bool zero = true;
  long double c[4] = {0.0L, 0.0L, 0.0L, 0.0L};
  double z0 = 0;
  double width = 0;
};

IntervalFit fit_interval(const Mesh1D& mesh, Index i, Index j, Index m) {
  static const Vandermonde4 vmd;
  const double n1 = static_cast<double>(mesh.n_nodes - 1);
  IntervalFit f;
  f.z0 = static_cast<double>(m) / n1;
  f.width = static_cast<double>(m + 1) / n1 - f.z0;
  f.constrained = (m == 0);
  if (f.constrained) {
    const double za = f.width / 3.0, zb = 2.0 * f.width / 3.0;
    const double ga = correlation(mesh, i, j, za);
    const double gb = correlation(mesh, i, j, zb);
    if (ga == 0.0 && gb == 0.0) return f;
    const long double ra = static_cast<long double>(ga) / za / za;
    const long double rb = static_cast<long double>(gb) / zb / zb;
    f.c[1] = (rb - ra) / (static_cast<long double>(zb) - za);
    f.c[0] = ra - f.c[1] * za;
    f.zero = false;
  } else {
    const double tau[4] = {0.125, 0.375, 0.625, 0.875};
    long double g[4];
    bool all_zero = true;
    for (int q = 0; q < 4; ++q) {
      g[q] = correlation(mesh, i, j, f.z0 + tau[q] * f.width);
      if (g[q] != 0.0L) all_zero = false;
    }
    if (all_zero) return f;
    for (int p = 0; p < 4; ++p) {
      long double cp = 0.0L;
      for (int q = 0; q < 4; ++q) cp += vmd.inv[p][q] * g[q];
      f.c[p] = cp;
    }
    f.zero = false;
  }
  return f;
}

// int_a^b P(z) z^{-1-2s} dz for the fitted piece, (a,b) inside the interval.
// Unconstrained pieces expand the tau-basis cubic into shifted moments
// mu_p = int (z-z0)^p z^{-1-2s} dz via the binomial theorem.
double integrate_fit(const IntervalFit& f, double a, double b, double two_s) {
  if (f.zero) return 0.0;
  if (f.constrained) {
    return static_cast<double>(f.c[0] * powdiff(a, b, 2.0L - two_s) +
                               f.c[1] * powdiff(a, b, 3.0L - two_s));
  }
  long double base[4];
  for (int q = 0; q < 4; ++q) {
    base[q] = powdiff(a, b, static_cast<long double>(q) - two_s);
  }
  static const long double binom[4][4] = {
      {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  const long double z0 = f.z0;
  long double total = 0.0L;
  long double hp = 1.0L;  // width^p
  for (int p = 0; p < 4; ++p) {
    long double mu = 0.0L;
    long double zpow = 1.0L;  // (-z0)^{p-q}, q descending from p
    for (int q = p; q >= 0; --q) {
      mu += binom[p][q] * zpow * base[q];
      zpow *= -z0;
    }
    total += f.c[p] * mu / hp;
    hp *= f.width;
  }
  return static_cast<double>(total);
}

// Inclusive range of z-intervals on which G_ij can be nonzero. Cross terms
// live on (|i-j|-2, |i-j|+2)*h; the u_i u_j terms (|i-j| <= 1 only) persist
// until the truncation windows pass the support of the product.
std::pair<Index, Index> interval_range(const Mesh1D& mesh, Index i, Index j) {
  const Index n_int = mesh.n_nodes - 1;
  const Index c = (j >= i) ? (j - i) : (i - j);
  if (c >= 2) {
    return {std::max<Index>(0, c - 2), std::min<Index>(n_int - 1, c + 1)};
  }
  const double h = mesh.h;
  const double lo = std::max(0.0, std::max(mesh.node(i), mesh.node(j)) - h);
  const double hi = std::min(1.0, std::min(mesh.node(i), mesh.node(j)) + h);
  const double z_max =
      std::max({hi, 1.0 - lo, static_cast<double>(c + 2) * h});
  const Index m_hi = static_cast<Index>(std::ceil(z_max / h + 1e-9));
  return {0, std::min(n_int - 1, m_hi)};
}

// Shared driver: integrates every pair against the kernel over the bands
// delimited by `cuts` (strictly increasing, cuts.front() == 0) and hands
// each contribution to `emit(i, j, band, value)` with i <= j.
template <class Emit>
void assemble_core(const Mesh1D& mesh, Scalar s, const std::vector<double>& cuts,
                   Emit&& emit) {
  const double two_s = 2.0 * s;
  const Index n = mesh.n_nodes;
  const Index n_bands = static_cast<Index>(cuts.size()) - 1;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const auto [m_lo, m_hi] = interval_range(mesh, i, j);
      for (Index m = m_lo; m <= m_hi; ++m) {
        const IntervalFit fit = fit_interval(mesh, i, j, m);
        if (fit.zero) continue;
        const double z0 = fit.z0, z1 = fit.z0 + fit.width;
        auto it = std::upper_bound(cuts.begin(), cuts.end(), z0);
        Index k = std::max<Index>(
            0, static_cast<Index>(it - cuts.begin()) - 1);
        for (; k < n_bands && cuts[k] < z1; ++k) {
          const double a = std::max(cuts[k], z0);
          const double b = std::min(cuts[k + 1], z1);
          if (b <= a) continue;
          const double val = 2.0 * integrate_fit(fit, a, b, two_s);
          if (val != 0.0) emit(i, j, k, val);
        }
      }
    }
  }
}

}  // namespace

NonlocalTensor assemble_band_matrices(const Mesh1D& mesh,
                                      const WeightGrid& grid, Scalar s) {
  if (!(s > 0.0 && s < 1.0)) {
    throw std::invalid_argument("assemble_band_matrices: s must lie in (0,1)");
  }
  if (grid.n_pieces < 1) {
    throw std::invalid_argument("assemble_band_matrices: empty weight grid");
  }
  std::vector<double> cuts(grid.n_pieces + 1);
  for (Index k = 0; k <= grid.n_pieces; ++k) cuts[k] = grid.breakpoint(k);

  using Triplet = Eigen::Triplet<Scalar>;
  std::vector<std::vector<Triplet>> trips(grid.n_pieces);
  assemble_core(mesh, s, cuts, [&](Index i, Index j, Index k, double v) {
    trips[k].emplace_back(i, j, v);
    if (i != j) trips[k].emplace_back(j, i, v);
  });

  NonlocalTensor tensor;
  tensor.s = s;
  tensor.mesh = mesh;
  tensor.grid = grid;
  tensor.matrices.resize(grid.n_pieces);
  for (Index k = 0; k < grid.n_pieces; ++k) {
    tensor.matrices[k].resize(mesh.n_nodes, mesh.n_nodes);
    tensor.matrices[k].setFromTriplets(trips[k].begin(), trips[k].end());
    tensor.matrices[k].makeCompressed();
  }
  return tensor;
}

Matrix assemble_full_range(const Mesh1D& mesh, Scalar s, Scalar d) {
  if (!(s > 0.0 && s < 1.0)) {
    throw std::invalid_argument("assemble_full_range: s must lie in (0,1)");
  }
  Matrix full = Matrix::Zero(mesh.n_nodes, mesh.n_nodes);
  const std::vector<double> cuts = {0.0, d};
  assemble_core(mesh, s, cuts, [&](Index i, Index j, Index, double v) {
    full(i, j) += v;
    if (i != j) full(j, i) += v;
  });
  return full;
}

namespace {

void require_same_grid(const NonlocalTensor& tensor, const WeightVector& sigma) {
  if (!(tensor.grid == sigma.grid) ||
      sigma.values.size() != tensor.grid.n_pieces) {
    throw std::invalid_argument("weight grid does not match the tensor");
  }
}

}  // namespace

Matrix weighted_operator(const NonlocalTensor& tensor,
                         const WeightVector& sigma) {
  require_same_grid(tensor, sigma);
  Matrix L = Matrix::Zero(tensor.n_nodes(), tensor.n_nodes());
  for (Index k = 0; k < tensor.n_pieces(); ++k) {
    const Scalar w = sigma.values[k];
    if (w == 0.0) continue;
    const SparseMat& a = tensor.matrices[k];
    for (Index col = 0; col < a.outerSize(); ++col) {
      for (SparseMat::InnerIterator it(a, col); it; ++it) {
        L(it.row(), it.col()) += w * it.value();
      }
    }
  }
  return L;
}

Vector apply_L(const NonlocalTensor& tensor, const WeightVector& sigma,
               const Vector& u) {
  require_same_grid(tensor, sigma);
  if (u.size() != tensor.n_nodes()) {
    throw std::invalid_argument("apply_L: length mismatch");
  }
  Vector out = Vector::Zero(u.size());
  for (Index k = 0; k < tensor.n_pieces(); ++k) {
    const Scalar w = sigma.values[k];
    if (w == 0.0) continue;
    out.noalias() += w * (tensor.matrices[k] * u);
  }
  return out;
}

Scalar seminorm_sq(const NonlocalTensor& tensor, const WeightVector& sigma,
                   const Vector& u) {
  require_same_grid(tensor, sigma);
  if (u.size() != tensor.n_nodes()) {
    throw std::invalid_argument("seminorm_sq: length mismatch");
  }
  Scalar total = 0;
  for (Index k = 0; k < tensor.n_pieces(); ++k) {
    const Scalar w = sigma.values[k];
    if (w == 0.0) continue;
    total += w * u.dot(tensor.matrices[k] * u);
  }
  return total;
}

NormEquivalenceReport check_norm_equivalence(const NonlocalTensor& tensor,
                                             const WeightVector& sigma,
                                             const Vector& u) {
  require_same_grid(tensor, sigma);
  require_feasible(sigma);
  const Index npc = tensor.n_pieces();
  Vector band_form(npc);
  for (Index k = 0; k < npc; ++k) {
    band_form[k] = u.dot(tensor.matrices[k] * u);
  }
  const Scalar weighted = sigma.values.dot(band_form);
  const Scalar hs = band_form.sum();
  const Matrix m = mass_matrix(tensor.mesh);
  const Scalar l2 = u.dot(m * u);

  // Largest breakpoint not above delta; the lower-band guarantee of the
  // weight class holds piecewise, so the far-field constant must use it.
  Index k_eff = 0;
  while (k_eff < npc &&
         piece_in_lower_band(tensor.grid, k_eff, sigma.delta)) {
    ++k_eff;
  }
  const Scalar delta_eff = tensor.grid.breakpoint(k_eff);

  NormEquivalenceReport rep;
  rep.lhs_upper = weighted;
  rep.rhs_upper = sigma.gamma2 * hs;
  rep.lhs_lower = hs;
  if (delta_eff > 0) {
    rep.rhs_lower = weighted / sigma.gamma1 +
                    4.0 * std::pow(delta_eff, -1.0 - 2.0 * tensor.s) * l2;
  } else {
    rep.rhs_lower = std::numeric_limits<Scalar>::infinity();
  }
  const Scalar slack = 1e-10;
  auto holds = [slack](Scalar lhs, Scalar rhs) {
    return lhs <= rhs + slack * std::max({std::abs(lhs), std::abs(rhs), 1e-30});
  };
  rep.pass = holds(rep.lhs_upper, rep.rhs_upper) &&
             holds(rep.lhs_lower, rep.rhs_lower);
  return rep;
}

void dump_band_matrices_csv(const NonlocalTensor& tensor, std::ostream& out) {
  out << "row,col,k,value\n";
  char buf[40];
  for (Index k = 0; k < tensor.n_pieces(); ++k) {
    const SparseMat& a = tensor.matrices[k];
    for (Index col = 0; col < a.outerSize(); ++col) {
      for (SparseMat::InnerIterator it(a, col); it; ++it) {
        std::snprintf(buf, sizeof(buf), "%.17g", it.value());
        out << it.row() << ',' << it.col() << ',' << k << ',' << buf << '\n';
      }
    }
  }
}

}  // namespace nlreg

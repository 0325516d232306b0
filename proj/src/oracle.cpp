#include "nlreg/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace nlreg {
namespace {

struct QuadAcc {
  double err = 0;
  bool ok = true;
};

template <class F>
double simpson_rec(const F& f, double a, double fa, double m, double fm,
                   double b, double fb, double whole, double tol, int depth,
                   QuadAcc& acc) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Relative floor keeps rounding noise from exhausting the recursion depth.
  const double quit = std::max(15.0 * tol, 1e-14 * (std::abs(left) +
                                                    std::abs(right)));
  if (std::abs(delta) <= quit || depth <= 0) {
    acc.err += std::abs(delta) / 15.0;
    if (depth <= 0 && std::abs(delta) > quit) acc.ok = false;
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1,
                     acc) +
         simpson_rec(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1,
                     acc);
}

// Adaptive Simpson seeded with splits at golden-ratio fractions. The
// integrand is piecewise smooth with kinks at rational positions; midpoint
// halving alone can sample such functions on a single coincident parabola
// and fake convergence, and irrational seed points break that alignment.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, int depth,
                        QuadAcc& acc) {
  if (b <= a) return 0.0;
  constexpr double kSeed[3] = {0.23606797749978969, 0.47213595499957939,
                               0.76393202250021031};
  const double w = b - a;
  const double edges[5] = {a, a + kSeed[0] * w, a + kSeed[1] * w,
                           a + kSeed[2] * w, b};
  double total = 0.0;
  for (int p = 0; p < 4; ++p) {
    const double pa = edges[p], pb = edges[p + 1];
    const double m = 0.5 * (pa + pb);
    const double fa = f(pa), fm = f(m), fb = f(pb);
    const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_rec(f, pa, fa, m, fm, pb, fb, whole, 0.25 * tol, depth,
                         acc);
  }
  return total;
}

// G(z) = int_0^{1-z} (u_i(y+z) - u_i(y)) (u_j(y+z) - u_j(y)) dy, evaluated
// exactly: the integrand is piecewise quadratic with kinks only where a hat
// changes slope (node positions, possibly shifted by z), so a three-point
// Gauss rule per kink-free cell is exact. Works directly on the difference
// product; the band assembly never forms this function pointwise.
double correlation_exact(const Mesh1D& mesh, Index i, Index j, double z) {
  if (z >= 1.0) return 0.0;
  const double h = mesh.h;
  const double xi = mesh.node(i), xj = mesh.node(j);
  const double lo = std::max(0.0, std::min(xi, xj) - h - z);
  const double hi = std::min(1.0 - z, std::max(xi, xj) + h);
  if (hi <= lo) return 0.0;

  std::array<double, 14> cut;
  int nc = 0;
  cut[nc++] = lo;
  for (Index a : {i - 1, i, i + 1, j - 1, j, j + 1}) {
    if (a < 0 || a >= mesh.n_nodes) continue;
    const double x = mesh.node(a);
    if (x > lo && x < hi) cut[nc++] = x;
    if (x - z > lo && x - z < hi) cut[nc++] = x - z;
  }
  cut[nc++] = hi;
  std::sort(cut.begin(), cut.begin() + nc);

  auto f = [&](double y) {
    return (mesh.hat(i, y + z) - mesh.hat(i, y)) *
           (mesh.hat(j, y + z) - mesh.hat(j, y));
  };
  constexpr double kNode = 0.7745966692414834;  // sqrt(3/5)
  constexpr double kWc = 8.0 / 18.0, kWs = 5.0 / 18.0;
  double total = 0.0;
  for (int c = 0; c + 1 < nc; ++c) {
    const double w = cut[c + 1] - cut[c];
    if (w <= 0) continue;
    const double mid = 0.5 * (cut[c] + cut[c + 1]);
    const double off = 0.5 * w * kNode;
    total += w * (kWs * f(mid - off) + kWc * f(mid) + kWs * f(mid + off));
  }
  return total;
}

double powdiff(double a, double b, double mu) {
  if (a <= 0.0) return std::pow(b, mu) / mu;
  const double lr = std::log(b / a);
  if (std::abs(mu) < 1e-12) return lr;
  return std::pow(a, mu) * std::expm1(mu * lr) / mu;
}

}  // namespace

OracleResult oracle_entry(const Mesh1D& mesh, Scalar t_lo, Scalar t_hi,
                          Scalar s, Index i, Index j, Scalar tol) {
  if (!(t_lo >= 0.0 && t_lo < t_hi && t_hi <= 1.0)) {
    throw std::invalid_argument("oracle_entry: need 0 <= t_lo < t_hi <= d");
  }
  if (!(s > 0.0 && s < 1.0)) {
    throw std::invalid_argument("oracle_entry: s must lie in (0,1)");
  }
  if (i < 0 || j < 0 || i >= mesh.n_nodes || j >= mesh.n_nodes) {
    throw std::invalid_argument("oracle_entry: node index out of range");
  }
  const double two_s = 2.0 * s;
  const double h = mesh.h;
  QuadAcc acc;
  double result = 0.0;

  // Near z = 0 the correlation is exactly z^2 (d0 + d1 z) on (0, h): the hat
  // differences are O(z) and the piecewise-cubic structure has no kink below
  // h. Two stable evaluations at moderate shifts determine d0 and d1, and
  // the singular part of the band integrates in closed form against them.
  // Direct quadrature takes over above z_cut, where u(y+z) - u(y) is still
  // far from the double-precision cancellation floor.
  const double z_cut = std::min(1e-3 * h, static_cast<double>(t_hi));
  if (t_lo < z_cut) {
    const double za = 0.2 * h, zb = 0.8 * h;
    const double ra = correlation_exact(mesh, i, j, za) / (za * za);
    const double rb = correlation_exact(mesh, i, j, zb) / (zb * zb);
    const double d1 = (rb - ra) / (zb - za);
    const double d0 = ra - d1 * za;
    result += d0 * powdiff(t_lo, z_cut, 2.0 - two_s) +
              d1 * powdiff(t_lo, z_cut, 3.0 - two_s);
  }

  const double q_lo = std::max(static_cast<double>(t_lo), z_cut);
  if (q_lo < t_hi) {
    auto weighted = [&](double z) {
      return std::pow(z, -1.0 - two_s) * correlation_exact(mesh, i, j, z);
    };
    // geometric grading toward the singular end of the band
    std::vector<double> panel{static_cast<double>(t_hi)};
    double edge = t_hi;
    while (edge * 0.5 > q_lo) {
      edge *= 0.5;
      panel.push_back(edge);
    }
    panel.push_back(q_lo);
    const double panel_tol = 0.5 * tol / static_cast<double>(panel.size());
    for (std::size_t p = 0; p + 1 < panel.size(); ++p) {
      result += adaptive_simpson(weighted, panel[p + 1], panel[p], panel_tol,
                                 45, acc);
    }
  }

  OracleResult res;
  res.value = 2.0 * result;
  res.residual = 2.0 * acc.err;
  res.converged = acc.ok;
  return res;
}

}  // namespace nlreg

#pragma once

#include <iosfwd>
#include <vector>

#include "nlreg/mesh.hpp"
#include "nlreg/types.hpp"
#include "nlreg/weights.hpp"

namespace nlreg {

/// Discrete nonlocal bilinear form split into per-distance-band matrices:
/// u^T L(sigma) v = sum_k sigma_k u^T A_k v, where
///   (A_k)_ij = iint_{|x-y| in (t_k, t_{k+1})}
///              (u_i(x)-u_i(y)) (u_j(x)-u_j(y)) / |x-y|^{1+2s} dx dy.
/// Each A_k is symmetric PSD with the constant vector in its kernel, and
/// sum_k A_k is the fractional Sobolev seminorm matrix (sigma == 1).
struct NonlocalTensor {
  Scalar s = 0.5;
  Mesh1D mesh;
  WeightGrid grid;
  std::vector<SparseMat> matrices;  // one per piece, n_nodes x n_nodes

  Index n_nodes() const { return mesh.n_nodes; }
  Index n_pieces() const { return grid.n_pieces; }
};

NonlocalTensor assemble_band_matrices(const Mesh1D& mesh,
                                      const WeightGrid& grid, Scalar s);

// Single-band assembly over the full distance range (0,d): the H^s seminorm
// matrix. Used as the sigma == 1 reference for the band-partition invariant.
Matrix assemble_full_range(const Mesh1D& mesh, Scalar s, Scalar d = 1.0);

// Dense L(sigma) = sum_k sigma_k A_k.
Matrix weighted_operator(const NonlocalTensor& tensor,
                         const WeightVector& sigma);

// (sum_k sigma_k A_k) u; linear in sigma and in u.
Vector apply_L(const NonlocalTensor& tensor, const WeightVector& sigma,
               const Vector& u);

// u^T L(sigma) u >= 0; zero exactly on constants for admissible sigma
// with delta >= h.
Scalar seminorm_sq(const NonlocalTensor& tensor, const WeightVector& sigma,
                   const Vector& u);

/// Two-sided comparison of the weighted seminorm with the H^s seminorm:
///   |u|^2_{sigma,s} <= gamma2 |u|^2_{H^s}
///   |u|^2_{H^s}     <= gamma1^{-1} |u|^2_{sigma,s}
///                      + 4 |Omega| delta_eff^{-1-2s} ||u||^2_{L2}
/// delta_eff is the largest grid breakpoint <= delta, so the bound is exact
/// for weights whose lower bound holds piecewise (it equals delta whenever
/// delta is a breakpoint, in particular for delta = d).
struct NormEquivalenceReport {
  Scalar lhs_upper = 0;  // |u|^2_{sigma,s}
  Scalar rhs_upper = 0;  // gamma2 |u|^2_{H^s}
  Scalar lhs_lower = 0;  // |u|^2_{H^s}
  Scalar rhs_lower = 0;  // gamma1^{-1}|u|^2_{sigma,s} + 4 delta_eff^{-1-2s}||u||^2
  bool pass = false;
};

NormEquivalenceReport check_norm_equivalence(const NonlocalTensor& tensor,
                                             const WeightVector& sigma,
                                             const Vector& u);

// Debug dump: rows (row, col, k, value) with 17 significant digits.
void dump_band_matrices_csv(const NonlocalTensor& tensor, std::ostream& out);

}  // namespace nlreg

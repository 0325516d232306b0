#pragma once

#include "nlreg/mesh.hpp"
#include "nlreg/types.hpp"

namespace nlreg {

/// Result of the brute-force quadrature oracle for one band-matrix entry.
/// residual is the accumulated error estimate of the adaptive scheme;
/// converged is false when a recursion-depth cap was hit before the
/// requested tolerance was met (callers should then fail their check).
struct OracleResult {
  Scalar value = 0;
  Scalar residual = 0;
  bool converged = true;
};

/// Independent evaluation of
///   iint_{|x-y| in (t_lo, t_hi)} (u_i(x)-u_i(y))(u_j(x)-u_j(y))
///                                / |x-y|^{1+2s} dx dy
/// by nested adaptive Simpson quadrature in the shifted variable z = x - y,
/// with geometrically graded panels toward z = 0 when the band touches the
/// kernel singularity. Shares no code with assemble_band_matrices; used to
/// validate it.
OracleResult oracle_entry(const Mesh1D& mesh, Scalar t_lo, Scalar t_hi,
                          Scalar s, Index i, Index j, Scalar tol = 1e-12);

}  // namespace nlreg

#pragma once

// Kato-class moduli, the resolvent criterion, the form bound and the
// spectral decomposition of the Schrodinger-Anderson form -H_c + a.

#include <cstddef>
#include <limits>
#include <vector>

#include "anderson/anderson_operator.hpp"
#include "anderson/torus_grid.hpp"

namespace anderson {

/// A potential a together with the L^p class it is claimed to belong to.
struct Potential {
  GridField field;
  double declared_p = std::numeric_limits<double>::infinity();

  Potential(GridField a, double p);
};

struct Spectrum {
  /// Ascending mu_0 <= mu_1 <= ...
  std::vector<double> eigenvalues;
  /// L2-orthonormal eigenfields.
  std::vector<GridField> eigenfields;
  /// ||(-H_c + a) e_i - mu_i e_i||_{L2}.
  std::vector<double> residuals;
  /// Largest index with mu_i <= 0, -1 if mu_0 > 0.
  int m = -1;
  /// False when every computed eigenvalue is <= 0, so m may be larger.
  bool m_resolved = false;
  /// Pencil gap on the complement of e_0..e_m (NaN when not computed).
  double delta = std::numeric_limits<double>::quiet_NaN();
};

/// sup_x h^2 sum_{d(x,y) < r} |ln d(x,y)| |a(y)|, with |ln(h/2)| at y = x.
double kato_modulus_log(const Potential& a, double r);

/// sup_x int_0^T (e^{s H_c} |a|)(x) ds on a 16-node geometric time grid.
double kato_modulus_heat(const AndersonOperator& op, const Potential& a, double T);

/// ||(-H_c + lambda)^{-1} |a|||_inf.
double resolvent_sup_norm(const AndersonOperator& op, const Potential& a, double lambda);

/// Smallest m_eta with <u, |a| u> <= eta ||u||_E^2 + m_eta ||u||^2 on the grid.
double form_bound_constant(const AndersonOperator& op, const Potential& a, double eta);

/// Lowest `count` eigenpairs of -H_c + a. Degenerate clusters (gap < 1e-9)
/// are rotated onto the canonical Fourier order and every eigenfield is
/// signed so that its largest-magnitude entry is positive.
Spectrum eigendecompose(const AndersonOperator& op, const Potential& a, std::size_t count);

/// min of v^T(-H_c + a)v / v^T(-H_c)v over v orthogonal to e_0..e_m.
double gap_delta(const AndersonOperator& op, const Potential& a, const Spectrum& spectrum);

}  // namespace anderson

#pragma once

// The discrete Anderson operator H = Delta + xi on the torus grid.
//
// H is a genuine symmetric matrix at fixed resolution: Delta acts through the
// Fourier multiplier -|k|^2 and xi by pointwise multiplication. The shift
// c = max(lambda_max(H), 0) + 1 makes -H_c = -H + c >= 1, and the energy norm
// is ||u||_E = sqrt(<(-H + c) u, u>).
//
// Grids with n <= dense_max_n use dense symmetric eigendecompositions; larger
// grids use LOBPCG and Krylov exponentials.

#include <cstddef>
#include <memory>
#include <vector>

#include "anderson/linalg.hpp"
#include "anderson/noise.hpp"
#include "anderson/torus_grid.hpp"

namespace anderson {

struct OperatorOptions {
  std::size_t dense_max_n = 48;
  /// Subtracts (1/2pi) ln n from xi.
  bool renormalize = false;
  double solve_tol = 1e-12;
  std::size_t solve_max_iter = 20000;
};

struct ShiftInfo {
  double c = 1.0;
  double lambda_max_h = 0.0;
};

/// Finds lambda_max(H) and the canonical shift for a noise field.
ShiftInfo compute_shift(const GridField& xi, const OperatorOptions& options = {});

class AndersonOperator {
 public:
  AndersonOperator(NoiseSample xi, OperatorOptions options = {});

  const TorusGrid& grid() const noexcept { return grid_; }
  const NoiseSample& noise() const noexcept { return xi_; }
  /// Potential actually multiplied in H (xi minus the optional renormalisation).
  const GridField& potential() const noexcept { return potential_; }
  double c() const noexcept { return shift_.c; }
  double lambda_max_h() const noexcept { return shift_.lambda_max_h; }
  const OperatorOptions& options() const noexcept { return options_; }
  bool dense() const noexcept { return grid_.n() <= options_.dense_max_n; }

  /// H u = Delta u + xi u.
  GridField apply_h(const GridField& u) const;
  /// -H_c u = (-Delta - xi + c) u.
  GridField apply_neg_hc(const GridField& u) const;
  /// sqrt(<(-H + c) u, u>).
  double energy_norm(const GridField& u) const;
  /// <u, v>_E.
  double energy_inner(const GridField& u, const GridField& v) const;

  /// Solves (-H_c + lambda) u = rhs with PCG, preconditioned by (-Delta + c + lambda)^{-1}.
  GridField resolvent_solve(double lambda, const GridField& rhs) const;
  /// Solves (-H_c + m) u = rhs for a pointwise potential m with -H_c + m positive definite.
  GridField resolvent_solve(const GridField& m, const GridField& rhs) const;

  /// e^{t H_c} u.
  GridField heat_apply(double t, const GridField& u) const;
  /// G(., x0) with (-H_c) G = dirac(x0).
  GridField green_function(GridPoint x0) const;

  /// Dense matrix of -H_c acting on nodal values (n <= dense_max_n only).
  const linalg::Matrix& dense_neg_hc() const;

  // Matrix-free maps on raw node vectors.
  linalg::Vector apply_neg_hc(const linalg::Vector& v) const;
  linalg::Vector precondition(const linalg::Vector& v, double shift) const;

 private:
  struct Cache;

  TorusGrid grid_;
  NoiseSample xi_;
  GridField potential_;
  OperatorOptions options_;
  ShiftInfo shift_;
  std::shared_ptr<Cache> cache_;

  struct DenseEigen {
    linalg::Vector values;   // eigenvalues of -H_c, ascending
    linalg::Matrix vectors;  // Euclidean-orthonormal
  };
  const DenseEigen& dense_eigen() const;
};

/// Result of the heat kernel diagnostics.
struct HeatReport {
  double a1 = 0.0;
  double a2 = 0.0;
  double epsilon = 0.0;
  double min_kernel = 0.0;
  double green_ratio_low = 0.0;
  double green_ratio_high = 0.0;
  /// Least-squares slope of log(t p_t) against d^2 / t.
  double fitted_slope = 0.0;
  double fitted_intercept = 0.0;
  std::size_t samples = 0;
  struct Negative {
    GridPoint x;
    GridPoint y;
    double t;
    double value;
  };
  std::vector<Negative> negative_values;
};

/// Samples heat kernel columns p_t(., y) at a few sources y and fits Gaussian
/// sandwich constants (a1, a2), the decay rate epsilon of e^{t H_c} 1, and the
/// Green function to log-distance ratio band.
HeatReport heat_kernel_diagnostics(const AndersonOperator& op, const std::vector<double>& times,
                                   std::size_t sources = 4);

}  // namespace anderson

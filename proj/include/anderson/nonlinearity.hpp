#pragma once

// Nonlinearities f(x, z) with antiderivative F(x, z) = int_0^z f(x, r) dr,
// described by the growth data (ell, gamma, k) of the variational theory:
// |f| <~ 1 + |z|^(ell-1), f = o(z) at 0, F >= 0 and gamma F <= z f on |z| >= k.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "anderson/torus_grid.hpp"

namespace anderson {

struct Nonlinearity {
  using Pointwise = std::function<double(std::size_t node, double z)>;

  std::string name;
  Pointwise f;
  Pointwise dfdz;
  Pointwise F;
  double ell = 4.0;
  double gamma = 4.0;
  double k = 1.0;
  bool odd = true;

  /// f(z) = z^3.
  static Nonlinearity pow3();
  /// f(z) = z |z|^ell for an even integer ell >= 2.
  static Nonlinearity pow_ell(int ell);
  /// Piecewise-linear interpolation of (z_i, f_i), F integrated exactly.
  static Nonlinearity tabulated(std::vector<double> z, std::vector<double> f, double ell,
                                double gamma, double k, bool odd);
  /// Arbitrary pointwise maps; F is built by Gauss-Legendre quadrature of f.
  static Nonlinearity from_function(std::string name, Pointwise f, Pointwise dfdz, double ell,
                                    double gamma, double k, bool odd);

  GridField eval_f(const GridField& u) const;
  GridField eval_dfdz(const GridField& u) const;
  GridField eval_F(const GridField& u) const;
};

struct AssumptionReport {
  bool passed = true;
  /// Smallest C with |f| <= C (1 + |z|^(ell-1)) on the samples.
  double c_f = 0.0;
  /// Smallest C with |df/dz| <= C (1 + |z|^(ell-2)) on the samples.
  double c_f_prime = 0.0;
  /// F >= c1 |z|^gamma - c2 on the samples.
  double c1 = 0.0;
  double c2 = 0.0;
  /// max |f(x, z) / z| at |z| = 1e-6.
  double small_z_ratio = 0.0;
  struct Violation {
    std::string condition;
    std::size_t node;
    double z;
    double value;
  };
  std::vector<Violation> violations;
};

/// Checks the growth assumptions on sampled (x, z); z samples must reach
/// |z| >= 10 k on both signs.
AssumptionReport check_assumption_a(const Nonlinearity& nl, const std::vector<double>& z_samples,
                                    const std::vector<std::size_t>& x_samples);

}  // namespace anderson

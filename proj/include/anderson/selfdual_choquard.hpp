#pragma once

// Self-dual variational treatment of the Choquard-Pekar equation
//   (-H_c + a) u = (w * f(u)) g(u),   default f(u) = |u|^p, g(u) = |u|^{q-2} u,
// through Lambda u = -(w * f(u)) g(u), phi(u) = 1/2 <A u, u> with A = -H_c + a,
// and I(u) = phi(u) + phi*(-Lambda u) + <Lambda u, u> = 1/2 <r, A^{-1} r>, r = A u + Lambda u.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "anderson/anderson_operator.hpp"
#include "anderson/schrodinger_spectral.hpp"
#include "anderson/torus_grid.hpp"

namespace anderson {

struct ChoquardProblem {
  using Map = std::function<double(double)>;

  AndersonOperator op;
  Potential a;
  GridField w;
  double p = 2.0;
  double q = 3.0;
  /// Pointwise maps and derivatives; defaults are |z|^p and |z|^{q-2} z.
  Map f, df, g, dg;

  ChoquardProblem(AndersonOperator op, Potential a, GridField w, double p = 2.0, double q = 3.0);
  /// Replaces (f, g). Growth |f| <~ 1 + |z|^p, |g| <~ 1 + |z|^{q-1} is assumed.
  ChoquardProblem& with_maps(Map f, Map df, Map g, Map dg);

  const TorusGrid& grid() const { return op.grid(); }
};

GridField lambda_apply(const ChoquardProblem& prob, const GridField& u);

struct LambdaBound {
  /// |(Lambda u)(v)|.
  double lhs = 0.0;
  /// ||w||_1 ||f(u)||_2 ||g(u)||_{2q/(q-1)} ||v||_{2q}.
  double rhs = 0.0;
};

/// Hoelder chain for the pairing (Lambda u)(v); throws InconsistencyError if
/// lhs > rhs (1 + 1e-8).
LambdaBound lambda_bound_check(const ChoquardProblem& prob, const GridField& u, const GridField& v);

/// phi(u) = 1/2 ||u||_E^2 + 1/2 int a u^2.
double quadratic_energy(const ChoquardProblem& prob, const GridField& u);

/// phi*(p) = 1/2 <p, A^{-1} p>.
double fenchel_conjugate_quadratic(const ChoquardProblem& prob, const GridField& p_field);

struct SelfDualTerms {
  double phi = 0.0;
  double phi_star = 0.0;
  double coupling = 0.0;  // <Lambda u, u>
  /// phi + phi_star + coupling.
  double from_conjugate = 0.0;
  /// 1/2 <r, A^{-1} r>.
  double from_residual = 0.0;
};

SelfDualTerms selfdual_terms(const ChoquardProblem& prob, const GridField& u);

/// I(u) from the residual form, after checking it against the conjugate form
/// and non-negativity (InconsistencyError otherwise).
double selfdual_value(const ChoquardProblem& prob, const GridField& u);

/// L2 gradient of I: r + (DLambda)^T A^{-1} r.
GridField selfdual_gradient(const ChoquardProblem& prob, const GridField& u);

struct ChoquardParams {
  /// Stops once I <= tol^2 and ||A u + Lambda u|| <= tol (1 + ||u||).
  double tol = 1e-6;
  std::size_t max_iter = 5000;
};

struct ChoquardResult {
  GridField u;
  double selfdual_value = 0.0;
  double residual_l2 = 0.0;
  std::size_t iterations = 0;
  bool trivial = false;
  std::string method = "selfdual-descent";
  /// I after each accepted step, starting with I(init).
  std::vector<double> trace;

  explicit ChoquardResult(const TorusGrid& grid) : u(grid) {}
};

/// Preconditioned gradient descent with Armijo backtracking on I.
ChoquardResult selfdual_minimize(const ChoquardProblem& prob, const GridField& init,
                                 const ChoquardParams& params = {});

}  // namespace anderson

#include "anderson/selfdual_choquard.hpp"

#include <algorithm>
#include <cmath>

#include "anderson/errors.hpp"

namespace anderson {

namespace {

double l2(const GridField& u) { return norm_lp(u, 2.0); }

GridField map_field(const GridField& u, const ChoquardProblem::Map& fn) {
  GridField out(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = fn(u[i]);
  return out;
}

// w~(x) = w(-x).
GridField reflect(const GridField& w) {
  const TorusGrid& grid = w.grid();
  const std::size_t n = grid.n();
  GridField out(grid);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[grid.index({(n - i) % n, (n - j) % n})] = w[grid.index({i, j})];
    }
  }
  return out;
}

GridField apply_a(const ChoquardProblem& prob, const GridField& u) {
  GridField out = prob.op.apply_neg_hc(u);
  out.values().array() += prob.a.field.values().array() * u.values().array();
  return out;
}

GridField solve_a(const ChoquardProblem& prob, const GridField& rhs) {
  return prob.op.resolvent_solve(prob.a.field, rhs);
}

GridField pair_residual(const ChoquardProblem& prob, const GridField& u) {
  return apply_a(prob, u) + lambda_apply(prob, u);
}

}  // namespace

ChoquardProblem::ChoquardProblem(AndersonOperator op_, Potential a_, GridField w_, double p_,
                                 double q_)
    : op(std::move(op_)), a(std::move(a_)), w(std::move(w_)), p(p_), q(q_) {
  if (!(op.grid() == a.field.grid()) || !(op.grid() == w.grid())) {
    throw ShapeError("ChoquardProblem: grids differ");
  }
  if (!(p >= 1.0)) throw DomainError("ChoquardProblem: p must be >= 1");
  if (!(q > 1.0)) throw DomainError("ChoquardProblem: q must be > 1");
  ensure_finite(a.field, "ChoquardProblem potential");
  ensure_finite(w, "ChoquardProblem kernel");
  if (a.field.values().minCoeff() < 0.0) throw DomainError("ChoquardProblem: a must be >= 0");
  if (w.values().maxCoeff() > 0.0) throw DomainError("ChoquardProblem: w must be <= 0");
  const double pp = p, qq = q;
  f = [pp](double z) { return std::pow(std::abs(z), pp); };
  df = [pp](double z) {
    if (z == 0.0) return 0.0;
    return pp * std::pow(std::abs(z), pp - 2.0) * z;
  };
  g = [qq](double z) { return z == 0.0 ? 0.0 : std::pow(std::abs(z), qq - 2.0) * z; };
  dg = [qq](double z) {
    if (z == 0.0) return qq == 2.0 ? 1.0 : 0.0;
    return (qq - 1.0) * std::pow(std::abs(z), qq - 2.0);
  };
}

ChoquardProblem& ChoquardProblem::with_maps(Map f_, Map df_, Map g_, Map dg_) {
  f = std::move(f_);
  df = std::move(df_);
  g = std::move(g_);
  dg = std::move(dg_);
  return *this;
}

GridField lambda_apply(const ChoquardProblem& prob, const GridField& u) {
  require_same_grid(u, prob.w, "lambda_apply");
  const GridField conv = convolve(map_field(u, prob.f), prob.w);
  GridField out = map_field(u, prob.g);
  out.values().array() *= -conv.values().array();
  return out;
}

LambdaBound lambda_bound_check(const ChoquardProblem& prob, const GridField& u, const GridField& v) {
  require_same_grid(v, prob.w, "lambda_bound_check");
  LambdaBound b;
  b.lhs = std::abs(inner_l2(lambda_apply(prob, u), v));
  const double q = prob.q;
  b.rhs = norm_lp(prob.w, 1.0) * l2(map_field(u, prob.f)) *
          norm_lp(map_field(u, prob.g), 2.0 * q / (q - 1.0)) * norm_lp(v, 2.0 * q);
  if (b.lhs > b.rhs * (1.0 + 1e-8) + 1e-300) {
    throw InconsistencyError("lambda_bound_check: |(Lambda u)(v)| = " + std::to_string(b.lhs) +
                             " exceeds the Hoelder bound " + std::to_string(b.rhs));
  }
  return b;
}

double quadratic_energy(const ChoquardProblem& prob, const GridField& u) {
  return 0.5 * inner_l2(apply_a(prob, u), u);
}

double fenchel_conjugate_quadratic(const ChoquardProblem& prob, const GridField& p_field) {
  require_same_grid(p_field, prob.w, "fenchel_conjugate_quadratic");
  return 0.5 * inner_l2(p_field, solve_a(prob, p_field));
}

SelfDualTerms selfdual_terms(const ChoquardProblem& prob, const GridField& u) {
  require_same_grid(u, prob.w, "selfdual_terms");
  SelfDualTerms t;
  const GridField lu = lambda_apply(prob, u);
  t.phi = quadratic_energy(prob, u);
  t.phi_star = fenchel_conjugate_quadratic(prob, -1.0 * lu);
  t.coupling = inner_l2(lu, u);
  t.from_conjugate = t.phi + t.phi_star + t.coupling;
  const GridField r = apply_a(prob, u) + lu;
  t.from_residual = 0.5 * inner_l2(r, solve_a(prob, r));
  return t;
}

double selfdual_value(const ChoquardProblem& prob, const GridField& u) {
  const SelfDualTerms t = selfdual_terms(prob, u);
  const double scale = 1.0 + std::abs(t.phi) + std::abs(t.phi_star) + std::abs(t.coupling);
  if (std::abs(t.from_residual - t.from_conjugate) > 1e-8 * scale) {
    throw InconsistencyError("selfdual_value: residual and conjugate forms disagree");
  }
  if (t.from_residual < -1e-8) throw InconsistencyError("selfdual_value: negative value");
  return t.from_residual;
}

GridField selfdual_gradient(const ChoquardProblem& prob, const GridField& u) {
  const GridField r = pair_residual(prob, u);
  const GridField z = solve_a(prob, r);
  // (DLambda)^T z = -f'(u) (w~ * (z g(u))) - (w * f(u)) g'(u) z.
  GridField zg = map_field(u, prob.g);
  zg.values().array() *= z.values().array();
  GridField first = convolve(zg, reflect(prob.w));
  first.values().array() *= map_field(u, prob.df).values().array();
  GridField second = convolve(map_field(u, prob.f), prob.w);
  second.values().array() *= map_field(u, prob.dg).values().array() * z.values().array();
  GridField grad = r;
  grad -= first;
  grad -= second;
  return grad;
}

ChoquardResult selfdual_minimize(const ChoquardProblem& prob, const GridField& init,
                                 const ChoquardParams& params) {
  require_same_grid(init, prob.w, "selfdual_minimize");
  if (!(params.tol > 0.0)) throw DomainError("selfdual_minimize: tol must be positive");
  ChoquardResult res(prob.grid());
  GridField u = init;
  auto value = [&](const GridField& v) {
    const GridField r = pair_residual(prob, v);
    return 0.5 * inner_l2(r, solve_a(prob, r));
  };
  double I = value(u);
  res.trace.push_back(I);
  const double target = params.tol * params.tol;
  std::size_t it = 0;
  for (; it < params.max_iter; ++it) {
    const double rn = l2(pair_residual(prob, u));
    if (I <= target && rn <= params.tol * (1.0 + l2(u))) break;
    const GridField grad = selfdual_gradient(prob, u);
    const GridField dir = -1.0 * solve_a(prob, grad);
    const double slope = inner_l2(grad, dir);
    if (!(slope < 0.0)) break;
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, alpha *= 0.5) {
      const GridField trial = u + alpha * dir;
      if (!trial.all_finite()) continue;
      const double It = value(trial);
      if (std::isfinite(It) && It <= I + 1e-4 * alpha * slope) {
        u = trial;
        I = It;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    res.trace.push_back(I);
  }
  res.u = u;
  res.selfdual_value = selfdual_value(prob, u);
  res.residual_l2 = l2(pair_residual(prob, u));
  res.iterations = it;
  res.trivial = l2(u) < 1e-3;
  if (!(res.selfdual_value <= target && res.residual_l2 <= params.tol * (1.0 + l2(u)))) {
    throw ConvergenceError("selfdual_minimize did not reach the target", it, res.residual_l2);
  }
  return res;
}

}  // namespace anderson

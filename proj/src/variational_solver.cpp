#include "anderson/variational_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "anderson/errors.hpp"
#include "anderson/noise.hpp"

namespace anderson {

namespace {

constexpr double kNontrivial = 1e-3;
constexpr double kDivergence = 1e8;

double l2(const GridField& u) { return norm_lp(u, 2.0); }

TraceEntry observe(const Problem& pb, const GridField& u, const GridField& r) {
  TraceEntry e;
  e.phi = energy(pb, u);
  const GridField g = pb.op.resolvent_solve(0.0, r);
  e.grad_norm = std::sqrt(std::max(inner_l2(r, g), 0.0));
  e.energy_norm = pb.op.energy_norm(u);
  return e;
}

SolveResult finalize(const Problem& pb, const GridField& u, std::string method,
                     std::vector<TraceEntry> trace, std::size_t iterations, double tol,
                     std::uint64_t seed) {
  SolveResult res(pb.grid());
  res.u = u;
  const Gradient g = energy_gradient(pb, u);
  res.phi = energy(pb, u);
  res.residual_l2 = l2(g.residual);
  res.grad_e_norm = std::sqrt(std::max(inner_l2(g.residual, g.grad_e), 0.0));
  res.iterations = iterations;
  res.method = std::move(method);
  res.trace = std::move(trace);
  res.seed = seed;
  res.converged = res.residual_l2 <= tol * (1.0 + l2(u));
  return res;
}

bool acceptable(const SolveResult& r) {
  return r.converged && l2(r.u) >= kNontrivial && r.phi > 0.0;
}

// Multiplicative deflation M(u) = prod_i (rho^2 / ||u - r_i||^2 + 1).
struct Deflation {
  std::vector<GridField> roots;
  double rho = 0.5;

  double factor(const GridField& u) const {
    double m = 1.0;
    for (const GridField& r : roots) {
      const double d2 = std::pow(l2(u - r), 2);
      m *= rho * rho / d2 + 1.0;
    }
    return m;
  }
  // Directional derivative of ln M at u along d.
  double log_derivative(const GridField& u, const GridField& d) const {
    double s = 0.0;
    for (const GridField& r : roots) {
      const GridField diff = u - r;
      const double d2 = inner_l2(diff, diff);
      const double m = rho * rho / d2 + 1.0;
      const double dm = -2.0 * rho * rho * inner_l2(diff, d) / (d2 * d2);
      s += dm / m;
    }
    return s;
  }
};

struct NewtonOutcome {
  GridField u;
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<TraceEntry> trace;
};

// Damped Newton on the deflated system M(u) R(u) = 0 with MINRES inner solves.
NewtonOutcome deflated_newton(const Problem& pb, GridField u, const Deflation& defl, double tol,
                              std::size_t max_iter) {
  const TorusGrid& grid = pb.grid();
  const double pre_shift = pb.op.c() + std::max(pb.a.field.values().mean(), 0.0);
  NewtonOutcome out{u, false, 0, {}};
  double prev_rn = std::numeric_limits<double>::infinity();
  int stalls = 0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const GridField r = residual(pb, u);
    const double rn = l2(r);
    const double un = l2(u);
    out.trace.push_back(observe(pb, u, r));
    out.iterations = it;
    const double target = tol * (1.0 + un);
    if (rn <= target && (rn <= 1e-4 * target || rn > 0.25 * prev_rn)) {
      out.converged = true;
      break;
    }
    if (!(un < kDivergence)) break;
    prev_rn = rn;

    const linalg::Vector dfdz = pb.nl.eval_dfdz(u).values();
    linalg::Vector d;
    linalg::minres(
        [&](const linalg::Vector& v) -> linalg::Vector {
          linalg::Vector jv = pb.op.apply_neg_hc(v);
          jv.array() += (pb.a.field.values().array() - dfdz.array()) * v.array();
          return jv;
        },
        [&](const linalg::Vector& v) { return pb.op.precondition(v, pre_shift); },
        -r.values(), d, {1e-11, 4000});
    GridField step(grid, std::move(d));
    if (!defl.roots.empty()) {
      const double tau = 1.0 / (1.0 - defl.log_derivative(u, step));
      if (std::isfinite(tau)) step *= tau;
    }

    const double merit0 = defl.factor(u) * rn;
    double alpha = 1.0;
    bool accepted = false;
    GridField trial(grid);
    for (int k = 0; k < 14; ++k, alpha *= 0.5) {
      trial = u + alpha * step;
      if (!trial.all_finite()) continue;
      const double merit = defl.factor(trial) * l2(residual(pb, trial));
      if (std::isfinite(merit) && merit < (1.0 - 1e-4 * alpha) * merit0) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }
    if (trial.all_finite()) u = trial;
  }
  out.u = u;
  return out;
}

template <class F>
double golden_max(const F& phi, double lo, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = phi(x1), f2 = phi(x2);
  const double scale = hi;
  for (int it = 0; it < 100 && hi - lo > 1e-12 * scale; ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = phi(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = phi(x2);
    }
  }
  return 0.5 * (lo + hi);
}

// argmax_{t > 0} Phi(t dir).
double ray_maximizer(const Problem& pb, const GridField& dir) {
  auto phi = [&](double t) { return energy(pb, t * dir); };
  double best_t = 1.0, best = -std::numeric_limits<double>::infinity();
  for (int k = -30; k <= 30; ++k) {
    const double t = std::ldexp(1.0, k);
    double v;
    try {
      v = phi(t);
    } catch (const DomainError&) {
      break;
    }
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  return golden_max(phi, 0.5 * best_t, 2.0 * best_t);
}

// Same, for a point already close to its ray maximum.
double ray_maximizer_near(const Problem& pb, const GridField& v) {
  auto phi = [&](double t) { return energy(pb, t * v); };
  const double t = golden_max(phi, 0.5, 2.0);
  if (t < 0.51 || t > 1.96) return ray_maximizer(pb, v);
  return t;
}

struct NehariOutcome {
  GridField u;
  bool converged = false;
  std::size_t iterations = 0;
};

// Steepest descent of Phi on the set of ray maxima {u : Phi'(u) u = 0}. Its
// local minima are mountain-pass points, one for each basin it is started in.
NehariOutcome nehari_descent(const Problem& pb, GridField u, double rel_grad, std::size_t max_iter,
                             std::vector<TraceEntry>& trace) {
  double phi = energy(pb, u);
  double s = 0.5;
  NehariOutcome out{u, false, 0};
  for (std::size_t it = 0; it < max_iter; ++it) {
    const Gradient g = energy_gradient(pb, u);
    const double gn = std::sqrt(std::max(inner_l2(g.residual, g.grad_e), 0.0));
    const double en = pb.op.energy_norm(u);
    trace.push_back({phi, gn, en});
    out.iterations = it;
    if (gn <= rel_grad * (1.0 + en)) {
      out.converged = true;
      break;
    }
    bool moved = false;
    while (s > 1e-10) {
      const GridField v = u - s * g.grad_e;
      const GridField w = ray_maximizer_near(pb, v) * v;
      const double pw = energy(pb, w);
      if (pw < phi) {
        u = w;
        phi = pw;
        s = std::min(1.5 * s, 1.0);
        moved = true;
        break;
      }
      s *= 0.5;
    }
    if (!moved) break;
  }
  out.u = u;
  return out;
}

GridField unit_energy(const Problem& pb, const GridField& v) {
  const double nrm = pb.op.energy_norm(v);
  if (!(nrm > 0.0)) throw DomainError("direction has zero energy norm");
  return (1.0 / nrm) * v;
}

const GridField& eigenfield(const Spectrum& spectrum, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= spectrum.eigenfields.size()) {
    throw DomainError("spectrum does not contain eigenfield e_" + std::to_string(k));
  }
  return spectrum.eigenfields[static_cast<std::size_t>(k)];
}

// Path deformation: move the highest interior point of a discrete path from
// 0 to e (Phi(e) < 0) down the E-gradient until it is critical.
std::optional<SolveResult> path_mountain_pass(const Problem& pb, const Spectrum& spectrum,
                                              const SolverParams& params) {
  const GridField dir = unit_energy(pb, eigenfield(spectrum, 0));
  double t_end = 1.0;
  for (int k = 0; energy(pb, t_end * dir) >= 0.0; ++k) {
    if (k > 200) throw ConvergenceError("mountain pass: no endpoint with Phi < 0", k, 0.0);
    t_end *= 2.0;
  }
  const std::size_t P = std::max<std::size_t>(params.path_points, 3);
  std::vector<GridField> path;
  std::vector<double> vals;
  for (std::size_t j = 0; j < P; ++j) {
    path.push_back((t_end * static_cast<double>(j) / static_cast<double>(P - 1)) * dir);
    vals.push_back(energy(pb, path.back()));
  }

  auto reparametrize = [&] {
    std::vector<double> len(P, 0.0);
    for (std::size_t j = 1; j < P; ++j) len[j] = len[j - 1] + l2(path[j] - path[j - 1]);
    double shortest = std::numeric_limits<double>::infinity(), longest = 0.0;
    for (std::size_t j = 1; j < P; ++j) {
      shortest = std::min(shortest, len[j] - len[j - 1]);
      longest = std::max(longest, len[j] - len[j - 1]);
    }
    if (longest <= 4.0 * shortest) return;
    std::vector<GridField> fresh{path.front()};
    std::size_t seg = 1;
    for (std::size_t j = 1; j + 1 < P; ++j) {
      const double s = len.back() * static_cast<double>(j) / static_cast<double>(P - 1);
      while (seg + 1 < P && len[seg] < s) ++seg;
      const double w = (s - len[seg - 1]) / std::max(len[seg] - len[seg - 1], 1e-300);
      fresh.push_back((1.0 - w) * path[seg - 1] + w * path[seg]);
    }
    fresh.push_back(path.back());
    path = std::move(fresh);
    for (std::size_t j = 1; j + 1 < P; ++j) vals[j] = energy(pb, path[j]);
  };

  std::vector<TraceEntry> trace;
  std::size_t next_polish = 0;
  for (std::size_t iter = 0; iter < params.max_iter; ++iter) {
    const std::size_t top = static_cast<std::size_t>(
        std::max_element(vals.begin() + 1, vals.end() - 1) - vals.begin());
    const GridField& u = path[top];
    const Gradient g = energy_gradient(pb, u);
    const double gn = std::sqrt(std::max(inner_l2(g.residual, g.grad_e), 0.0));
    const double en = pb.op.energy_norm(u);
    trace.push_back({vals[top], gn, en});
    if (l2(g.residual) <= params.tol * (1.0 + l2(u)) && l2(u) >= kNontrivial && vals[top] > 0.0) {
      return finalize(pb, u, "mountain-pass-path", std::move(trace), iter, params.tol, params.seed);
    }

    if (gn <= 0.3 * (1.0 + en) && iter >= next_polish) {
      NewtonOutcome nw = deflated_newton(pb, u, Deflation{{}, params.deflation_radius}, params.tol, 50);
      if (nw.converged) {
        trace.insert(trace.end(), nw.trace.begin(), nw.trace.end());
        SolveResult r = finalize(pb, nw.u, "mountain-pass-path+newton", std::move(trace),
                                 iter + nw.iterations, params.tol, params.seed);
        if (acceptable(r)) return r;
        trace = std::move(r.trace);
      }
      next_polish = iter + 25;
    }

    double alpha = params.step;
    bool moved = false;
    for (int k = 0; k < 40; ++k, alpha *= 0.5) {
      GridField trial = u - alpha * g.grad_e;
      const double v = energy(pb, trial);
      if (v < vals[top]) {
        path[top] = std::move(trial);
        vals[top] = v;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    reparametrize();
  }
  return std::nullopt;
}

// Deflated Newton from the ray maximiser along `dir`, with perturbation restarts.
std::optional<SolveResult> newton_from_direction(const Problem& pb, const GridField& direction,
                                                 const Deflation& defl,
                                                 const SolverParams& params, double radius,
                                                 std::size_t restarts, const char* method) {
  const GridField dir = unit_energy(pb, direction);
  const double t = radius > 0.0 ? radius : ray_maximizer(pb, dir);
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    const std::uint64_t seed = params.seed + r;
    const GridField pert = unit_energy(pb, random_field(pb.grid(), seed));
    const GridField u0 = t * dir + (1e-2 * t) * pert;
    NewtonOutcome nw = deflated_newton(pb, u0, defl, params.tol, 200);
    if (!nw.converged) continue;
    SolveResult res = finalize(pb, nw.u, method, std::move(nw.trace), nw.iterations, params.tol, seed);
    if (acceptable(res)) return res;
  }
  return std::nullopt;
}

// Descent on the ray-maximum set from the direction's ray maximiser, polished
// by deflated Newton; falls back to a tight descent if the polish fails.
std::optional<SolveResult> nehari_search(const Problem& pb, const GridField& direction,
                                         const Deflation& defl, const SolverParams& params,
                                         const char* method) {
  const GridField dir = unit_energy(pb, direction);
  std::vector<TraceEntry> trace;
  NehariOutcome nh = nehari_descent(pb, ray_maximizer(pb, dir) * dir, 1e-3, params.max_iter, trace);
  NewtonOutcome nw = deflated_newton(pb, nh.u, defl, params.tol, 50);
  if (nw.converged) {
    std::vector<TraceEntry> full = trace;
    full.insert(full.end(), nw.trace.begin(), nw.trace.end());
    SolveResult r = finalize(pb, nw.u, std::string(method) + "+newton", std::move(full),
                             nh.iterations + nw.iterations, params.tol, params.seed);
    if (acceptable(r)) return r;
  }
  nh = nehari_descent(pb, nh.u, 1e-9, params.max_iter, trace);
  SolveResult r = finalize(pb, nh.u, method, std::move(trace), nh.iterations, params.tol, params.seed);
  if (acceptable(r)) return r;
  return std::nullopt;
}

}  // namespace

Problem::Problem(AndersonOperator op_, Potential a_, Nonlinearity nl_)
    : op(std::move(op_)), a(std::move(a_)), nl(std::move(nl_)) {
  if (!(op.grid() == a.field.grid())) throw ShapeError("Problem: potential and operator grids differ");
  if (!nl.f || !nl.dfdz || !nl.F) throw DomainError("Problem: incomplete nonlinearity");
}

double energy(const Problem& pb, const GridField& u) {
  require_same_grid(u, pb.a.field, "energy");
  const GridField Fu = pb.nl.eval_F(u);
  const double quad = inner_l2(pb.op.apply_neg_hc(u), u);
  const double h2 = pb.grid().cell_measure();
  const double pot =
      h2 * (0.5 * pb.a.field.values().array() * u.values().array().square() - Fu.values().array())
               .sum();
  const double phi = 0.5 * quad + pot;
  if (!std::isfinite(phi)) throw DomainError("energy: overflow");
  return phi;
}

GridField residual(const Problem& pb, const GridField& u) {
  require_same_grid(u, pb.a.field, "residual");
  GridField r = pb.op.apply_neg_hc(u);
  r.values().array() += pb.a.field.values().array() * u.values().array();
  r -= pb.nl.eval_f(u);
  return r;
}

Gradient energy_gradient(const Problem& pb, const GridField& u) {
  GridField r = residual(pb, u);
  GridField g = pb.op.resolvent_solve(0.0, r);
  return {std::move(r), std::move(g)};
}

SolveResult picard_baseline(const Problem& pb, const GridField& u0, std::size_t max_iter,
                            double tol) {
  require_same_grid(u0, pb.a.field, "picard_baseline");
  GridField u = u0;
  std::vector<TraceEntry> trace;
  bool diverged = false;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    const GridField r = residual(pb, u);
    if (l2(r) <= tol) break;
    GridField rhs = pb.nl.eval_f(u);
    rhs.values().array() -= pb.a.field.values().array() * u.values().array();
    GridField next = pb.op.resolvent_solve(0.0, rhs);
    if (!next.all_finite() || !(l2(next) <= kDivergence)) {
      diverged = true;
      if (next.all_finite()) {
        u = std::move(next);
        ++it;
      }
      break;
    }
    u = std::move(next);
    trace.push_back(observe(pb, u, residual(pb, u)));
  }
  SolveResult res(pb.grid());
  if (diverged) {
    res.u = u;
    res.residual_l2 = std::numeric_limits<double>::infinity();
    res.phi = -std::numeric_limits<double>::infinity();
    res.grad_e_norm = std::numeric_limits<double>::infinity();
    res.iterations = it;
    res.method = "picard";
    const double en = u.all_finite() ? pb.op.energy_norm(u) : std::numeric_limits<double>::infinity();
    trace.push_back({res.phi, res.grad_e_norm, en});
    res.trace = std::move(trace);
    res.diverged = true;
    return res;
  }
  res = finalize(pb, u, "picard", std::move(trace), it, 0.0, 0);
  res.converged = res.residual_l2 <= tol;
  return res;
}

GeometryWitness linking_geometry(const Problem& pb, const Spectrum& spectrum, std::uint64_t seed,
                                 std::size_t samples) {
  const int m = spectrum.m;
  const GridField& e_next = eigenfield(spectrum, m + 1);
  std::vector<GridField> sphere;
  for (std::size_t s = 0; s < samples; ++s) {
    GridField v = random_field(pb.grid(), seed + 7919 * (s + 1));
    for (int i = 0; i <= m; ++i) {
      const GridField& e = eigenfield(spectrum, i);
      v -= inner_l2(v, e) * e;
    }
    sphere.push_back(unit_energy(pb, v));
  }
  GeometryWitness w;
  w.samples = samples;
  double r = 1.0;
  for (int k = 0; k < 80; ++k, r *= 0.5) {
    double lowest = std::numeric_limits<double>::infinity();
    for (const GridField& v : sphere) lowest = std::min(lowest, energy(pb, r * v));
    if (lowest > 0.0) {
      w.r1 = r;
      w.min_phi_sphere = lowest;
      break;
    }
  }
  const GridField dir = unit_energy(pb, e_next);
  r = std::max(w.r1, 1e-3);
  for (int k = 0; k < 200; ++k, r *= 2.0) {
    const double v = energy(pb, r * dir);
    if (v < 0.0) {
      w.r2 = r;
      w.phi_r2 = v;
      break;
    }
  }
  return w;
}

SolveResult mountain_pass_solve(const Problem& pb, const Spectrum& spectrum,
                                const SolverParams& params) {
  if (!(params.tol > 0.0)) throw DomainError("mountain_pass_solve: tol must be positive");
  const GeometryWitness geometry = linking_geometry(pb, spectrum, params.seed);
  std::optional<SolveResult> found;
  if (spectrum.m < 0) found = path_mountain_pass(pb, spectrum, params);
  if (!found) {
    const Deflation zero{{GridField(pb.grid())}, params.deflation_radius};
    found = newton_from_direction(pb, eigenfield(spectrum, spectrum.m + 1), zero, params,
                                  params.r1, params.max_restarts, "deflated-newton");
  }
  if (!found) {
    throw ConvergenceError("mountain_pass_solve: no nontrivial critical point found",
                           params.max_iter, std::numeric_limits<double>::quiet_NaN());
  }
  found->geometry = geometry;
  return *found;
}

double sign_identified_distance(const GridField& u, const GridField& v) {
  return std::min(l2(u - v), l2(u + v));
}

FountainResult fountain_solve(const Problem& pb, const Spectrum& spectrum, std::size_t n_solutions,
                              const SolverParams& params) {
  if (!pb.nl.odd) throw DomainError("fountain_solve requires an odd nonlinearity");
  std::vector<SolveResult> found;
  Deflation defl{{GridField(pb.grid())}, params.deflation_radius};

  auto distinct_levels = [&] {
    std::vector<double> phis;
    for (const auto& r : found) phis.push_back(r.phi);
    std::sort(phis.begin(), phis.end());
    std::size_t count = 0;
    double last = -std::numeric_limits<double>::infinity();
    for (double p : phis) {
      if (count == 0 || p > last + 1e-9 * (1.0 + std::abs(last))) {
        ++count;
        last = p;
      }
    }
    return count;
  };
  auto consider = [&](SolveResult r) {
    if (!acceptable(r)) return;
    for (const auto& f : found) {
      if (sign_identified_distance(f.u, r.u) <= 1e-2) return;
    }
    defl.roots.push_back(r.u);
    defl.roots.push_back(-1.0 * r.u);
    found.push_back(std::move(r));
  };

  try {
    consider(mountain_pass_solve(pb, spectrum, params));
  } catch (const ConvergenceError&) {
  }

  std::vector<GridField> directions;
  const int first = spectrum.m + 1;
  const int last = static_cast<int>(spectrum.eigenfields.size());
  for (int j = first; j < last; ++j) directions.push_back(eigenfield(spectrum, j));
  for (int j = first; j + 1 < last; ++j) {
    directions.push_back(eigenfield(spectrum, j) + eigenfield(spectrum, j + 1));
    directions.push_back(eigenfield(spectrum, j) - eigenfield(spectrum, j + 1));
  }
  for (const GridField& d : directions) {
    if (distinct_levels() >= n_solutions) break;
    auto r = spectrum.m < 0 ? nehari_search(pb, d, defl, params, "fountain-ray-descent")
                            : newton_from_direction(pb, d, defl, params, 0.0, 1,
                                                    "fountain-deflated-newton");
    if (r) consider(std::move(*r));
  }

  std::sort(found.begin(), found.end(),
            [](const SolveResult& x, const SolveResult& y) { return x.phi < y.phi; });
  FountainResult out;
  for (auto& r : found) {
    if (out.solutions.size() >= n_solutions) break;
    if (!out.solutions.empty()) {
      const double last_phi = out.solutions.back().phi;
      if (!(r.phi > last_phi + 1e-9 * (1.0 + std::abs(last_phi)))) continue;
    }
    out.solutions.push_back(std::move(r));
  }
  out.complete = out.solutions.size() >= n_solutions;
  return out;
}

PSReport ps_diagnostics(const std::vector<TraceEntry>& trace) {
  PSReport rep;
  if (trace.empty()) return rep;
  const TraceEntry& last = trace.back();
  const std::size_t tail = std::min<std::size_t>(trace.size(), 10);
  double spread = 0.0;
  bool finite = true;
  for (std::size_t i = trace.size() - tail; i < trace.size(); ++i) {
    spread = std::max(spread, std::abs(trace[i].phi - last.phi));
    finite = finite && std::isfinite(trace[i].phi);
  }
  rep.phi_tail = spread;
  rep.phi_converged = finite && tail >= 2 && spread <= 1e-8 * (1.0 + std::abs(last.phi));
  rep.final_grad = last.grad_norm;
  for (const auto& e : trace) {
    rep.max_energy_norm = std::max(rep.max_energy_norm,
                                   std::isfinite(e.energy_norm) ? e.energy_norm
                                                                : std::numeric_limits<double>::infinity());
  }
  rep.gradient_vanishing =
      std::isfinite(last.grad_norm) && last.grad_norm <= 1e-6 * (1.0 + std::abs(last.energy_norm));
  rep.bounded = rep.max_energy_norm < 1e6;
  rep.converged = rep.phi_converged && rep.gradient_vanishing && rep.bounded;
  rep.unbounded_with_vanishing_gradient = rep.gradient_vanishing && !rep.bounded;
  return rep;
}

}  // namespace anderson

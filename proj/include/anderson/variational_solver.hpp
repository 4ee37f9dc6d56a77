#pragma once

// Critical points of Phi(u) = 1/2 ||u||_E^2 + int (1/2 a u^2 - F(x, u)),
// i.e. weak solutions of -H_c u + a u = f(x, u).

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "anderson/anderson_operator.hpp"
#include "anderson/nonlinearity.hpp"
#include "anderson/schrodinger_spectral.hpp"
#include "anderson/torus_grid.hpp"

namespace anderson {

struct Problem {
  AndersonOperator op;
  Potential a;
  Nonlinearity nl;

  Problem(AndersonOperator op, Potential a, Nonlinearity nl);
  const TorusGrid& grid() const { return op.grid(); }
};

double energy(const Problem& problem, const GridField& u);

struct Gradient {
  /// (-H_c + a) u - f(., u), the L2 representative of Phi'(u).
  GridField residual;
  /// (-H_c)^{-1} residual, the E representative.
  GridField grad_e;
};

GridField residual(const Problem& problem, const GridField& u);
Gradient energy_gradient(const Problem& problem, const GridField& u);

struct TraceEntry {
  double phi = 0.0;
  double grad_norm = 0.0;
  double energy_norm = 0.0;
};

/// Radii of the linking geometry: Phi > 0 on the r1-sphere of E_{>m}
/// (sampled) and Phi < 0 at the point r2 e / ||e||_E.
struct GeometryWitness {
  double r1 = 0.0;
  double min_phi_sphere = 0.0;
  double r2 = 0.0;
  double phi_r2 = 0.0;
  std::size_t samples = 0;
};

struct SolveResult {
  GridField u;
  double phi = 0.0;
  double residual_l2 = 0.0;
  double grad_e_norm = 0.0;
  std::size_t iterations = 0;
  std::string method;
  std::vector<TraceEntry> trace;
  std::uint64_t seed = 0;
  bool converged = false;
  bool diverged = false;
  GeometryWitness geometry;

  explicit SolveResult(const TorusGrid& grid) : u(grid) {}
};

struct SolverParams {
  /// Radius for the m >= 0 start; 0 selects the maximiser of Phi on the ray.
  double r1 = 0.0;
  std::size_t path_points = 41;
  double step = 0.1;
  /// Relative residual target: ||residual|| <= tol (1 + ||u||).
  double tol = 1e-6;
  std::size_t max_iter = 5000;
  double deflation_radius = 0.5;
  std::size_t max_restarts = 10;
  std::uint64_t seed = 0;
};

/// u_{k+1} = (-H_c)^{-1} (f(., u_k) - a u_k). Divergence (||u_k|| > 1e8) is
/// reported through `diverged`, not thrown.
SolveResult picard_baseline(const Problem& problem, const GridField& u0, std::size_t max_iter,
                            double tol);

/// Samples the linking geometry around e_{m+1} (e_0 when m = -1).
GeometryWitness linking_geometry(const Problem& problem, const Spectrum& spectrum,
                                 std::uint64_t seed, std::size_t samples = 100);

/// Nontrivial critical point with Phi > 0. Path deformation when m = -1,
/// deflated Newton from the e_{m+1} ray otherwise.
SolveResult mountain_pass_solve(const Problem& problem, const Spectrum& spectrum,
                                const SolverParams& params);

struct FountainResult {
  std::vector<SolveResult> solutions;
  /// False when fewer than the requested number were found.
  bool complete = false;
};

/// Distinct nontrivial solutions (up to sign) sorted by strictly increasing Phi.
FountainResult fountain_solve(const Problem& problem, const Spectrum& spectrum,
                              std::size_t n_solutions, const SolverParams& params);

struct PSReport {
  bool phi_converged = false;
  bool gradient_vanishing = false;
  bool bounded = false;
  /// All three of the above.
  bool converged = false;
  /// Gradient vanishes while the iterates blow up.
  bool unbounded_with_vanishing_gradient = false;
  double phi_tail = 0.0;
  double final_grad = 0.0;
  double max_energy_norm = 0.0;
};

PSReport ps_diagnostics(const std::vector<TraceEntry>& trace);

/// min(||u - v||, ||u + v||) in L2.
double sign_identified_distance(const GridField& u, const GridField& v);

}  // namespace anderson

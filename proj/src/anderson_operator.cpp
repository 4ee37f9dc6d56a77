#include "anderson/anderson_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include <Eigen/Eigenvalues>

#include "anderson/errors.hpp"

namespace anderson {

namespace {

linalg::Vector apply_h_raw(const TorusGrid& grid, const GridField& potential,
                           const linalg::Vector& v) {
  GridField u(grid, v);
  GridField out = laplacian(u);
  out.values().array() += potential.values().array() * v.array();
  return std::move(out.values());
}

}  // namespace

ShiftInfo compute_shift(const GridField& xi, const OperatorOptions& options) {
  const TorusGrid& grid = xi.grid();
  const std::size_t dim = grid.size();
  double lambda_max = 0.0;
  if (grid.n() <= options.dense_max_n) {
    const linalg::Matrix h = linalg::assemble_dense(
        [&](const linalg::Vector& v) { return apply_h_raw(grid, xi, v); }, dim);
    Eigen::SelfAdjointEigenSolver<linalg::Matrix> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      throw ConvergenceError("compute_shift: dense eigensolver failed", dim, 0.0);
    }
    lambda_max = es.eigenvalues().maxCoeff();
  } else {
    // Lowest eigenvalue of sigma - H, which is positive definite.
    const double sigma = xi.values().maxCoeff() + 1.0;
    linalg::EigenProblem prob;
    prob.dimension = dim;
    prob.constraints = linalg::Matrix(static_cast<Eigen::Index>(dim), 0);
    prob.apply_a = [&](const linalg::Vector& v) -> linalg::Vector {
      return sigma * v - apply_h_raw(grid, xi, v);
    };
    const double pre_shift = std::max(sigma - xi.values().mean(), 1.0);
    prob.precondition = [&](const linalg::Vector& v) -> linalg::Vector {
      return std::move(inverse_shifted_laplacian(GridField(grid, v), pre_shift).values());
    };
    linalg::EigenOptions eo;
    eo.tol = 1e-11;
    const auto pairs = linalg::lobpcg(prob, 1, eo);
    if (!pairs.converged) {
      throw ConvergenceError("compute_shift: LOBPCG did not converge", pairs.iterations,
                             pairs.residuals[0]);
    }
    lambda_max = sigma - pairs.values[0];
  }
  return ShiftInfo{std::max(lambda_max, 0.0) + 1.0, lambda_max};
}

struct AndersonOperator::Cache {
  std::once_flag matrix_once;
  linalg::Matrix neg_hc;
  std::once_flag eigen_once;
  DenseEigen eigen;
};

AndersonOperator::AndersonOperator(NoiseSample xi, OperatorOptions options)
    : grid_(xi.field.grid()),
      xi_(std::move(xi)),
      potential_(xi_.field),
      options_(options),
      cache_(std::make_shared<Cache>()) {
  ensure_finite(xi_.field, "AndersonOperator");
  if (options_.renormalize) {
    potential_.values().array() -= std::log(static_cast<double>(grid_.n())) / kTwoPi;
  }
  shift_ = compute_shift(potential_, options_);
}

GridField AndersonOperator::apply_h(const GridField& u) const {
  require_same_grid(u, potential_, "apply_h");
  return GridField(grid_, apply_h_raw(grid_, potential_, u.values()));
}

linalg::Vector AndersonOperator::apply_neg_hc(const linalg::Vector& v) const {
  linalg::Vector out = apply_h_raw(grid_, potential_, v);
  out = shift_.c * v - out;
  return out;
}

GridField AndersonOperator::apply_neg_hc(const GridField& u) const {
  require_same_grid(u, potential_, "apply_neg_hc");
  return GridField(grid_, apply_neg_hc(u.values()));
}

linalg::Vector AndersonOperator::precondition(const linalg::Vector& v, double shift) const {
  return std::move(inverse_shifted_laplacian(GridField(grid_, v), shift).values());
}

double AndersonOperator::energy_inner(const GridField& u, const GridField& v) const {
  return inner_l2(apply_neg_hc(u), v);
}

double AndersonOperator::energy_norm(const GridField& u) const {
  return std::sqrt(std::max(energy_inner(u, u), 0.0));
}

GridField AndersonOperator::resolvent_solve(double lambda, const GridField& rhs) const {
  if (!(lambda >= 0.0)) throw DomainError("resolvent_solve requires lambda >= 0");
  return resolvent_solve(GridField(grid_, lambda), rhs);
}

GridField AndersonOperator::resolvent_solve(const GridField& m, const GridField& rhs) const {
  require_same_grid(rhs, potential_, "resolvent_solve");
  require_same_grid(m, potential_, "resolvent_solve");
  const double shift = shift_.c + std::max(m.values().mean(), 0.0);
  linalg::IterativeOptions opt{options_.solve_tol, options_.solve_max_iter};
  linalg::Vector x;
  const auto stats = linalg::pcg(
      [&](const linalg::Vector& v) -> linalg::Vector {
        linalg::Vector out = apply_neg_hc(v);
        out.array() += m.values().array() * v.array();
        return out;
      },
      [&](const linalg::Vector& v) { return precondition(v, shift); }, rhs.values(), x, opt);
  // The contract is a relative residual of 1e-9; the default target is tighter.
  if (stats.rel_residual > std::max(1e-9, options_.solve_tol * 10.0)) {
    throw ConvergenceError("resolvent_solve did not converge", stats.iterations, stats.rel_residual);
  }
  GridField u(grid_, std::move(x));
  ensure_finite(u, "resolvent_solve");
  return u;
}

const linalg::Matrix& AndersonOperator::dense_neg_hc() const {
  if (!dense()) throw DomainError("dense_neg_hc: grid exceeds the dense threshold");
  std::call_once(cache_->matrix_once, [this] {
    cache_->neg_hc = linalg::assemble_dense(
        [this](const linalg::Vector& v) { return apply_neg_hc(v); }, grid_.size());
    cache_->neg_hc = 0.5 * (cache_->neg_hc + cache_->neg_hc.transpose()).eval();
  });
  return cache_->neg_hc;
}

const AndersonOperator::DenseEigen& AndersonOperator::dense_eigen() const {
  std::call_once(cache_->eigen_once, [this] {
    Eigen::SelfAdjointEigenSolver<linalg::Matrix> es(dense_neg_hc());
    if (es.info() != Eigen::Success) {
      throw ConvergenceError("dense eigendecomposition of -H_c failed", grid_.size(), 0.0);
    }
    cache_->eigen.values = es.eigenvalues();
    cache_->eigen.vectors = es.eigenvectors();
  });
  return cache_->eigen;
}

GridField AndersonOperator::heat_apply(double t, const GridField& u) const {
  if (!(t > 0.0)) throw DomainError("heat_apply requires t > 0");
  require_same_grid(u, potential_, "heat_apply");
  GridField out(grid_);
  if (dense()) {
    const DenseEigen& e = dense_eigen();
    const linalg::Vector coeff = e.vectors.transpose() * u.values();
    const linalg::Vector decay = (-t * e.values.array()).exp().matrix();
    out.values() = e.vectors * coeff.cwiseProduct(decay);
  } else {
    out.values() = linalg::expm_krylov(
        [this](const linalg::Vector& v) { return apply_neg_hc(v); }, t, u.values());
  }
  ensure_finite(out, "heat_apply");
  return out;
}

GridField AndersonOperator::green_function(GridPoint x0) const {
  return resolvent_solve(0.0, dirac(grid_, x0));
}

HeatReport heat_kernel_diagnostics(const AndersonOperator& op, const std::vector<double>& times,
                                   std::size_t sources) {
  if (times.empty()) throw DomainError("heat_kernel_diagnostics: empty time list");
  for (double t : times) {
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("heat_kernel_diagnostics: times must lie in (0, 1]");
  }
  const TorusGrid& grid = op.grid();
  const std::size_t n = grid.n();
  const double h = grid.spacing();
  sources = std::max<std::size_t>(sources, 1);

  std::vector<GridPoint> ys;
  for (std::size_t s = 0; s < sources; ++s) {
    const std::size_t i = (s * n) / sources;
    ys.push_back({i, (i + n / 4 + s) % n});
  }

  HeatReport rep;
  rep.min_kernel = std::numeric_limits<double>::infinity();
  // Samples (d^2 / t, log(t p_t)) for the Gaussian sandwich.
  std::vector<std::pair<double, double>> samples;
  for (double t : times) {
    for (const GridPoint& y : ys) {
      const GridField p = op.heat_apply(t, dirac(grid, y));
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const GridPoint x = grid.point(k);
        const double v = p[k];
        rep.min_kernel = std::min(rep.min_kernel, v);
        if (v <= 0.0) {
          if (rep.negative_values.size() < 64) rep.negative_values.push_back({x, y, t, v});
          continue;
        }
        const double d = geodesic_dist(grid, x, y);
        if (d >= 4.0 * h - 1e-12) samples.emplace_back(d * d / t, std::log(v) + std::log(t));
      }
    }
  }
  rep.samples = samples.size();
  if (samples.size() >= 2) {
    double ms = 0.0, mz = 0.0;
    for (const auto& [s, z] : samples) {
      ms += s;
      mz += z;
    }
    ms /= static_cast<double>(samples.size());
    mz /= static_cast<double>(samples.size());
    double sxx = 0.0, sxz = 0.0;
    for (const auto& [s, z] : samples) {
      sxx += (s - ms) * (s - ms);
      sxz += (s - ms) * (z - mz);
    }
    const double slope = sxx > 0.0 ? -sxz / sxx : 0.0;
    rep.fitted_slope = slope;
    rep.fitted_intercept = mz + slope * ms;
    if (slope > 0.0) {
      rep.a2 = std::max(slope, 1.0 / slope);
      double log_a1 = 0.0;
      for (const auto& [s, z] : samples) {
        log_a1 = std::max({log_a1, -(z + rep.a2 * s), z + s / rep.a2});
      }
      rep.a1 = std::exp(log_a1);
    } else {
      rep.a1 = rep.a2 = std::numeric_limits<double>::quiet_NaN();
    }
  } else {
    rep.a1 = rep.a2 = std::numeric_limits<double>::quiet_NaN();
  }

  rep.epsilon = std::numeric_limits<double>::infinity();
  const GridField one(grid, 1.0);
  for (double t : times) {
    const double top = op.heat_apply(t, one).values().maxCoeff();
    rep.epsilon = std::min(rep.epsilon, -std::log(top) / t);
  }

  // Distance band for G / |ln d|; falls back to [h, 0.5] on coarse grids.
  double lo = 4.0 * h, hi = 0.3;
  if (lo > hi) {
    lo = h;
    hi = 0.5;
  }
  rep.green_ratio_low = std::numeric_limits<double>::infinity();
  rep.green_ratio_high = -std::numeric_limits<double>::infinity();
  for (const GridPoint& y : ys) {
    const GridField g = op.green_function(y);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double d = geodesic_dist(grid, grid.point(k), y);
      if (d < lo - 1e-12 || d > hi + 1e-12) continue;
      const double ratio = g[k] / std::abs(std::log(d));
      rep.green_ratio_low = std::min(rep.green_ratio_low, ratio);
      rep.green_ratio_high = std::max(rep.green_ratio_high, ratio);
    }
  }
  return rep;
}

}  // namespace anderson

#include "anderson/schrodinger_spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "anderson/errors.hpp"

namespace anderson {

Potential::Potential(GridField a, double p) : field(std::move(a)), declared_p(p) {
  if (!(p > 1.0)) throw DomainError("potential: declared p must exceed 1");
  ensure_finite(field, "Potential");
  if (!std::isfinite(norm_lp(field, p))) throw DomainError("potential: infinite L^p norm");
}

double kato_modulus_log(const Potential& a, double r) {
  const TorusGrid& grid = a.field.grid();
  const double h = grid.spacing();
  if (!(r > 0.0 && r < 1.0)) throw DomainError("kato_modulus_log requires 0 < r < 1");
  if (r <= h) throw DomainError("kato_modulus_log requires r > h");

  struct Tap {
    int di, dj;
    double weight;
  };
  std::vector<Tap> stencil;
  const int reach = static_cast<int>(std::ceil(r / h));
  for (int di = -reach; di <= reach; ++di) {
    for (int dj = -reach; dj <= reach; ++dj) {
      const double d = h * std::hypot(di, dj);
      if (d >= r) continue;
      stencil.push_back({di, dj, d == 0.0 ? std::abs(std::log(h / 2.0)) : std::abs(std::log(d))});
    }
  }
  const int n = static_cast<int>(grid.n());
  const Eigen::ArrayXd abs_a = a.field.values().array().abs();
  if ((abs_a == 0.0).all()) return 0.0;
  double sup = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (const Tap& t : stencil) {
        const int yi = ((i + t.di) % n + n) % n;
        const int yj = ((j + t.dj) % n + n) % n;
        s += t.weight * abs_a[yi * n + yj];
      }
      sup = std::max(sup, s);
    }
  }
  return sup * grid.cell_measure();
}

double kato_modulus_heat(const AndersonOperator& op, const Potential& a, double T) {
  if (!(T > 0.0 && T <= 1.0)) throw DomainError("kato_modulus_heat requires 0 < T <= 1");
  require_same_grid(a.field, op.potential(), "kato_modulus_heat");
  GridField abs_a(a.field.grid(), a.field.values().cwiseAbs());
  if (abs_a.values().maxCoeff() == 0.0) return 0.0;

  constexpr int kNodes = 16;
  std::vector<double> s(kNodes);
  for (int k = 0; k < kNodes; ++k) {
    s[k] = T * std::pow(256.0, -static_cast<double>(kNodes - 1 - k) / (kNodes - 1));
  }
  std::vector<GridField> g;
  g.reserve(kNodes);
  for (double sk : s) g.push_back(op.heat_apply(sk, abs_a));
  // Rectangle on [0, s_0], trapezoids on the geometric nodes.
  Eigen::VectorXd integral = s[0] * g[0].values();
  for (int k = 1; k < kNodes; ++k) {
    integral += 0.5 * (s[k] - s[k - 1]) * (g[k].values() + g[k - 1].values());
  }
  return integral.maxCoeff();
}

double resolvent_sup_norm(const AndersonOperator& op, const Potential& a, double lambda) {
  GridField abs_a(a.field.grid(), a.field.values().cwiseAbs());
  return norm_lp(op.resolvent_solve(lambda, abs_a), std::numeric_limits<double>::infinity());
}

double form_bound_constant(const AndersonOperator& op, const Potential& a, double eta) {
  if (!(eta > 0.0)) throw DomainError("form_bound_constant requires eta > 0");
  require_same_grid(a.field, op.potential(), "form_bound_constant");
  const linalg::Vector abs_a = a.field.values().cwiseAbs();
  double top = 0.0;
  if (op.dense()) {
    linalg::Matrix m = -eta * op.dense_neg_hc();
    m.diagonal() += abs_a;
    Eigen::SelfAdjointEigenSolver<linalg::Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
      throw ConvergenceError("form_bound_constant: eigensolver failed", op.grid().size(), 0.0);
    }
    top = es.eigenvalues().maxCoeff();
  } else {
    linalg::EigenProblem prob;
    prob.dimension = op.grid().size();
    prob.constraints = linalg::Matrix(static_cast<Eigen::Index>(prob.dimension), 0);
    prob.apply_a = [&](const linalg::Vector& v) -> linalg::Vector {
      return eta * op.apply_neg_hc(v) - abs_a.cwiseProduct(v);
    };
    prob.precondition = [&](const linalg::Vector& v) -> linalg::Vector {
      return op.precondition(v, op.c()) / eta;
    };
    linalg::EigenOptions eo;
    eo.tol = 1e-11;
    const auto pairs = linalg::lobpcg(prob, 1, eo);
    if (!pairs.converged) {
      throw ConvergenceError("form_bound_constant: LOBPCG did not converge", pairs.iterations,
                             pairs.residuals[0]);
    }
    top = -pairs.values[0];
  }
  return std::max(top, 0.0);
}

namespace {

// Canonical Fourier candidates: cos(k.x) then sin(k.x), k in canonical order.
linalg::Vector fourier_candidate(const TorusGrid& grid, const Wavenumber& k, bool sine) {
  linalg::Vector v(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.n(); ++i) {
    for (std::size_t j = 0; j < grid.n(); ++j) {
      const double phase = k.k1 * grid.coordinate(i) + k.k2 * grid.coordinate(j);
      v[static_cast<Eigen::Index>(grid.index(i, j))] = sine ? std::sin(phase) : std::cos(phase);
    }
  }
  return v;
}

void fix_sign(Eigen::Ref<linalg::Vector> v) {
  const double top = v.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (std::abs(v[k]) >= top * (1.0 - 1e-9)) {
      if (v[k] < 0.0) v = -v;
      return;
    }
  }
}

// Rotates each numerically degenerate cluster within [0, limit) onto the
// canonical Fourier order; vectors are Euclidean-orthonormal columns.
void resolve_degeneracies(const TorusGrid& grid, const linalg::Vector& values,
                          linalg::Matrix& vectors, Eigen::Index limit) {
  const Eigen::Index total = values.size();
  const auto ks = grid.wavenumbers();
  Eigen::Index start = 0;
  while (start < std::min(limit, total)) {
    Eigen::Index end = start + 1;
    while (end < total && values[end] - values[end - 1] < 1e-9) ++end;
    const Eigen::Index dim = end - start;
    if (dim > 1) {
      const linalg::Matrix u = vectors.middleCols(start, dim);
      linalg::Matrix chosen(u.rows(), dim);
      Eigen::Index found = 0;
      for (std::size_t c = 0; c < 2 * ks.size() && found < dim; ++c) {
        linalg::Vector cand = fourier_candidate(grid, ks[c / 2], c % 2 == 1);
        const double cn = cand.norm();
        if (cn == 0.0) continue;
        cand /= cn;
        linalg::Vector p = u * (u.transpose() * cand);
        for (int pass = 0; pass < 2 && found > 0; ++pass) {
          p -= chosen.leftCols(found) * (chosen.leftCols(found).transpose() * p);
        }
        const double pn = p.norm();
        if (pn > 1e-6) chosen.col(found++) = p / pn;
      }
      vectors.middleCols(start, dim) = chosen;
    }
    start = end;
  }
  for (Eigen::Index k = 0; k < std::min(limit, total); ++k) fix_sign(vectors.col(k));
}

}  // namespace

Spectrum eigendecompose(const AndersonOperator& op, const Potential& a, std::size_t count) {
  const TorusGrid& grid = op.grid();
  require_same_grid(a.field, op.potential(), "eigendecompose");
  if (count == 0 || count > grid.size()) {
    throw DomainError("eigendecompose: count must lie in [1, n^2]");
  }
  const auto cnt = static_cast<Eigen::Index>(count);
  linalg::Vector values;
  linalg::Matrix vectors;
  if (op.dense()) {
    linalg::Matrix m = op.dense_neg_hc();
    m.diagonal() += a.field.values();
    Eigen::SelfAdjointEigenSolver<linalg::Matrix> es(m);
    if (es.info() != Eigen::Success) {
      throw ConvergenceError("eigendecompose: dense eigensolver failed", grid.size(), 0.0);
    }
    values = es.eigenvalues();
    vectors = es.eigenvectors();
  } else {
    linalg::EigenProblem prob;
    prob.dimension = grid.size();
    prob.constraints = linalg::Matrix(static_cast<Eigen::Index>(prob.dimension), 0);
    prob.apply_a = [&](const linalg::Vector& v) -> linalg::Vector {
      linalg::Vector out = op.apply_neg_hc(v);
      out.array() += a.field.values().array() * v.array();
      return out;
    };
    const double shift = std::max(op.c() + a.field.values().mean(), 1.0);
    prob.precondition = [&](const linalg::Vector& v) { return op.precondition(v, shift); };
    linalg::EigenOptions eo;
    eo.tol = 1e-10;
    // Extra pairs so clusters at the boundary are seen whole.
    const std::size_t want = std::min<std::size_t>(count + 4, grid.size());
    const auto pairs = linalg::lobpcg(prob, want, eo);
    if (!pairs.converged) {
      throw ConvergenceError("eigendecompose: LOBPCG did not converge", pairs.iterations,
                             pairs.residuals.maxCoeff());
    }
    values = pairs.values;
    vectors = pairs.vectors;
    for (Eigen::Index k = 0; k < vectors.cols(); ++k) vectors.col(k).normalize();
  }
  resolve_degeneracies(grid, values, vectors, cnt);

  Spectrum spec;
  const double inv_h = 1.0 / grid.spacing();
  for (Eigen::Index k = 0; k < cnt; ++k) {
    GridField e(grid, vectors.col(k) * inv_h);
    GridField r = op.apply_neg_hc(e);
    r.values().array() += a.field.values().array() * e.values().array();
    r.values() -= values[k] * e.values();
    spec.eigenvalues.push_back(values[k]);
    spec.residuals.push_back(norm_lp(r, 2.0));
    spec.eigenfields.push_back(std::move(e));
  }
  // Eigenvalues within rounding of zero count as non-positive, so m does not
  // depend on the sign of the rounding error.
  const double zero_tol = 1e-10 * (1.0 + std::abs(values[0]) + std::abs(values[cnt - 1]));
  spec.m = -1;
  for (Eigen::Index k = 0; k < cnt; ++k) {
    if (values[k] <= zero_tol) spec.m = static_cast<int>(k);
  }
  spec.m_resolved = values[cnt - 1] > zero_tol || (cnt < values.size() && values[cnt] > zero_tol);
  if (spec.m_resolved && static_cast<Eigen::Index>(spec.m + 1) < cnt) {
    spec.delta = gap_delta(op, a, spec);
  }
  return spec;
}

double gap_delta(const AndersonOperator& op, const Potential& a, const Spectrum& spectrum) {
  const TorusGrid& grid = op.grid();
  if (!spectrum.m_resolved || static_cast<std::size_t>(spectrum.m + 1) >= spectrum.eigenfields.size()) {
    throw DomainError("gap_delta requires a spectrum with count > m + 1");
  }
  const auto dim = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index k = spectrum.m + 1;
  linalg::Matrix e(dim, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    e.col(i) = spectrum.eigenfields[static_cast<std::size_t>(i)].values() * grid.spacing();
  }
  double delta = 0.0;
  if (op.dense()) {
    const linalg::Matrix& b = op.dense_neg_hc();
    linalg::Matrix am = b;
    am.diagonal() += a.field.values();
    linalg::Matrix q;
    if (k == 0) {
      q = linalg::Matrix::Identity(dim, dim);
    } else {
      Eigen::HouseholderQR<linalg::Matrix> qr(e);
      const linalg::Matrix full = qr.householderQ() * linalg::Matrix::Identity(dim, dim);
      q = full.rightCols(dim - k);
    }
    const linalg::Matrix ar = q.transpose() * am * q;
    const linalg::Matrix br = q.transpose() * b * q;
    Eigen::GeneralizedSelfAdjointEigenSolver<linalg::Matrix> ges(
        0.5 * (ar + ar.transpose()), 0.5 * (br + br.transpose()), Eigen::EigenvaluesOnly);
    if (ges.info() != Eigen::Success) {
      throw ConvergenceError("gap_delta: generalized eigensolver failed", grid.size(), 0.0);
    }
    delta = ges.eigenvalues().minCoeff();
  } else {
    linalg::EigenProblem prob;
    prob.dimension = grid.size();
    prob.constraints = e;
    prob.apply_a = [&](const linalg::Vector& v) -> linalg::Vector {
      linalg::Vector out = op.apply_neg_hc(v);
      out.array() += a.field.values().array() * v.array();
      return out;
    };
    prob.apply_b = [&](const linalg::Vector& v) { return op.apply_neg_hc(v); };
    prob.precondition = [&](const linalg::Vector& v) { return op.precondition(v, op.c()); };
    // The pencil minimum sits at the edge of a cluster accumulating at 1, so the
    // residual decays slowly while the Ritz value (error ~ residual^2) settles early.
    linalg::EigenOptions eo;
    eo.tol = 1e-5;
    const auto pairs = linalg::lobpcg(prob, 1, eo);
    if (!pairs.converged) {
      throw ConvergenceError("gap_delta: LOBPCG did not converge", pairs.iterations,
                             pairs.residuals[0]);
    }
    delta = pairs.values[0];
  }
  if (!(delta > 0.0)) {
    throw InconsistencyError("gap_delta: non-positive pencil minimum " + std::to_string(delta));
  }
  return delta;
}

}  // namespace anderson

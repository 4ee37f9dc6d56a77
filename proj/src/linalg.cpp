#include "anderson/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "anderson/errors.hpp"
#include "anderson/noise.hpp"

namespace anderson::linalg {

SolveStats pcg(const LinearMap& apply_a, const LinearMap& precond, const Vector& b, Vector& x,
               const IterativeOptions& opt) {
  SolveStats stats;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x = Vector::Zero(b.size());
    stats.converged = true;
    return stats;
  }
  if (x.size() != b.size()) x = Vector::Zero(b.size());
  Vector r = b - apply_a(x);
  Vector z = precond(r);
  Vector p = z;
  double rz = r.dot(z);
  stats.rel_residual = r.norm() / bnorm;
  while (stats.rel_residual > opt.rel_tol && stats.iterations < opt.max_iter) {
    const Vector ap = apply_a(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;  // lost positive definiteness
    const double alpha = rz / pap;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    ++stats.iterations;
    // Periodic true residual guards against drift in long runs.
    if (stats.iterations % 50 == 0) r = b - apply_a(x);
    stats.rel_residual = r.norm() / bnorm;
    z = precond(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  stats.rel_residual = (b - apply_a(x)).norm() / bnorm;
  stats.converged = stats.rel_residual <= opt.rel_tol * 10.0;
  return stats;
}

SolveStats minres(const LinearMap& apply_a, const LinearMap& precond, const Vector& b, Vector& x,
                  const IterativeOptions& opt) {
  SolveStats stats;
  const Eigen::Index n = b.size();
  x = Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    stats.converged = true;
    return stats;
  }
  Vector r1 = b;
  Vector y = precond(r1);
  const double beta1 = std::sqrt(std::max(r1.dot(y), 0.0));
  if (beta1 == 0.0) {
    stats.converged = true;
    return stats;
  }
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  Vector w = Vector::Zero(n), w1(n), w2 = Vector::Zero(n);
  Vector r2 = r1;
  const double eps = std::numeric_limits<double>::epsilon();

  for (std::size_t itn = 1; itn <= opt.max_iter; ++itn) {
    const Vector v = y / beta;
    y = apply_a(v);
    if (itn >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = precond(r2);
    oldb = beta;
    beta = std::sqrt(std::max(r2.dot(y), 0.0));

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), eps);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x.noalias() += phi * w;
    stats.iterations = itn;

    // phibar estimates the preconditioned residual; confirm with the true one.
    if (phibar / beta1 <= opt.rel_tol || beta == 0.0) {
      stats.rel_residual = (b - apply_a(x)).norm() / bnorm;
      if (stats.rel_residual <= opt.rel_tol * 10.0 || beta == 0.0) break;
    }
  }
  stats.rel_residual = (b - apply_a(x)).norm() / bnorm;
  stats.converged = stats.rel_residual <= opt.rel_tol * 10.0;
  return stats;
}

namespace {

Matrix apply_columns(const LinearMap& op, const Matrix& v) {
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index k = 0; k < v.cols(); ++k) out.col(k) = op(v.col(k));
  return out;
}

// Makes the columns of v B-orthonormal and B-orthogonal to q (already
// B-orthonormal, bq = B q). Numerically dependent columns are dropped.
Matrix b_orthonormalize(Matrix v, const Matrix& q, const Matrix& bq, const LinearMap& apply_b) {
  for (int pass = 0; pass < 2 && v.cols() > 0; ++pass) {
    if (q.cols() > 0) v -= q * (bq.transpose() * v);
    const Matrix bv = apply_b ? apply_columns(apply_b, v) : v;
    Matrix gram = v.transpose() * bv;
    gram = 0.5 * (gram + gram.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const Vector& lam = es.eigenvalues();
    const double top = lam.size() > 0 ? lam.maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
      if (lam[k] > 1e-10 * top && lam[k] > 0.0) keep.push_back(k);
    }
    Matrix basis(v.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      basis.col(static_cast<Eigen::Index>(c)) =
          v * es.eigenvectors().col(keep[c]) / std::sqrt(lam[keep[c]]);
    }
    v = std::move(basis);
  }
  return v;
}

}  // namespace

EigenPairs lobpcg(const EigenProblem& problem, std::size_t nev, const EigenOptions& opt) {
  const auto n = static_cast<Eigen::Index>(problem.dimension);
  const Matrix& c = problem.constraints;
  const Eigen::Index free_dim = n - c.cols();
  if (nev == 0 || static_cast<Eigen::Index>(nev) > free_dim) {
    throw DomainError("lobpcg: requested more eigenpairs than the problem dimension");
  }
  const Eigen::Index bs =
      std::min<Eigen::Index>(static_cast<Eigen::Index>(nev + opt.guard_vectors), free_dim);

  auto project = [&](Matrix m) {
    if (c.cols() > 0) m -= c * (c.transpose() * m);
    return m;
  };
  auto apply_b = [&](const Matrix& m) {
    return problem.apply_b ? apply_columns(problem.apply_b, m) : m;
  };

  GaussianStream rng(opt.seed);
  Matrix x(n, bs);
  for (Eigen::Index j = 0; j < bs; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = rng.next();
  x = b_orthonormalize(project(x), Matrix(n, 0), Matrix(n, 0), problem.apply_b);

  Matrix p(n, 0);
  EigenPairs out;
  Vector theta;
  Vector res;
  for (std::size_t it = 0; it <= opt.max_iter; ++it) {
    // Rayleigh-Ritz on span[X, W, P].
    Matrix ax = apply_columns(problem.apply_a, x);
    Matrix gram = x.transpose() * ax;
    gram = 0.5 * (gram + gram.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> rr(gram);
    x = x * rr.eigenvectors();
    ax = ax * rr.eigenvectors();
    theta = rr.eigenvalues();
    const Matrix bx = apply_b(x);
    Matrix r = ax - bx * theta.asDiagonal();
    r = project(r);
    res.resize(x.cols());
    std::vector<Eigen::Index> active;
    bool done = true;
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      res[k] = r.col(k).norm() / x.col(k).norm();
      const bool conv = res[k] <= opt.tol * std::max(1.0, std::abs(theta[k]));
      if (!conv) active.push_back(k);
      if (k < static_cast<Eigen::Index>(nev) && !conv) done = false;
    }
    out.iterations = it;
    if (done || it == opt.max_iter) {
      out.converged = done;
      break;
    }

    Matrix w(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
      const Vector rk = r.col(active[k]);
      w.col(static_cast<Eigen::Index>(k)) = problem.precondition ? problem.precondition(rk) : rk;
    }
    w = b_orthonormalize(project(w), x, bx, problem.apply_b);
    Matrix xw(n, x.cols() + w.cols());
    xw << x, w;
    const Matrix bxw = apply_b(xw);
    if (p.cols() > 0) p = b_orthonormalize(project(p), xw, bxw, problem.apply_b);

    Matrix s(n, xw.cols() + p.cols());
    s << xw, p;
    const Matrix as = apply_columns(problem.apply_a, s);
    Matrix g = s.transpose() * as;
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    const Matrix y = es.eigenvectors().leftCols(bs);
    const Eigen::Index nx = x.cols();
    x = s * y;
    p = s.rightCols(s.cols() - nx) * y.bottomRows(s.cols() - nx);
    x = b_orthonormalize(project(x), Matrix(n, 0), Matrix(n, 0), problem.apply_b);
  }
  out.values = theta.head(static_cast<Eigen::Index>(nev));
  out.vectors = x.leftCols(static_cast<Eigen::Index>(nev));
  out.residuals = res.head(static_cast<Eigen::Index>(nev));
  return out;
}

namespace {

// One Krylov step; returns false when the basis budget is exhausted.
bool expm_krylov_step(const LinearMap& apply_s, double t, const Vector& v, double rel_tol,
                      std::size_t max_basis, Vector& result) {
  const double vnorm = v.norm();
  if (vnorm == 0.0) {
    result = v;
    return true;
  }
  const Eigen::Index n = v.size();
  const auto m_max = static_cast<Eigen::Index>(std::min<std::size_t>(max_basis, static_cast<std::size_t>(n)));
  Matrix basis(n, m_max);
  Vector alpha(m_max), beta(m_max);
  basis.col(0) = v / vnorm;

  auto krylov_solution = [&](Eigen::Index m, double& tail) {
    Matrix tri = Matrix::Zero(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      tri(k, k) = alpha[k];
      if (k + 1 < m) tri(k, k + 1) = tri(k + 1, k) = beta[k];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(tri);
    const Vector ex = (-t * es.eigenvalues().array()).exp().matrix();
    const Vector coeff = es.eigenvectors() * ex.asDiagonal() * es.eigenvectors().row(0).transpose();
    tail = std::abs(coeff[m - 1]) * beta[m - 1];
    return coeff;
  };

  for (Eigen::Index j = 0; j < m_max; ++j) {
    Vector w = apply_s(basis.col(j));
    alpha[j] = basis.col(j).dot(w);
    w -= alpha[j] * basis.col(j);
    if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    }
    beta[j] = w.norm();
    const bool breakdown = beta[j] <= 1e-14 * std::abs(alpha[j]) || beta[j] == 0.0;
    const Eigen::Index m = j + 1;
    if (breakdown || m % 4 == 0 || m == m_max) {
      double tail = 0.0;
      const Vector coeff = krylov_solution(m, tail);
      if (breakdown || tail <= rel_tol * coeff.norm()) {
        result = vnorm * (basis.leftCols(m) * coeff);
        return true;
      }
    }
    if (j + 1 < m_max) basis.col(j + 1) = w / beta[j];
  }
  return false;
}

}  // namespace

Vector expm_krylov(const LinearMap& apply_s, double t, const Vector& v, double rel_tol,
                   std::size_t max_basis) {
  Vector w = v;
  double remaining = t;
  double dt = t;
  std::size_t halvings = 0;
  while (remaining > 0.0) {
    dt = std::min(dt, remaining);
    Vector next;
    if (expm_krylov_step(apply_s, dt, w, rel_tol, max_basis, next)) {
      w = std::move(next);
      remaining -= dt;
    } else {
      dt *= 0.5;
      if (++halvings > 60) throw ConvergenceError("expm_krylov: time step underflow", max_basis, remaining);
    }
  }
  return w;
}

Matrix assemble_dense(const LinearMap& apply, std::size_t dimension) {
  const auto n = static_cast<Eigen::Index>(dimension);
  Matrix m(n, n);
  Vector e = Vector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    e[k] = 1.0;
    m.col(k) = apply(e);
    e[k] = 0.0;
  }
  return m;
}

}  // namespace anderson::linalg

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "anderson/anderson_operator.hpp"
#include "anderson/builtins.hpp"
#include "anderson/errors.hpp"
#include "anderson/noise.hpp"
#include "anderson/schrodinger_spectral.hpp"
#include "oracles.hpp"

using namespace anderson;
using std::numbers::pi;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

AndersonOperator flat(std::size_t n) {
  return AndersonOperator(NoiseSample{GridField(TorusGrid(n)), 0, std::nullopt});
}

AndersonOperator seeded(std::size_t n, std::uint64_t seed) {
  return AndersonOperator(sample_white_noise(TorusGrid(n), seed));
}

Potential constant(const TorusGrid& g, double v) { return Potential(GridField(g, v), kInf); }

}  // namespace

TEST_CASE("kato_modulus_log") {
  const TorusGrid g(256);
  const double r = 0.1;
  const double analytic = pi * r * r * (0.5 - std::log(r));
  CHECK(std::abs(kato_modulus_log(constant(g, 1.0), r) / analytic - 1.0) <= 0.1);
  CHECK(std::abs(kato_modulus_log(constant(g, 1.0), r) / 0.0898 - 1.0) <= 0.1);
  CHECK(kato_modulus_log(constant(g, 0.0), r) == 0.0);

  const TorusGrid g64(64);
  const Potential a = make_potential("builtin:random:3:6:2", g64);
  for (double rr : {0.8, 0.5, 0.3}) CHECK(kato_modulus_log(a, rr / 2) <= kato_modulus_log(a, rr));
  CHECK_THROWS_AS(kato_modulus_log(a, 0.05), DomainError);
  CHECK_THROWS_AS(kato_modulus_log(a, 1.0), DomainError);
}

TEST_CASE("kato_modulus_heat") {
  const auto op = flat(16);
  for (double T : {1.0, 0.25, 1.0 / 64}) {
    const double v = kato_modulus_heat(op, constant(op.grid(), 1.0), T);
    CHECK(v == doctest::Approx(1 - std::exp(-T)).epsilon(5e-3));
    // The same 16-node geometric rule applied to e^{-s} by hand.
    double rule = 0.0, prev_s = 0.0, prev_f = 0.0;
    for (int k = 0; k < 16; ++k) {
      const double s = T * std::pow(256.0, -(15.0 - k) / 15.0);
      const double f = std::exp(-s);
      rule += k == 0 ? s * f : 0.5 * (s - prev_s) * (f + prev_f);
      prev_s = s;
      prev_f = f;
    }
    CHECK(v == doctest::Approx(rule).epsilon(1e-10));
  }
  CHECK(kato_modulus_heat(op, constant(op.grid(), 0.0), 0.5) == 0.0);

  const auto sop = seeded(32, 8);
  const Potential a(make_potential("builtin:spike:2", sop.grid()).field, 2.0);
  double prev = kInf;
  for (double T = 1.0; T >= 1.0 / 64; T /= 2) {
    const double v = kato_modulus_heat(sop, a, T);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(kato_modulus_heat(op, constant(op.grid(), 1.0), 1.5), DomainError);
}

TEST_CASE("resolvent_sup_norm") {
  const auto op = flat(16);
  for (double lambda : {0.0, 1.0, 10.0, 1000.0}) {
    CHECK(resolvent_sup_norm(op, constant(op.grid(), 1.0), lambda) == doctest::Approx(1 / (1 + lambda)).epsilon(1e-10));
  }
  CHECK(resolvent_sup_norm(op, constant(op.grid(), 0.0), 1.0) == 0.0);
  const auto sop = seeded(32, 2);
  const Potential a = make_potential("builtin:random:5", sop.grid());
  double prev = kInf;
  for (double lambda : {1.0, 10.0, 100.0, 1000.0}) {
    const double v = resolvent_sup_norm(sop, a, lambda);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("form bound constant") {
  const auto op0 = flat(8);
  CHECK(form_bound_constant(op0, constant(op0.grid(), 1.0), 0.5) == doctest::Approx(0.5).epsilon(1e-10));
  const auto op = seeded(8, 4);
  for (double eta : {1.0, 2.0}) CHECK(form_bound_constant(op, constant(op.grid(), 1.0), eta) == 0.0);

  // Dense oracle: largest eigenvalue of diag|a| - eta(-H_c).
  const Potential a = make_potential("builtin:random:1:3:4", op.grid());
  const oracle::Matrix m = oracle::neg_hc(op.noise().field, op.c());
  double prev = kInf;
  for (double eta : {0.1, 0.25, 0.5, 1.0, 2.0}) {
    oracle::Matrix t = -eta * m;
    t.diagonal() += a.field.values().cwiseAbs();
    const auto ev = oracle::jacobi(t);
    const double expect = std::max(ev.values[ev.values.size() - 1], 0.0);
    const double got = form_bound_constant(op, a, eta);
    CHECK(std::abs(got - expect) <= 1e-8 * (1 + expect));
    CHECK(got <= prev + 1e-12);
    prev = got;
  }
  CHECK_THROWS_AS(form_bound_constant(op, a, 0.0), DomainError);
}

TEST_CASE("form bound inequality on random fields") {
  for (std::size_t n : {16u, 64u}) {
    const auto op = seeded(n, 6);
    const Potential a = make_potential("builtin:spike:2", op.grid());
    for (double eta : {0.25, 1.0}) {
      const double m_eta = form_bound_constant(op, a, eta);
      for (std::uint64_t s = 0; s < 50; ++s) {
        const GridField u = random_field(op.grid(), 500 + s);
        GridField au(op.grid(), (a.field.values().cwiseAbs().array() * u.values().array()).matrix());
        const double lhs = inner_l2(u, au);
        const double en = op.energy_norm(u);
        CHECK(lhs <= eta * en * en + m_eta * inner_l2(u, u) + 1e-8 * (1 + lhs));
      }
    }
  }
}

TEST_CASE("zero-noise spectrum") {
  const auto op = flat(16);
  const Spectrum s = eigendecompose(op, constant(op.grid(), 0.0), 6);
  const double expect[] = {1, 2, 2, 2, 2, 3};
  for (int i = 0; i < 6; ++i) CHECK(std::abs(s.eigenvalues[i] - expect[i]) <= 1e-10);
  CHECK(s.m == -1);
  CHECK(s.delta == doctest::Approx(1.0).epsilon(1e-10));

  const Spectrum t = eigendecompose(op, constant(op.grid(), -3.0), 10);
  const double shifted[] = {-2, -1, -1, -1, -1, 0, 0, 0, 0, 2};
  for (int i = 0; i < 10; ++i) CHECK(std::abs(t.eigenvalues[i] - shifted[i]) <= 1e-10);
  // The zero eigenvalue is fourfold, so the last index with mu <= 0 is 8.
  CHECK(t.m == 8);
  CHECK(t.m_resolved);
}

TEST_CASE("degenerate clusters are resolved reproducibly") {
  const auto op = flat(16);
  const Spectrum a = eigendecompose(op, constant(op.grid(), 0.0), 6);
  const Spectrum b = eigendecompose(op, constant(op.grid(), 0.0), 6);
  for (int i = 0; i < 6; ++i) CHECK(a.eigenfields[i].values() == b.eigenfields[i].values());
  // Ties in magnitude go to the first node in row-major order.
  for (const auto& e : a.eigenfields) {
    const double top = e.values().cwiseAbs().maxCoeff();
    Eigen::Index at = 0;
    while (std::abs(e.values()[at]) < top * (1 - 1e-9)) ++at;
    CHECK(e.values()[at] > 0.0);
  }
}

TEST_CASE("spectrum against the dense oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto op = seeded(8, seed);
    const Potential a = make_potential("builtin:random:" + std::to_string(seed) + ":3:" + std::to_string(2.0 * seed), op.grid());
    const Spectrum s = eigendecompose(op, a, 6);
    oracle::Matrix m = oracle::neg_hc(op.noise().field, op.c());
    m.diagonal() += a.field.values();
    const auto ev = oracle::jacobi(m);
    for (int i = 0; i < 6; ++i) CHECK(oracle::rel_err(s.eigenvalues[i], ev.values[i]) <= 1e-8);

    // Eigenfields up to sign (the lowest pairs are simple for random data).
    for (int i = 0; i < 6; ++i) {
      const oracle::Vector ref = ev.vectors.col(i) / op.grid().spacing();
      const oracle::Vector& got = s.eigenfields[i].values();
      CHECK(std::min(oracle::rel_err(got, ref), oracle::rel_err(got, -ref)) <= 1e-8);
    }

    int m_expect = -1;
    for (int i = 0; i < 6; ++i)
      if (ev.values[i] <= 0) m_expect = i;
    CHECK(s.m == m_expect);
  }
}

TEST_CASE("spectrum invariants at the iterative size") {
  const auto op = seeded(64, 5);
  const Potential a = make_potential("builtin:spike:3", op.grid());
  const Spectrum s = eigendecompose(op, a, 6);
  for (std::size_t i = 0; i < 6; ++i) {
    if (i > 0) CHECK(s.eigenvalues[i] >= s.eigenvalues[i - 1]);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(std::abs(inner_l2(s.eigenfields[i], s.eigenfields[j]) - (i == j ? 1.0 : 0.0)) <= 1e-8);
    }
    GridField ae(op.grid(), (a.field.values().array() * s.eigenfields[i].values().array()).matrix());
    const double rq = inner_l2(s.eigenfields[i], op.apply_neg_hc(s.eigenfields[i]) + ae);
    CHECK(std::abs(rq - s.eigenvalues[i]) <= 1e-7 * (1 + std::abs(s.eigenvalues[i])));
  }
  // min-max: no random Rayleigh quotient undercuts mu_0.
  for (std::uint64_t k = 0; k < 200; ++k) {
    const GridField u = random_field(op.grid(), 9000 + k);
    GridField au(op.grid(), (a.field.values().array() * u.values().array()).matrix());
    const double rq = inner_l2(u, op.apply_neg_hc(u) + au) / inner_l2(u, u);
    CHECK(rq >= s.eigenvalues[0] - 1e-8);
  }
}

TEST_CASE("gap delta") {
  const auto op = seeded(8, 7);
  const Spectrum pos = eigendecompose(op, constant(op.grid(), 2.0), 6);
  CHECK(pos.delta >= 1.0);

  const Potential a = make_potential("builtin:random:4:3:6", op.grid());
  const Spectrum s = eigendecompose(op, a, 12);
  REQUIRE(s.m_resolved);
  const double delta = gap_delta(op, a, s);
  CHECK(delta > 0.0);

  // Pencil oracle on the Euclidean complement of e_0..e_m.
  const oracle::Matrix b = oracle::neg_hc(op.noise().field, op.c());
  oracle::Matrix am = b;
  am.diagonal() += a.field.values();
  const auto dim = static_cast<Eigen::Index>(op.grid().size());
  const Eigen::Index k = s.m + 1;
  oracle::Matrix e(dim, k);
  for (Eigen::Index i = 0; i < k; ++i) e.col(i) = s.eigenfields[static_cast<std::size_t>(i)].values().normalized();
  // Orthonormal complement basis by Gram-Schmidt on the identity.
  std::vector<oracle::Vector> basis;
  for (Eigen::Index j = 0; j < dim && static_cast<Eigen::Index>(basis.size()) < dim - k; ++j) {
    oracle::Vector v = oracle::Vector::Unit(dim, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < k; ++i) v -= e.col(i).dot(v) * e.col(i);
      for (const auto& q : basis) v -= q.dot(v) * q;
    }
    if (v.norm() > 1e-8) basis.push_back(v.normalized());
  }
  oracle::Matrix q(dim, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) q.col(static_cast<Eigen::Index>(i)) = basis[i];
  const oracle::Matrix br = q.transpose() * b * q;
  const oracle::Matrix ar = q.transpose() * am * q;
  // B = L L^T, then eig of L^-1 A L^-T.
  const Eigen::LLT<oracle::Matrix> llt(0.5 * (br + br.transpose()));
  oracle::Matrix linv = llt.matrixL().solve(oracle::Matrix::Identity(br.rows(), br.cols()));
  oracle::Matrix c = linv * ar * linv.transpose();
  const auto ev = oracle::jacobi(0.5 * (c + c.transpose()));
  CHECK(oracle::rel_err(delta, ev.values[0]) <= 1e-8);
  CHECK(oracle::rel_err(s.delta, ev.values[0]) <= 1e-8);
}

TEST_CASE("errors") {
  const auto op = flat(8);
  CHECK_THROWS_AS(eigendecompose(op, constant(op.grid(), 0.0), 0), DomainError);
  CHECK_THROWS_AS(eigendecompose(op, constant(op.grid(), 0.0), 65), DomainError);
  CHECK_THROWS_AS(eigendecompose(op, constant(TorusGrid(10), 0.0), 3), ShapeError);
}

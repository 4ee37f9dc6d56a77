#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "anderson/anderson_operator.hpp"
#include "anderson/builtins.hpp"
#include "anderson/errors.hpp"
#include "anderson/noise.hpp"
#include "anderson/selfdual_choquard.hpp"
#include "oracles.hpp"

using namespace anderson;
using std::numbers::pi;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ChoquardProblem flat(std::size_t n, double a = 1.0, double w = -1.0, double p = 2, double q = 3) {
  const TorusGrid g(n);
  return ChoquardProblem(AndersonOperator(NoiseSample{GridField(g), 0, std::nullopt}), Potential(GridField(g, a), kInf),
                         GridField(g, w), p, q);
}

ChoquardProblem seeded(std::size_t n, std::uint64_t seed, double p = 2, double q = 3) {
  const TorusGrid g(n);
  return ChoquardProblem(AndersonOperator(sample_white_noise(g, seed)), make_potential("builtin:const:1", g),
                         make_kernel("builtin:neggauss:0.5", g), p, q);
}

}  // namespace

TEST_CASE("lambda examples") {
  const auto pr = flat(8);
  CHECK(lambda_apply(pr, GridField(pr.grid())).values().cwiseAbs().maxCoeff() == 0.0);
  const GridField l1 = lambda_apply(pr, GridField(pr.grid(), 1.0));
  CHECK((l1.values().array() - 4 * pi * pi).abs().maxCoeff() <= 1e-10);

  for (double q : {3.0, 1.5}) {
    const auto ps = seeded(8, 2, 2, q);
    const GridField u = random_field(ps.grid(), 4);
    GridField fu(ps.grid(), u.values().cwiseAbs2());
    const GridField conv = oracle::convolve(fu, ps.w);
    GridField expect(ps.grid());
    for (std::size_t i = 0; i < ps.grid().size(); ++i) {
      expect[i] = -conv[i] * std::pow(std::abs(u[i]), q - 2) * u[i];
    }
    CHECK(oracle::rel_err(lambda_apply(ps, u).values(), expect.values()) <= 1e-10);
  }
}

TEST_CASE("lambda Hoelder bound") {
  const auto pr = seeded(16, 3);
  const auto zero = lambda_bound_check(pr, GridField(pr.grid()), random_field(pr.grid(), 1));
  CHECK(zero.lhs == 0.0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const GridField u = random_field(pr.grid(), 2 * s);
    const GridField v = random_field(pr.grid(), 2 * s + 1);
    const auto b = lambda_bound_check(pr, u, v);
    CHECK(b.lhs <= b.rhs * (1 + 1e-8));
    const auto self = lambda_bound_check(pr, u, u);
    CHECK(self.lhs == doctest::Approx(std::abs(inner_l2(lambda_apply(pr, u), u))).epsilon(1e-12));
  }
}

TEST_CASE("Fenchel conjugate of the quadratic") {
  const auto pr = flat(16);
  CHECK(fenchel_conjugate_quadratic(pr, GridField(pr.grid())) == 0.0);
  CHECK(fenchel_conjugate_quadratic(pr, GridField(pr.grid(), 1.0)) == doctest::Approx(pi * pi).epsilon(1e-10));

  const auto ps = seeded(16, 5);
  const GridField p = random_field(ps.grid(), 9);
  const double star = fenchel_conjugate_quadratic(ps, p);
  double best = -kInf;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const GridField v = random_field(ps.grid(), 100 + s) * 0.1;
    const double val = inner_l2(p, v) - quadratic_energy(ps, v);
    CHECK(val <= star + 1e-8);
    best = std::max(best, val);
  }
  // The supremum is attained at A^{-1} p.
  const GridField arg = ps.op.resolvent_solve(ps.a.field, p);
  CHECK(inner_l2(p, arg) - quadratic_energy(ps, arg) == doctest::Approx(star).epsilon(1e-9));
}

TEST_CASE("self-dual value") {
  const auto pr = seeded(16, 6);
  CHECK(selfdual_value(pr, GridField(pr.grid())) == 0.0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const GridField u = random_field(pr.grid(), 300 + s) * (0.2 + 0.02 * static_cast<double>(s));
    const auto t = selfdual_terms(pr, u);
    CHECK(t.from_residual >= -1e-8);
    CHECK(std::abs(t.from_conjugate - t.from_residual) <= 1e-8 * (1 + std::abs(t.from_residual) + t.phi + t.phi_star));
    CHECK(t.coupling >= 0.0);
    CHECK(t.phi + t.coupling >= 0.5 * inner_l2(u, u) * (1 - 1e-12));
  }
}

TEST_CASE("self-dual gradient against central differences") {
  const auto pr = seeded(8, 7);
  const double eps = 1e-6;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const GridField u = random_field(pr.grid(), s) * 0.5;
    const GridField v = random_field(pr.grid(), 50 + s);
    const double fd = (selfdual_value(pr, u + eps * v) - selfdual_value(pr, u - eps * v)) / (2 * eps);
    const double exact = inner_l2(selfdual_gradient(pr, u), v);
    CHECK(std::abs(fd - exact) <= 1e-5 * (1 + std::abs(exact)));
  }
}

TEST_CASE("lambda is norm continuous along a segment") {
  const auto pr = seeded(16, 8);
  const GridField u = random_field(pr.grid(), 1);
  const GridField v = random_field(pr.grid(), 2);
  const GridField lu = lambda_apply(pr, u);
  double prev = kInf;
  for (int n = 1; n <= 1024; n *= 4) {
    const double d = norm_lp(lambda_apply(pr, u + (1.0 / n) * v) - lu, 2);
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev <= 1e-2 * norm_lp(lu, 2));
}

TEST_CASE("minimisation") {
  const auto pr = flat(16);
  const auto zero = selfdual_minimize(pr, GridField(pr.grid()));
  CHECK(zero.trivial);
  CHECK(zero.selfdual_value == 0.0);
  CHECK(zero.iterations == 0);

  const auto r = selfdual_minimize(pr, GridField(pr.grid(), 1.0));
  CHECK(r.selfdual_value <= 1e-12);
  CHECK(r.residual_l2 <= 1e-6 * (1 + norm_lp(r.u, 2)));
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
  const GridField res = pr.op.apply_neg_hc(r.u) + r.u + lambda_apply(pr, r.u);
  CHECK(norm_lp(res, 2) <= 1e-6 * (1 + norm_lp(r.u, 2)));

  ChoquardParams tight;
  tight.max_iter = 1;
  tight.tol = 1e-14;
  CHECK_THROWS_AS(selfdual_minimize(pr, GridField(pr.grid(), 1.0), tight), ConvergenceError);
}

TEST_CASE("problem validation") {
  const TorusGrid g(8);
  const AndersonOperator op(NoiseSample{GridField(g), 0, std::nullopt});
  CHECK_THROWS_AS(ChoquardProblem(op, Potential(GridField(g, -1.0), kInf), GridField(g, -1.0)), DomainError);
  CHECK_THROWS_AS(ChoquardProblem(op, Potential(GridField(g, 1.0), kInf), GridField(g, 0.5)), DomainError);
  CHECK_THROWS_AS(ChoquardProblem(op, Potential(GridField(g, 1.0), kInf), GridField(g, -1.0), 0.5, 3), DomainError);
  CHECK_THROWS_AS(ChoquardProblem(op, Potential(GridField(g, 1.0), kInf), GridField(g, -1.0), 2, 1), DomainError);
  CHECK_THROWS_AS(ChoquardProblem(op, Potential(GridField(g, 1.0), kInf), GridField(TorusGrid(10), -1.0)), ShapeError);
}

TEST_CASE("custom maps") {
  auto pr = flat(8);
  pr.with_maps([](double z) { return z * z; }, [](double z) { return 2 * z; },
               [](double z) { return z / (1 + z * z); }, [](double z) { return (1 - z * z) / ((1 + z * z) * (1 + z * z)); });
  const GridField u = random_field(pr.grid(), 3);
  const auto t = selfdual_terms(pr, u);
  CHECK(std::abs(t.from_conjugate - t.from_residual) <= 1e-8 * (1 + t.from_residual));
  const double eps = 1e-6;
  const GridField v = random_field(pr.grid(), 4);
  const double fd = (selfdual_value(pr, u + eps * v) - selfdual_value(pr, u - eps * v)) / (2 * eps);
  CHECK(std::abs(fd - inner_l2(selfdual_gradient(pr, u), v)) <= 1e-5 * (1 + std::abs(fd)));
}

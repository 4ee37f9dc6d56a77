#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "anderson/errors.hpp"
#include "anderson/nonlinearity.hpp"

using namespace anderson;

namespace {

std::vector<double> z_grid(double reach, std::size_t count) {
  std::vector<double> z;
  for (std::size_t i = 0; i < count; ++i) z.push_back(-reach + 2 * reach * static_cast<double>(i) / static_cast<double>(count - 1));
  return z;
}

// Composite Simpson rule with panel pairs 0.01 wide, so table knots at
// multiples of 0.1 fall on pair boundaries.
double simpson(const Nonlinearity::Pointwise& f, std::size_t node, double z) {
  const int panels = std::max(2, 2 * static_cast<int>(std::lround(std::abs(z) / 0.01)));
  const double h = z / panels;
  double s = f(node, 0.0) + f(node, z);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(node, i * h);
  return s * h / 3.0;
}

const std::vector<std::size_t> kNodes{0, 5, 17};

}  // namespace

TEST_CASE("antiderivatives agree with quadrature") {
  const auto cubic_tab = [] {
    std::vector<double> z, f;
    for (int i = -120; i <= 120; ++i) {
      z.push_back(i / 10.0);
      f.push_back(std::pow(i / 10.0, 3));
    }
    return Nonlinearity::tabulated(z, f, 4, 4, 1, true);
  }();
  const auto custom = Nonlinearity::from_function(
      "sinh-like", [](std::size_t x, double z) { return (1.0 + 0.1 * static_cast<double>(x % 3)) * z * z * z + std::sin(z) - z; },
      [](std::size_t x, double z) { return 3 * (1.0 + 0.1 * static_cast<double>(x % 3)) * z * z + std::cos(z) - 1; }, 4, 4, 2, true);
  // The table is piecewise linear, so its derivative is only checked elsewhere.
  const std::vector<std::pair<Nonlinearity, bool>> cases{
      {Nonlinearity::pow3(), true}, {Nonlinearity::pow_ell(4), true}, {cubic_tab, false}, {custom, true}};
  for (const auto& [nl, smooth] : cases) {
    for (std::size_t x : kNodes) {
      CHECK(nl.F(x, 0.0) == 0.0);
      for (double z : z_grid(10, 41)) {
        const double q = simpson(nl.f, x, z);
        CHECK(std::abs(nl.F(x, z) - q) <= 1e-8 * (1 + std::abs(q)));
        if (nl.odd) CHECK(nl.f(x, -z) == doctest::Approx(-nl.f(x, z)).epsilon(1e-14));
        if (!smooth) continue;
        const double eps = 1e-6 * (1 + std::abs(z));
        const double fd = (nl.f(x, z + eps) - nl.f(x, z - eps)) / (2 * eps);
        CHECK(std::abs(nl.dfdz(x, z) - fd) <= 1e-5 * (1 + std::abs(fd)));
      }
    }
  }
}

TEST_CASE("pow_ell") {
  const auto nl = Nonlinearity::pow_ell(2);
  CHECK(nl.f(0, -2.0) == -8.0);
  CHECK(nl.ell == 4);
  const auto six = Nonlinearity::pow_ell(4);
  CHECK(six.f(0, 2.0) == 32.0);
  CHECK(six.F(0, 2.0) == doctest::Approx(64.0 / 6.0));
  CHECK_THROWS_AS(Nonlinearity::pow_ell(3), DomainError);
  CHECK_THROWS_AS(Nonlinearity::pow_ell(0), DomainError);
}

TEST_CASE("assumption (A) for z^3") {
  const auto rep = check_assumption_a(Nonlinearity::pow3(), z_grid(12, 241), kNodes);
  CHECK(rep.passed);
  CHECK(rep.violations.empty());
  CHECK(rep.c1 == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rep.c2 == doctest::Approx(0.0));
  CHECK(rep.small_z_ratio <= 1e-10);

  const auto same = check_assumption_a(Nonlinearity::pow_ell(2), z_grid(12, 241), kNodes);
  CHECK(same.passed);
  CHECK(same.c1 == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("assumption (A) rejects a linear f") {
  const auto lin = Nonlinearity::from_function(
      "linear", [](std::size_t, double z) { return z; }, [](std::size_t, double) { return 1.0; }, 4, 4, 1, true);
  const auto rep = check_assumption_a(lin, z_grid(12, 241), kNodes);
  CHECK_FALSE(rep.passed);
  bool small = false;
  for (const auto& v : rep.violations) small = small || v.condition.find("o(z)") != std::string::npos;
  CHECK(small);
}

TEST_CASE("assumption (A) rejects too large gamma") {
  auto nl = Nonlinearity::pow3();
  nl.gamma = 5;
  const auto rep = check_assumption_a(nl, z_grid(12, 241), kNodes);
  CHECK_FALSE(rep.passed);
  REQUIRE_FALSE(rep.violations.empty());
  CHECK(std::abs(rep.violations.front().z) >= nl.k);
}

TEST_CASE("sample coverage is required") {
  CHECK_THROWS_AS(check_assumption_a(Nonlinearity::pow3(), z_grid(5, 11), kNodes), DomainError);
  CHECK_THROWS_AS(check_assumption_a(Nonlinearity::pow3(), z_grid(12, 11), {}), DomainError);
}

TEST_CASE("tabulated interpolation") {
  const auto nl = Nonlinearity::tabulated({-2, 0, 1, 2}, {-4, 0, 1, 4}, 4, 4, 1, false);
  CHECK(nl.f(0, 0.5) == doctest::Approx(0.5));
  CHECK(nl.f(0, 1.5) == doctest::Approx(2.5));
  CHECK(nl.F(0, 2.0) == doctest::Approx(0.5 + 2.5));
  CHECK(nl.F(0, -2.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(Nonlinearity::tabulated({0, 0}, {1, 1}, 4, 4, 1, false), DomainError);
}

TEST_CASE("field evaluation") {
  const TorusGrid g(4);
  GridField u(g, 2.0);
  u[3] = -1.0;
  const auto nl = Nonlinearity::pow3();
  CHECK(nl.eval_f(u)[0] == 8.0);
  CHECK(nl.eval_f(u)[3] == -1.0);
  CHECK(nl.eval_F(u)[0] == 4.0);
  CHECK(nl.eval_dfdz(u)[3] == 3.0);
}

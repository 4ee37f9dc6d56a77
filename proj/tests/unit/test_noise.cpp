#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "anderson/errors.hpp"
#include "anderson/noise.hpp"
#include "anderson/torus_grid.hpp"

using namespace anderson;
using std::numbers::pi;

TEST_CASE("white noise is deterministic under seed") {
  const TorusGrid g(16);
  const auto a = sample_white_noise(g, 42);
  const auto b = sample_white_noise(g, 42);
  const auto c = sample_white_noise(g, 43);
  CHECK(a.field.values() == b.field.values());
  CHECK(a.field.values() != c.field.values());
  CHECK(a.seed == 42);
  CHECK_FALSE(a.cutoff.has_value());
}

TEST_CASE("node variance is h^-2") {
  const TorusGrid g(32);
  double s2 = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto xi = sample_white_noise(g, seed);
    s2 += xi.field.values().squaredNorm();
    count += g.size();
  }
  const double var = s2 / static_cast<double>(count);
  const double expect = 1.0 / g.cell_measure();
  // 51200 samples, relative standard error sqrt(2 / 51200) ~ 0.6%.
  CHECK(std::abs(var / expect - 1.0) <= 0.03);
}

TEST_CASE("Monte Carlo moments of <xi, phi>") {
  const TorusGrid g(16);
  const GridField one(g, 1.0);
  const GridField c = GridField::from_function(g, [](double x1, double) { return std::cos(x1); });
  constexpr int kSeeds = 10000;
  double mean1 = 0.0, var_c = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    const auto xi = sample_white_noise(g, static_cast<std::uint64_t>(s));
    mean1 += inner_l2(xi.field, one);
    const double pc = inner_l2(xi.field, c);
    var_c += pc * pc;
  }
  mean1 /= kSeeds;
  var_c /= kSeeds;
  CHECK(std::abs(mean1) <= 3 * 2 * pi / 100);
  CHECK(std::abs(var_c / (2 * pi * pi) - 1.0) <= 0.1);
}

TEST_CASE("mollify") {
  const TorusGrid g(16);
  const auto xi = sample_white_noise(g, 7);
  const auto same = mollify(xi, 8);
  CHECK((same.field.values() - xi.field.values()).cwiseAbs().maxCoeff() <= 1e-12 * xi.field.values().cwiseAbs().maxCoeff());
  REQUIRE(same.cutoff.has_value());
  CHECK(*same.cutoff == 8);

  const auto flat = mollify(xi, 0);
  const double mean = xi.field.values().mean();
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(flat.field[i] == doctest::Approx(mean).epsilon(1e-10));

  const auto low = mollify(xi, 2);
  for (const auto& k : g.wavenumbers()) {
    if (std::max(std::abs(k.k1), std::abs(k.k2)) > 2) CHECK(std::abs(dft_forward(low.field)[k]) <= 1e-13);
  }
  CHECK_THROWS_AS(mollify(xi, -1), DomainError);
  CHECK_THROWS_AS(mollify(xi, 9), DomainError);
}

TEST_CASE("mollified variance scales with the retained band") {
  const TorusGrid g(16);
  const int K = 3;
  double full = 0.0, kept = 0.0;
  for (std::uint64_t s = 0; s < 400; ++s) {
    const auto xi = sample_white_noise(g, s);
    full += xi.field.values().squaredNorm();
    kept += mollify(xi, K).field.values().squaredNorm();
  }
  const double ratio = kept / full;
  const double expect = (2.0 * K + 1) * (2.0 * K + 1) / 256.0;
  CHECK(std::abs(ratio / expect - 1.0) <= 0.05);
}

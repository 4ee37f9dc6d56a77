#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "anderson/errors.hpp"
#include "anderson/field_io.hpp"
#include "anderson/noise.hpp"
#include "anderson/torus_grid.hpp"
#include "oracles.hpp"

using namespace anderson;
using std::numbers::pi;

namespace {

GridField cos_x1(const TorusGrid& g) {
  return GridField::from_function(g, [](double x1, double) { return std::cos(x1); });
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "anderson_unit_grid";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("grid geometry") {
  const TorusGrid g(16);
  CHECK(g.spacing() * 16 == doctest::Approx(kTwoPi).epsilon(1e-15));
  CHECK(oracle::rel_err(g.cell_measure() * g.size(), 4 * pi * pi) <= 1e-12);
  CHECK_THROWS_AS(TorusGrid(7), DomainError);
  CHECK_THROWS_AS(TorusGrid(0), DomainError);

  const auto ks = g.wavenumbers();
  REQUIRE(ks.size() == g.size());
  CHECK(ks.front() == Wavenumber{-8, -8});
  CHECK(ks.back() == Wavenumber{7, 7});
  for (std::size_t i = 0; i < ks.size(); ++i) CHECK(g.spectral_index(ks[i]) == i);
}

TEST_CASE("inner products and norms") {
  for (std::size_t n : {8u, 16u, 30u}) {
    const TorusGrid g(n);
    const GridField one(g, 1.0);
    const GridField c = cos_x1(g);
    const GridField s = GridField::from_function(g, [](double x1, double) { return std::sin(x1); });
    CHECK(oracle::rel_err(inner_l2(one, one), 4 * pi * pi) <= 1e-12);
    CHECK(std::abs(inner_l2(c, s)) <= 1e-12);
    CHECK(oracle::rel_err(inner_l2(c, c), 2 * pi * pi) <= 1e-12);
    CHECK(oracle::rel_err(norm_lp(one, 2), 2 * pi) <= 1e-12);
    CHECK(norm_lp(GridField(g, -3.0), std::numeric_limits<double>::infinity()) == 3.0);
    CHECK(oracle::rel_err(norm_lp(c, 4), std::pow(4 * pi * pi * 3.0 / 8.0, 0.25)) <= 1e-12);
  }
  const TorusGrid g(8);
  CHECK_THROWS_AS(norm_lp(GridField(g, 1.0), 0.5), DomainError);
  CHECK_THROWS_AS(inner_l2(GridField(g), GridField(TorusGrid(10))), ShapeError);
}

TEST_CASE("norm_lp is homogeneous and sign blind for even p") {
  const TorusGrid g(12);
  const GridField u = random_field(g, 3);
  GridField a(g, u.values().cwiseAbs());
  for (double p : {2.0, 4.0, 6.0}) CHECK(oracle::rel_err(norm_lp(a, p), norm_lp(u, p)) <= 1e-14);
  for (double p : {1.0, 2.5, 7.0}) CHECK(oracle::rel_err(norm_lp(-2.5 * u, p), 2.5 * norm_lp(u, p)) <= 1e-13);
}

TEST_CASE("geodesic distance") {
  const TorusGrid g(16);
  CHECK(geodesic_dist(g, {3, 4}, {3, 4}) == 0.0);
  CHECK(geodesic_dist(g, {0, 0}, {8, 0}) == doctest::Approx(pi).epsilon(1e-15));
  CHECK(geodesic_dist(g, {0, 0}, {15, 0}) == doctest::Approx(g.spacing()).epsilon(1e-13));
  for (std::size_t a = 0; a < g.size(); a += 7)
    for (std::size_t b = 0; b < g.size(); b += 5) {
      const double d = geodesic_dist(g, g.point(a), g.point(b));
      CHECK(d == geodesic_dist(g, g.point(b), g.point(a)));
      CHECK(d <= pi * std::sqrt(2.0) + 1e-12);
    }
}

TEST_CASE("dft examples and Parseval") {
  const TorusGrid g(16);
  const SpectralField one = dft_forward(GridField(g, 1.0));
  for (const auto& k : g.wavenumbers()) {
    const double expect = (k == Wavenumber{0, 0}) ? 1.0 : 0.0;
    CHECK(std::abs(one[k] - expect) <= 1e-14);
  }
  const SpectralField c = dft_forward(cos_x1(g));
  CHECK(std::abs(c[{1, 0}] - 0.5) <= 1e-14);
  CHECK(std::abs(c[{-1, 0}] - 0.5) <= 1e-14);

  const GridField u = random_field(g, 1);
  const GridField v = random_field(g, 2);
  const SpectralField uh = dft_forward(u);
  const SpectralField vh = dft_forward(v);
  CHECK(uh.hermitian_defect() <= 1e-12);
  std::complex<double> s = 0.0;
  for (const auto& k : g.wavenumbers()) s += uh[k] * std::conj(vh[k]);
  CHECK(oracle::rel_err(4 * pi * pi * s.real(), inner_l2(u, v)) <= 1e-10);
  CHECK(oracle::rel_err(dft_inverse(uh).values(), u.values()) <= 1e-12);
}

TEST_CASE("dft matches the defining sum") {
  const TorusGrid g(6);
  const GridField u = random_field(g, 9);
  const SpectralField uh = dft_forward(u);
  for (const auto& k : g.wavenumbers()) {
    std::complex<double> s = 0.0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      const auto p = g.point(idx);
      s += u[idx] * std::polar(1.0, -(k.k1 * g.coordinate(p.i) + k.k2 * g.coordinate(p.j)));
    }
    CHECK(std::abs(uh[k] - s / 36.0) <= 1e-13);
  }
}

TEST_CASE("laplacian agrees with the cosine-sum matrix") {
  const TorusGrid g(8);
  const GridField u = random_field(g, 4);
  const oracle::Vector expect = -(oracle::neg_laplacian(8) * u.values());
  CHECK(oracle::rel_err(laplacian(u).values(), expect) <= 1e-10);
  const GridField back = inverse_shifted_laplacian(laplacian(u) * -1.0 + u * 2.0, 2.0);
  CHECK(oracle::rel_err(back.values(), u.values()) <= 1e-12);
}

TEST_CASE("convolution") {
  const TorusGrid g(8);
  const GridField u = random_field(g, 5);
  const GridField w = random_field(g, 6);
  CHECK(oracle::rel_err(convolve(u, w).values(), oracle::convolve(u, w).values()) <= 1e-10);
  CHECK((convolve(u, w).values() - convolve(w, u).values()).cwiseAbs().maxCoeff() <=
        1e-12 * convolve(u, w).values().cwiseAbs().maxCoeff());
  CHECK(oracle::rel_err(convolve(u, dirac(g, {0, 0})).values(), u.values()) <= 1e-12);
  const GridField k = convolve(u, GridField(g, 1.0));
  const double mass = g.cell_measure() * u.values().sum();
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(k[i] == doctest::Approx(mass).epsilon(1e-12));
}

TEST_CASE("dirac reproduces point values") {
  const TorusGrid g(10);
  const GridField u = random_field(g, 8);
  CHECK(inner_l2(dirac(g, {3, 7}), u) == doctest::Approx(u.at(3, 7)).epsilon(1e-14));
}

TEST_CASE("field dumps round trip bit for bit") {
  const TorusGrid g(8);
  GridField u = random_field(g, 12);
  u[5] = -0.0;
  u[6] = 1e-310;
  for (const char* name : {"u.f64", "u.csv"}) {
    const auto path = scratch(name);
    write_field(u, path);
    const GridField v = read_field(path);
    REQUIRE(v.grid() == g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::bit_cast<std::uint64_t>(v[i]) == std::bit_cast<std::uint64_t>(u[i]));
  }
  CHECK(std::filesystem::file_size(scratch("u.f64")) == 8 + 8 * g.size());
  std::ifstream csv(scratch("u.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "i,j,value");
  CHECK_THROWS(read_field(scratch("missing.f64")));
  CHECK_THROWS(write_field(u, scratch("u.txt")));
}

TEST_CASE("non-finite values are rejected") {
  const TorusGrid g(4);
  GridField u(g, 1.0);
  CHECK(u.all_finite());
  u[2] = std::nan("");
  CHECK_FALSE(u.all_finite());
  CHECK_THROWS_AS(ensure_finite(u, "test"), InconsistencyError);
}

#include "anderson/builtins.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "anderson/errors.hpp"
#include "anderson/field_io.hpp"
#include "anderson/noise.hpp"

namespace anderson {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double to_double(const std::string& s, const std::string& spec) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse number '" + s + "' in '" + spec + "'");
  }
}

std::uint64_t to_seed(const std::string& s, const std::string& spec) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse seed '" + s + "' in '" + spec + "'");
  }
}

void expect_arity(const std::vector<std::string>& parts, std::size_t lo, std::size_t hi,
                  const std::string& spec) {
  if (parts.size() < lo || parts.size() > hi) throw ConfigError("malformed specification '" + spec + "'");
}

GridField load_field(const std::string& path, const TorusGrid& grid) {
  GridField u = read_field(path);
  if (!(u.grid() == grid)) {
    throw ShapeError("field file '" + path + "' has n = " + std::to_string(u.grid().n()) +
                     ", expected " + std::to_string(grid.n()));
  }
  return u;
}

bool has_prefix(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

Potential make_potential(const std::string& spec, const TorusGrid& grid) {
  if (!has_prefix(spec, "builtin:")) {
    return Potential(load_field(spec, grid), std::numeric_limits<double>::infinity());
  }
  const auto parts = split(spec, ':');
  const std::string& kind = parts.size() > 1 ? parts[1] : std::string();
  if (kind == "const") {
    expect_arity(parts, 3, 3, spec);
    return Potential(GridField(grid, to_double(parts[2], spec)),
                     std::numeric_limits<double>::infinity());
  }
  if (kind == "spike") {
    expect_arity(parts, 3, 4, spec);
    const double q = to_double(parts[2], spec);
    const double amp = parts.size() > 3 ? to_double(parts[3], spec) : 1.0;
    if (!(q > 1.0)) throw ConfigError("spike exponent q must exceed 1 in '" + spec + "'");
    const GridPoint x0{grid.n() / 2, grid.n() / 2};
    const double h = grid.spacing();
    GridField a(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double d = std::max(geodesic_dist(grid, grid.point(k), x0), h);
      a[k] = amp * std::pow(d, -2.0 / q);
    }
    // In L^p for every p < q; the midpoint of (1, q) is declared.
    return Potential(std::move(a), 0.5 * (1.0 + q));
  }
  if (kind == "random") {
    expect_arity(parts, 3, 5, spec);
    const std::uint64_t seed = to_seed(parts[2], spec);
    const double kcut = parts.size() > 3 ? to_double(parts[3], spec) : 4.0;
    const double amp = parts.size() > 4 ? to_double(parts[4], spec) : 1.0;
    const GridField raw = random_field(grid, seed);
    GridField smooth = apply_fourier_multiplier(raw, [kcut](int k1, int k2) {
      return (std::abs(k1) <= kcut && std::abs(k2) <= kcut) ? 1.0 : 0.0;
    });
    const double top = smooth.values().cwiseAbs().maxCoeff();
    if (top > 0.0) smooth *= amp / top;
    return Potential(std::move(smooth), std::numeric_limits<double>::infinity());
  }
  throw ConfigError("unknown potential '" + spec + "'");
}

GridField make_kernel(const std::string& spec, const TorusGrid& grid) {
  if (!has_prefix(spec, "builtin:")) return load_field(spec, grid);
  const auto parts = split(spec, ':');
  expect_arity(parts, 3, 3, spec);
  const double v = to_double(parts[2], spec);
  if (parts[1] == "negconst") {
    if (v < 0.0) throw ConfigError("negconst expects a non-negative magnitude in '" + spec + "'");
    return GridField(grid, -v);
  }
  if (parts[1] == "neggauss") {
    if (!(v > 0.0)) throw ConfigError("neggauss width must be positive in '" + spec + "'");
    const GridPoint origin{0, 0};
    GridField w(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double d = geodesic_dist(grid, grid.point(k), origin);
      w[k] = -std::exp(-d * d / (2.0 * v * v)) / (kTwoPi * v * v);
    }
    return w;
  }
  throw ConfigError("unknown kernel '" + spec + "'");
}

Nonlinearity make_nonlinearity(const std::string& spec) {
  if (spec == "pow3") return Nonlinearity::pow3();
  const auto parts = split(spec, ':');
  if (parts.size() == 2 && parts[0] == "pow") {
    const double ell = to_double(parts[1], spec);
    if (ell != std::round(ell)) throw ConfigError("pow exponent must be an integer in '" + spec + "'");
    try {
      return Nonlinearity::pow_ell(static_cast<int>(ell));
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  if (!parts.empty() && parts[0] == "table" && (parts.size() == 2 || parts.size() == 5)) {
    std::ifstream in(parts[1]);
    if (!in) throw ConfigError("cannot open table '" + parts[1] + "'");
    std::vector<double> z, f;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto cols = split(line, ',');
      if (cols.size() != 2) throw ConfigError("table rows must be 'z,f': '" + line + "'");
      try {
        const double zv = std::stod(cols[0]);
        const double fv = std::stod(cols[1]);
        z.push_back(zv);
        f.push_back(fv);
      } catch (const std::exception&) {
        if (!z.empty()) throw ConfigError("bad table row '" + line + "'");
      }
    }
    const double ell = parts.size() == 5 ? to_double(parts[2], spec) : 4.0;
    const double gamma = parts.size() == 5 ? to_double(parts[3], spec) : 4.0;
    const double k = parts.size() == 5 ? to_double(parts[4], spec) : 1.0;
    bool odd = !z.empty();
    for (std::size_t i = 0; i < z.size() && odd; ++i) {
      const std::size_t j = z.size() - 1 - i;
      odd = std::abs(z[i] + z[j]) <= 1e-12 * (1.0 + std::abs(z[i])) &&
            std::abs(f[i] + f[j]) <= 1e-12 * (1.0 + std::abs(f[i]));
    }
    try {
      Nonlinearity nl = Nonlinearity::tabulated(std::move(z), std::move(f), ell, gamma, k, odd);
      nl.name = spec;
      return nl;
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  throw ConfigError("unknown nonlinearity '" + spec + "'");
}

GridField make_init(const std::string& spec, const TorusGrid& grid) {
  if (spec == "zero") return GridField(grid);
  if (spec == "one") return GridField(grid, 1.0);
  const auto parts = split(spec, ':');
  if (parts.size() == 2 && parts[0] == "const") return GridField(grid, to_double(parts[1], spec));
  if (parts.size() == 2 && parts[0] == "random") return random_field(grid, to_seed(parts[1], spec));
  throw ConfigError("unknown initial field '" + spec + "'");
}

}  // namespace anderson

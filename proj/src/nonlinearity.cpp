#include "anderson/nonlinearity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>

#include "anderson/errors.hpp"

namespace anderson {

Nonlinearity Nonlinearity::pow3() {
  Nonlinearity nl;
  nl.name = "pow3";
  nl.f = [](std::size_t, double z) { return z * z * z; };
  nl.dfdz = [](std::size_t, double z) { return 3.0 * z * z; };
  nl.F = [](std::size_t, double z) { return 0.25 * z * z * z * z; };
  nl.ell = 4.0;
  nl.gamma = 4.0;
  nl.k = 1.0;
  nl.odd = true;
  return nl;
}

Nonlinearity Nonlinearity::pow_ell(int ell) {
  if (ell < 2 || ell % 2 != 0) throw DomainError("pow_ell requires an even exponent >= 2");
  const double e = ell;
  Nonlinearity nl;
  nl.name = "pow:" + std::to_string(ell);
  nl.f = [e](std::size_t, double z) { return z * std::pow(std::abs(z), e); };
  nl.dfdz = [e](std::size_t, double z) { return (e + 1.0) * std::pow(std::abs(z), e); };
  nl.F = [e](std::size_t, double z) { return std::pow(std::abs(z), e + 2.0) / (e + 2.0); };
  nl.ell = e + 2.0;
  nl.gamma = e + 2.0;
  nl.k = 1.0;
  nl.odd = true;
  return nl;
}

Nonlinearity Nonlinearity::tabulated(std::vector<double> z, std::vector<double> f, double ell,
                                     double gamma, double k, bool odd) {
  if (z.size() != f.size() || z.size() < 2) throw DomainError("tabulated: need >= 2 (z, f) pairs");
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (!(z[i] > z[i - 1])) throw DomainError("tabulated: z must be strictly increasing");
  }
  struct Table {
    std::vector<double> z, f, cumulative;
    double offset = 0.0;  // integral from z_0 to 0
    std::size_t segment(double x) const {
      auto it = std::upper_bound(z.begin(), z.end(), x);
      std::size_t i = it == z.begin() ? 0 : static_cast<std::size_t>(it - z.begin()) - 1;
      return std::min(i, z.size() - 2);
    }
    double slope(std::size_t i) const { return (f[i + 1] - f[i]) / (z[i + 1] - z[i]); }
    double value(double x) const {
      const std::size_t i = segment(x);
      return f[i] + slope(i) * (x - z[i]);
    }
    // Integral of the interpolant from z_0 to x (linear extrapolation outside).
    double integral(double x) const {
      const std::size_t i = segment(x);
      const double dx = x - z[i];
      return cumulative[i] + f[i] * dx + 0.5 * slope(i) * dx * dx;
    }
  };
  auto t = std::make_shared<Table>();
  t->z = std::move(z);
  t->f = std::move(f);
  t->cumulative.assign(t->z.size(), 0.0);
  for (std::size_t i = 1; i < t->z.size(); ++i) {
    t->cumulative[i] = t->cumulative[i - 1] + 0.5 * (t->f[i] + t->f[i - 1]) * (t->z[i] - t->z[i - 1]);
  }
  t->offset = t->integral(0.0);

  Nonlinearity nl;
  nl.name = "table";
  nl.f = [t](std::size_t, double x) { return t->value(x); };
  nl.dfdz = [t](std::size_t, double x) { return t->slope(t->segment(x)); };
  nl.F = [t](std::size_t, double x) { return t->integral(x) - t->offset; };
  nl.ell = ell;
  nl.gamma = gamma;
  nl.k = k;
  nl.odd = odd;
  return nl;
}

Nonlinearity Nonlinearity::from_function(std::string name, Pointwise f, Pointwise dfdz, double ell,
                                         double gamma, double k, bool odd) {
  Nonlinearity nl;
  nl.name = std::move(name);
  nl.f = f;
  nl.dfdz = std::move(dfdz);
  // Composite 8-point Gauss-Legendre on [0, z], panels of width <= 0.25.
  nl.F = [f](std::size_t x, double z) {
    static constexpr std::array<double, 4> nodes = {0.1834346424956498, 0.5255324099163290,
                                                    0.7966664774136267, 0.9602898564975363};
    static constexpr std::array<double, 4> weights = {0.3626837833783620, 0.3137066458778873,
                                                      0.2223810344533745, 0.1012285362903763};
    const int panels = std::max(1, static_cast<int>(std::ceil(std::abs(z) / 0.25)));
    const double width = z / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * width;
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        const double off = 0.5 * width * nodes[q];
        s += weights[q] * (f(x, mid - off) + f(x, mid + off));
      }
    }
    return 0.5 * width * s;
  };
  nl.ell = ell;
  nl.gamma = gamma;
  nl.k = k;
  nl.odd = odd;
  return nl;
}

namespace {
GridField map_nodes(const GridField& u, const Nonlinearity::Pointwise& fn) {
  GridField out(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = fn(i, u[i]);
  return out;
}
}  // namespace

GridField Nonlinearity::eval_f(const GridField& u) const { return map_nodes(u, f); }
GridField Nonlinearity::eval_dfdz(const GridField& u) const { return map_nodes(u, dfdz); }
GridField Nonlinearity::eval_F(const GridField& u) const { return map_nodes(u, F); }

AssumptionReport check_assumption_a(const Nonlinearity& nl, const std::vector<double>& z_samples,
                                    const std::vector<std::size_t>& x_samples) {
  if (x_samples.empty()) throw DomainError("check_assumption_a: no x samples");
  const double reach = 10.0 * nl.k;
  const bool covers_pos = std::any_of(z_samples.begin(), z_samples.end(),
                                      [&](double z) { return z >= reach; });
  const bool covers_neg = std::any_of(z_samples.begin(), z_samples.end(),
                                      [&](double z) { return z <= -reach; });
  if (!covers_pos || !covers_neg) {
    throw DomainError("check_assumption_a: z samples must reach |z| >= 10 k on both sides");
  }

  AssumptionReport rep;
  std::map<std::string, int> per_condition;
  auto violate = [&](const char* what, std::size_t x, double z, double value) {
    rep.passed = false;
    if (per_condition[what]++ < 8) rep.violations.push_back({what, x, z, value});
  };

  rep.c1 = std::numeric_limits<double>::infinity();
  for (std::size_t x : x_samples) {
    if (std::abs(nl.F(x, 0.0)) > 1e-14) violate("F(x,0) = 0", x, 0.0, nl.F(x, 0.0));
    for (double z : z_samples) {
      const double fz = nl.f(x, z);
      const double Fz = nl.F(x, z);
      const double az = std::abs(z);
      rep.c_f = std::max(rep.c_f, std::abs(fz) / (1.0 + std::pow(az, nl.ell - 1.0)));
      rep.c_f_prime =
          std::max(rep.c_f_prime, std::abs(nl.dfdz(x, z)) / (1.0 + std::pow(az, nl.ell - 2.0)));
      if (Fz < -1e-12 * (1.0 + std::abs(z * fz))) violate("F >= 0", x, z, Fz);
      if (az >= nl.k) {
        const double lhs = nl.gamma * Fz;
        const double rhs = z * fz;
        if (lhs > rhs + 1e-10 * (1.0 + std::abs(rhs))) violate("gamma F <= z f", x, z, lhs - rhs);
        rep.c1 = std::min(rep.c1, Fz / std::pow(az, nl.gamma));
      }
      if (nl.odd && std::abs(nl.f(x, -z) + fz) > 1e-12 * (1.0 + std::abs(fz))) {
        violate("f odd", x, z, nl.f(x, -z) + fz);
      }
    }
    for (double z : {1e-6, -1e-6}) {
      const double ratio = std::abs(nl.f(x, z) / z);
      rep.small_z_ratio = std::max(rep.small_z_ratio, ratio);
      if (ratio > 1e-3) violate("f(x,z) = o(z)", x, z, ratio);
    }
  }
  if (!(rep.c1 > 0.0) || !std::isfinite(rep.c1)) {
    violate("F >= c1 |z|^gamma - c2 with c1 > 0", x_samples.front(), 0.0, rep.c1);
    rep.c1 = 0.0;
  }
  for (std::size_t x : x_samples) {
    for (double z : z_samples) {
      rep.c2 = std::max(rep.c2, rep.c1 * std::pow(std::abs(z), nl.gamma) - nl.F(x, z));
    }
  }
  return rep;
}

}  // namespace anderson

#include "anderson/torus_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "anderson/errors.hpp"
#include "fourier_engine.hpp"

namespace anderson {

namespace detail {

namespace {
std::mutex& engine_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

const FourierEngine& FourierEngine::get(std::size_t n) {
  static std::map<std::size_t, std::unique_ptr<FourierEngine>> engines;
  std::lock_guard<std::mutex> lock(engine_mutex());
  auto it = engines.find(n);
  if (it == engines.end()) {
    it = engines.emplace(n, std::unique_ptr<FourierEngine>(new FourierEngine(n))).first;
  }
  return *it->second;
}

FourierEngine::FourierEngine(std::size_t n) : n_(n) {
  const int ni = static_cast<int>(n);
  std::vector<double> real(n * n);
  std::vector<std::complex<double>> cplx(half_size());
  auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_dft_r2c_2d(ni, ni, real.data(), c, flags);
  inverse_plan_ = fftw_plan_dft_c2r_2d(ni, ni, c, real.data(), flags);

  const std::size_t half = n / 2 + 1;
  ksq_.resize(half_size());
  k1_.resize(half_size());
  k2_.resize(half_size());
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < half; ++b) {
      const std::size_t slot = a * half + b;
      const int ka = signed_wavenumber(a, n);
      const int kb = signed_wavenumber(b, n);
      k1_[slot] = ka;
      k2_[slot] = kb;
      ksq_[slot] = static_cast<double>(ka) * ka + static_cast<double>(kb) * kb;
    }
  }
}

FourierEngine::~FourierEngine() {
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void FourierEngine::forward(const double* in, std::complex<double>* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void FourierEngine::inverse(std::complex<double>* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(in), out);
}

}  // namespace detail

TorusGrid::TorusGrid(std::size_t n) : n_(n), h_(kTwoPi / static_cast<double>(n)) {
  if (n == 0 || n % 2 != 0) {
    throw DomainError("grid resolution must be a positive even integer, got " +
                      std::to_string(n));
  }
}

std::vector<Wavenumber> TorusGrid::wavenumbers() const {
  std::vector<Wavenumber> ks;
  ks.reserve(size());
  const int half = static_cast<int>(n_ / 2);
  for (int k1 = -half; k1 < half; ++k1) {
    for (int k2 = -half; k2 < half; ++k2) ks.push_back({k1, k2});
  }
  return ks;
}

std::size_t TorusGrid::spectral_index(Wavenumber k) const {
  const int half = static_cast<int>(n_ / 2);
  if (k.k1 < -half || k.k1 >= half || k.k2 < -half || k.k2 >= half) {
    throw DomainError("wavenumber outside [-n/2, n/2)");
  }
  return static_cast<std::size_t>(k.k1 + half) * n_ + static_cast<std::size_t>(k.k2 + half);
}

GridField::GridField(const TorusGrid& grid)
    : grid_(grid), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()))) {}

GridField::GridField(const TorusGrid& grid, double constant)
    : grid_(grid),
      values_(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()), constant)) {}

GridField::GridField(const TorusGrid& grid, Eigen::VectorXd values)
    : grid_(grid), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != grid_.size()) {
    throw ShapeError("field has " + std::to_string(values_.size()) + " values, grid expects " +
                     std::to_string(grid_.size()));
  }
}

GridField GridField::from_function(const TorusGrid& grid,
                                   const std::function<double(double, double)>& fn) {
  GridField u(grid);
  for (std::size_t i = 0; i < grid.n(); ++i) {
    for (std::size_t j = 0; j < grid.n(); ++j) {
      u[grid.index(i, j)] = fn(grid.coordinate(i), grid.coordinate(j));
    }
  }
  return u;
}

bool GridField::all_finite() const noexcept { return values_.allFinite(); }

GridField& GridField::operator+=(const GridField& other) {
  require_same_grid(*this, other, "field addition");
  values_ += other.values_;
  return *this;
}

GridField& GridField::operator-=(const GridField& other) {
  require_same_grid(*this, other, "field subtraction");
  values_ -= other.values_;
  return *this;
}

GridField& GridField::operator*=(double s) {
  values_ *= s;
  return *this;
}

SpectralField::SpectralField(const TorusGrid& grid, std::vector<std::complex<double>> coefficients)
    : grid_(grid), coeffs_(std::move(coefficients)) {
  if (coeffs_.size() != grid_.size()) throw ShapeError("spectral field size mismatch");
}

double SpectralField::hermitian_defect() const {
  const int n = static_cast<int>(grid_.n());
  const int half = n / 2;
  double scale = 0.0;
  for (const auto& c : coeffs_) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return 0.0;
  double defect = 0.0;
  for (const Wavenumber& k : grid_.wavenumbers()) {
    // -(-n/2) aliases onto -n/2.
    const int m1 = (k.k1 == -half) ? -half : -k.k1;
    const int m2 = (k.k2 == -half) ? -half : -k.k2;
    defect = std::max(defect, std::abs((*this)[Wavenumber{m1, m2}] - std::conj((*this)[k])));
  }
  return defect / scale;
}

void require_same_grid(const GridField& u, const GridField& v, const char* what) {
  if (!(u.grid() == v.grid())) {
    throw ShapeError(std::string(what) + ": grids differ (" + std::to_string(u.grid().n()) +
                     " vs " + std::to_string(v.grid().n()) + ")");
  }
}

double inner_l2(const GridField& u, const GridField& v) {
  require_same_grid(u, v, "inner_l2");
  return u.grid().cell_measure() * u.values().dot(v.values());
}

double norm_lp(const GridField& u, double p) {
  if (std::isinf(p) && p > 0) return u.values().cwiseAbs().maxCoeff();
  if (!(p >= 1.0)) throw DomainError("norm_lp requires p >= 1");
  const double w = u.grid().cell_measure();
  if (p == 2.0) return std::sqrt(w * u.values().squaredNorm());
  if (p == 1.0) return w * u.values().cwiseAbs().sum();
  // Scale by the max to avoid overflow for large p.
  const double m = u.values().cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (double x : u.values()) s += std::pow(std::abs(x) / m, p);
  return m * std::pow(w * s, 1.0 / p);
}

double geodesic_dist(const TorusGrid& grid, GridPoint x, GridPoint y) {
  const double h = grid.spacing();
  auto wrap = [&](std::size_t a, std::size_t b) {
    const double d = std::abs(static_cast<double>(a) - static_cast<double>(b)) * h;
    return std::min(d, kTwoPi - d);
  };
  return std::hypot(wrap(x.i, y.i), wrap(x.j, y.j));
}

SpectralField dft_forward(const GridField& u) {
  const TorusGrid& g = u.grid();
  const std::size_t n = g.n();
  const auto& engine = detail::FourierEngine::get(n);
  std::vector<std::complex<double>> half(engine.half_size());
  engine.forward(u.values().data(), half.data());

  const std::size_t hw = n / 2 + 1;
  const double scale = 1.0 / static_cast<double>(n * n);
  std::vector<std::complex<double>> full(g.size());
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      std::complex<double> c;
      if (b < hw) {
        c = half[a * hw + b];
      } else {
        // Hermitian partner: c(a, b) = conj(c(-a, -b)).
        const std::size_t ma = (n - a) % n;
        const std::size_t mb = (n - b) % n;
        c = std::conj(half[ma * hw + mb]);
      }
      const Wavenumber k{detail::signed_wavenumber(a, n), detail::signed_wavenumber(b, n)};
      full[g.spectral_index(k)] = c * scale;
    }
  }
  return SpectralField(g, std::move(full));
}

GridField dft_inverse(const SpectralField& uhat) {
  const TorusGrid& g = uhat.grid();
  if (uhat.hermitian_defect() > 1e-12) {
    throw DomainError("dft_inverse: coefficients are not Hermitian symmetric");
  }
  const std::size_t n = g.n();
  const auto& engine = detail::FourierEngine::get(n);
  const std::size_t hw = n / 2 + 1;
  std::vector<std::complex<double>> half(engine.half_size());
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < hw; ++b) {
      const Wavenumber k{detail::signed_wavenumber(a, n), detail::signed_wavenumber(b, n)};
      half[a * hw + b] = uhat[k];
    }
  }
  GridField u(g);
  engine.inverse(half.data(), u.values().data());
  return u;
}

namespace {

template <typename Symbol>
GridField multiply_half_spectrum(const GridField& u, Symbol&& symbol) {
  const std::size_t n = u.grid().n();
  const auto& engine = detail::FourierEngine::get(n);
  std::vector<std::complex<double>> half(engine.half_size());
  engine.forward(u.values().data(), half.data());
  const double scale = 1.0 / static_cast<double>(n * n);
  for (std::size_t s = 0; s < half.size(); ++s) half[s] *= scale * symbol(s, engine);
  GridField out(u.grid());
  engine.inverse(half.data(), out.values().data());
  return out;
}

}  // namespace

GridField apply_fourier_multiplier(const GridField& u,
                                   const std::function<double(int, int)>& symbol) {
  return multiply_half_spectrum(u, [&](std::size_t s, const detail::FourierEngine& e) {
    return symbol(e.k1(s), e.k2(s));
  });
}

GridField laplacian(const GridField& u) {
  return multiply_half_spectrum(
      u, [](std::size_t s, const detail::FourierEngine& e) { return -e.ksq()[s]; });
}

GridField inverse_shifted_laplacian(const GridField& u, double shift) {
  if (!(shift > 0.0)) throw DomainError("inverse_shifted_laplacian requires shift > 0");
  return multiply_half_spectrum(u, [shift](std::size_t s, const detail::FourierEngine& e) {
    return 1.0 / (e.ksq()[s] + shift);
  });
}

GridField convolve(const GridField& u, const GridField& w) {
  require_same_grid(u, w, "convolve");
  const std::size_t n = u.grid().n();
  const auto& engine = detail::FourierEngine::get(n);
  std::vector<std::complex<double>> uh(engine.half_size());
  std::vector<std::complex<double>> wh(engine.half_size());
  engine.forward(u.values().data(), uh.data());
  engine.forward(w.values().data(), wh.data());
  // h^2 * (circular sum) with the 1/n^2 of the inverse transform.
  const double scale = u.grid().cell_measure() / static_cast<double>(n * n);
  for (std::size_t s = 0; s < uh.size(); ++s) uh[s] *= wh[s] * scale;
  GridField out(u.grid());
  engine.inverse(uh.data(), out.values().data());
  return out;
}

GridField dirac(const TorusGrid& grid, GridPoint x0) {
  if (x0.i >= grid.n() || x0.j >= grid.n()) throw DomainError("dirac: point outside grid");
  GridField d(grid);
  d[grid.index(x0)] = 1.0 / grid.cell_measure();
  return d;
}

void ensure_finite(const GridField& u, const char* where) {
  if (!u.all_finite()) {
    throw InconsistencyError(std::string(where) + ": non-finite values in field");
  }
}

}  // namespace anderson

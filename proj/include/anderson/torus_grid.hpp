#pragma once

// Discrete geometry and calculus on the flat torus [0, 2*pi)^2.
//
// A grid of n x n nodes x_{ij} = (i h, j h), h = 2*pi/n. Fields are stored
// row-major over (i, j), i.e. values[i * n + j]. All quadrature is the
// uniform rule h^2 * sum, which is exact for band-limited fields.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace anderson {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Integer wavenumber pair (k1, k2), each in [-n/2, n/2).
struct Wavenumber {
  int k1 = 0;
  int k2 = 0;
  friend bool operator==(const Wavenumber&, const Wavenumber&) = default;
};

/// Node index pair (i along x1, j along x2).
struct GridPoint {
  std::size_t i = 0;
  std::size_t j = 0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

class TorusGrid {
 public:
  /// n must be a positive even integer.
  explicit TorusGrid(std::size_t n);

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ * n_; }
  double spacing() const noexcept { return h_; }
  double cell_measure() const noexcept { return h_ * h_; }
  double total_measure() const noexcept { return kTwoPi * kTwoPi; }

  std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * n_ + j; }
  std::size_t index(GridPoint p) const noexcept { return p.i * n_ + p.j; }
  GridPoint point(std::size_t idx) const noexcept { return {idx / n_, idx % n_}; }
  double coordinate(std::size_t i) const noexcept { return static_cast<double>(i) * h_; }

  /// Wavenumbers in canonical (lexicographic) order, k in [-n/2, n/2)^2.
  std::vector<Wavenumber> wavenumbers() const;
  /// Position of k within the canonical order.
  std::size_t spectral_index(Wavenumber k) const;

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) noexcept { return a.n_ == b.n_; }

 private:
  std::size_t n_;
  double h_;
};

/// Real-valued function sampled on the grid.
class GridField {
 public:
  explicit GridField(const TorusGrid& grid);
  GridField(const TorusGrid& grid, double constant);
  GridField(const TorusGrid& grid, Eigen::VectorXd values);

  /// Samples fn(x1, x2) at every node.
  static GridField from_function(const TorusGrid& grid,
                                 const std::function<double(double, double)>& fn);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

  const Eigen::VectorXd& values() const noexcept { return values_; }
  Eigen::VectorXd& values() noexcept { return values_; }

  double operator[](std::size_t idx) const { return values_[static_cast<Eigen::Index>(idx)]; }
  double& operator[](std::size_t idx) { return values_[static_cast<Eigen::Index>(idx)]; }
  double at(std::size_t i, std::size_t j) const { return (*this)[grid_.index(i, j)]; }

  bool all_finite() const noexcept;

  GridField& operator+=(const GridField& other);
  GridField& operator-=(const GridField& other);
  GridField& operator*=(double s);

  friend GridField operator+(GridField a, const GridField& b) { return a += b; }
  friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
  friend GridField operator*(GridField a, double s) { return a *= s; }
  friend GridField operator*(double s, GridField a) { return a *= s; }
  friend GridField operator-(GridField a) { return a *= -1.0; }

 private:
  TorusGrid grid_;
  Eigen::VectorXd values_;
};

/// Fourier coefficients in canonical wavenumber order.
class SpectralField {
 public:
  SpectralField(const TorusGrid& grid, std::vector<std::complex<double>> coefficients);

  const TorusGrid& grid() const noexcept { return grid_; }
  const std::vector<std::complex<double>>& coefficients() const noexcept { return coeffs_; }
  std::vector<std::complex<double>>& coefficients() noexcept { return coeffs_; }

  std::complex<double> operator[](Wavenumber k) const { return coeffs_[grid_.spectral_index(k)]; }
  std::complex<double>& operator[](Wavenumber k) { return coeffs_[grid_.spectral_index(k)]; }

  /// Largest |c(-k) - conj(c(k))| relative to the largest |c(k)|.
  double hermitian_defect() const;

 private:
  TorusGrid grid_;
  std::vector<std::complex<double>> coeffs_;
};

void require_same_grid(const GridField& u, const GridField& v, const char* what);

double inner_l2(const GridField& u, const GridField& v);

/// (h^2 sum |u|^p)^(1/p); p = infinity gives max |u|.
double norm_lp(const GridField& u, double p);

double geodesic_dist(const TorusGrid& grid, GridPoint x, GridPoint y);

SpectralField dft_forward(const GridField& u);
GridField dft_inverse(const SpectralField& uhat);

/// Periodic convolution (w * u)(x) = h^2 sum_y w(x - y) u(y).
GridField convolve(const GridField& u, const GridField& w);

/// Multiplies the Fourier coefficients of u by symbol(k1, k2).
/// The symbol must be even in k so the result stays real.
GridField apply_fourier_multiplier(const GridField& u,
                                   const std::function<double(int, int)>& symbol);

/// Discrete Laplacian with symbol -|k|^2.
GridField laplacian(const GridField& u);

/// Solves (-Delta + shift) v = u exactly in Fourier space; shift > 0.
GridField inverse_shifted_laplacian(const GridField& u, double shift);

/// Discrete Dirac mass h^{-2} at x0, so that inner_l2(dirac, phi) = phi(x0).
GridField dirac(const TorusGrid& grid, GridPoint x0);

/// Throws InconsistencyError if the field contains NaN or infinity.
void ensure_finite(const GridField& u, const char* where);

}  // namespace anderson

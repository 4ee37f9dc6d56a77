#pragma once

// FFTW-backed half-spectrum transforms shared by all fields of a given size.
// Plans are created once per n under a mutex and executed through the
// new-array interface, which FFTW documents as thread safe.

#include <complex>
#include <cstddef>
#include <vector>

namespace anderson::detail {

class FourierEngine {
 public:
  /// Engine for n x n grids; created on first use and never destroyed.
  static const FourierEngine& get(std::size_t n);

  std::size_t n() const noexcept { return n_; }
  /// Number of complex coefficients in the half spectrum, n * (n/2 + 1).
  std::size_t half_size() const noexcept { return n_ * (n_ / 2 + 1); }

  /// Unnormalized forward transform sum_x u(x) e^{-i k x}.
  void forward(const double* in, std::complex<double>* out) const;
  /// Unnormalized inverse; overwrites `in`.
  void inverse(std::complex<double>* in, double* out) const;

  /// |k|^2 for every half-spectrum slot.
  const std::vector<double>& ksq() const noexcept { return ksq_; }
  /// Signed wavenumbers for every half-spectrum slot.
  int k1(std::size_t slot) const noexcept { return k1_[slot]; }
  int k2(std::size_t slot) const noexcept { return k2_[slot]; }

  ~FourierEngine();
  FourierEngine(const FourierEngine&) = delete;
  FourierEngine& operator=(const FourierEngine&) = delete;

 private:
  explicit FourierEngine(std::size_t n);

  std::size_t n_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
  std::vector<double> ksq_;
  std::vector<int> k1_;
  std::vector<int> k2_;
};

/// Maps a DFT slot 0..n-1 onto the canonical wavenumber in [-n/2, n/2).
inline int signed_wavenumber(std::size_t slot, std::size_t n) {
  const auto s = static_cast<long>(slot);
  const auto half = static_cast<long>(n / 2);
  return static_cast<int>(s < half ? s : s - static_cast<long>(n));
}

}  // namespace anderson::detail

#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "anderson/torus_grid.hpp"

namespace anderson {

/// Name of the generator recorded in run metadata.
inline constexpr const char* kRngAlgorithm = "mt19937_64+box-muller";

/// One realisation of spatial white noise on the grid.
struct NoiseSample {
  GridField field;
  std::uint64_t seed = 0;
  /// Retained frequencies |k|_inf <= cutoff, if mollified.
  std::optional<int> cutoff;
};

/// Standard normal deviates from mt19937_64 via the Box-Muller transform.
/// The stream is fully specified, so it reproduces across compilers.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed);
  double next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Seeded field with i.i.d. standard normal entries (test and solver helper).
GridField random_field(const TorusGrid& grid, std::uint64_t seed);

/// i.i.d. N(0, h^{-2}) node values, so that <xi, phi> ~ N(0, ||phi||^2).
NoiseSample sample_white_noise(const TorusGrid& grid, std::uint64_t seed);

/// Zeroes every Fourier mode with |k|_inf > cutoff; cutoff in [0, n/2].
NoiseSample mollify(const NoiseSample& xi, int cutoff);

}  // namespace anderson

#include "anderson/noise.hpp"

#include <cmath>
#include <string>

#include "anderson/errors.hpp"

namespace anderson {

GaussianStream::GaussianStream(std::uint64_t seed) : engine_(seed) {}

double GaussianStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - u keeps the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = kTwoPi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

GridField random_field(const TorusGrid& grid, std::uint64_t seed) {
  GaussianStream g(seed);
  GridField u(grid);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = g.next();
  return u;
}

NoiseSample sample_white_noise(const TorusGrid& grid, std::uint64_t seed) {
  GridField xi = random_field(grid, seed);
  xi *= 1.0 / grid.spacing();
  return NoiseSample{std::move(xi), seed, std::nullopt};
}

NoiseSample mollify(const NoiseSample& xi, int cutoff) {
  const TorusGrid& g = xi.field.grid();
  const int half = static_cast<int>(g.n() / 2);
  if (cutoff < 0 || cutoff > half) {
    throw DomainError("mollify: cutoff must lie in [0, " + std::to_string(half) + "]");
  }
  if (cutoff == half) return NoiseSample{xi.field, xi.seed, cutoff};
  GridField out = apply_fourier_multiplier(xi.field, [cutoff](int k1, int k2) {
    return (std::abs(k1) <= cutoff && std::abs(k2) <= cutoff) ? 1.0 : 0.0;
  });
  return NoiseSample{std::move(out), xi.seed, cutoff};
}

}  // namespace anderson

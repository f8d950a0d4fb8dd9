#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "mat/matrix.hpp"

namespace mat {

/// Deterministic random source. The mt19937_64 engine's output sequence is
/// pinned by the standard; all distribution transforms are hand-rolled here
/// so that a seed reproduces the same stream on any implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Box-Muller; stateless (the paired draw is discarded).
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return mean + stddev * r * std::cos(6.283185307179586477 * u2);
  }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void restore(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (!is) throw std::invalid_argument("Rng::restore: malformed state string");
  }

 private:
  std::mt19937_64 engine_;
};

/// Inverted-dropout mask: each entry is 0 with probability drop_rate, else
/// 1/(1 - drop_rate) so the masked vector keeps its expectation.
inline Vector dropout_mask(std::size_t n, double drop_rate, Rng& rng) {
  if (drop_rate < 0.0 || drop_rate >= 1.0)
    throw std::invalid_argument("dropout_mask: drop_rate must be in [0, 1)");
  Vector mask(n, 1);
  const double keep_scale = 1.0 / (1.0 - drop_rate);
  for (std::size_t i = 0; i < n; ++i)
    mask[i] = rng.uniform() < drop_rate ? 0.0 : keep_scale;
  return mask;
}

}  // namespace mat

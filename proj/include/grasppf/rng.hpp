#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace grasppf {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded random stream. Counter-based (splitmix64), so child streams can be
/// derived per particle index without touching the parent state; this is what
/// makes parallel and sequential runs produce the same numbers.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : state_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Independent stream keyed on `index`; does not advance this stream.
  Rng split(std::uint64_t index) const {
    Rng child(0);
    child.state_ = mix64(state_ ^ mix64(index + 0x3c6ef372fe94f82bULL));
    return child;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(*this); }
  double normal(double sigma) { return sigma == 0.0 ? 0.0 : sigma * normal_(*this); }

 private:
  std::uint64_t state_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace grasppf

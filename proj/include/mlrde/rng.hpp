#pragma once
// Reproducible random streams. The default engine is counter-based: every
// draw is a pure function of (key, counter), so independently addressed
// streams can be consumed in any order, on any number of threads, and still
// produce identical results. A Mersenne-Twister mode is kept for cross-checks.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <utility>

namespace mlrde {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Collision-resistant combination of two stream labels into one.
constexpr std::uint64_t substream_id(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64((a + 1) * kGoldenGamma + mix64(b ^ 0xd1b54a32d192ed03ULL));
}

enum class RngEngine { counter, mersenne };

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream, RngEngine engine = RngEngine::counter)
      : engine_(engine),
        key_(mix64(mix64(seed + kGoldenGamma) ^ mix64(stream * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL))) {
    if (engine_ == RngEngine::mersenne) mt_.emplace(key_);
  }

  std::uint64_t next_u64() {
    if (engine_ == RngEngine::counter) return mix64(key_ + (++counter_) * kGoldenGamma);
    return (*mt_)();
  }

  // Uniform on (0,1]; zero is excluded so log(u) stays finite.
  double uniform_open_closed() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform on [0,1).
  double uniform_closed_open() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Independent child stream addressed by `index`; this stream is unchanged.
  // The child key depends only on (parent key, index), never on how much of
  // the parent has been consumed.
  RngStream derive(std::uint64_t index) const {
    RngStream child(*this);
    child.key_ = mix64(key_ ^ mix64(index * kGoldenGamma + 0x94d049bb133111ebULL));
    child.counter_ = 0;
    if (engine_ == RngEngine::mersenne) child.mt_.emplace(child.key_);
    return child;
  }

  RngEngine engine() const { return engine_; }

 private:
  RngEngine engine_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<std::mt19937_64> mt_;
};

// Box-Muller transform: maps u1 in (0,1], u2 in [0,1) to two independent
// standard normals sqrt(-2 ln u1) * (cos, sin)(2 pi u2).
inline std::pair<double, double> box_muller(double u1, double u2) {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

inline std::pair<double, double> gaussian_pair(RngStream& rng) {
  const double u1 = rng.uniform_open_closed();
  const double u2 = rng.uniform_closed_open();
  return box_muller(u1, u2);
}

// Scalar N(0,1) draws on top of gaussian_pair; the second member of each
// pair is cached and returned on the next call.
class NormalStream {
 public:
  explicit NormalStream(RngStream rng) : rng_(std::move(rng)) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const auto [a, b] = gaussian_pair(rng_);
    spare_ = b;
    has_spare_ = true;
    return a;
  }

 private:
  RngStream rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mlrde

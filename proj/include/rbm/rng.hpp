#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace rbm {

/// SplitMix64 output function. Used both to seed stream state and to hash
/// (seed, id) pairs into stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Splittable random stream.
///
/// A stream is identified by a 64-bit key derived from (master_seed,
/// stream_id). Its state is a xoshiro256** generator seeded from the key via
/// SplitMix64, so equal (master_seed, stream_id) always give identical draws
/// on every platform. `split(id)` derives a child stream keyed by this
/// stream's key and `id`, which is how per-step and per-purpose streams are
/// built without sharing state.
///
/// Gaussian variates use the Box-Muller transform (both outputs consumed, the
/// sine branch is cached). Uniform integers use Lemire's multiply-and-reject
/// method. Neither depends on the standard library's distributions, whose
/// output is implementation-defined.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : master_seed_(master_seed),
        stream_id_(stream_id),
        key_(mix64(mix64(master_seed) ^ mix64(stream_id ^ 0xD1B54A32D192ED03ULL))) {
    std::uint64_t s = key_;
    for (auto& word : state_) {
      s += 0x9E3779B97F4A7C15ULL;
      word = mix64(s);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t key() const noexcept { return key_; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    __extension__ using u128 = unsigned __int128;
    u128 m = static_cast<u128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<u128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal variate.
  double normal() noexcept {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  RngStream split(std::uint64_t id) const noexcept { return RngStream(key_, id); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::array<std::uint64_t, 4> state_{};
  double cached_ = 0.0;
  bool has_cached_ = false;
};

inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept {
  return RngStream(master_seed, stream_id);
}

/// Purpose tags for streams derived from a run's master seed.
namespace streams {
inline constexpr std::uint64_t kInitial = 1;
inline constexpr std::uint64_t kBatches = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kGraph = 4;
}  // namespace streams

}  // namespace rbm

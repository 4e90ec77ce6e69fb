#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include <boost/random/normal_distribution.hpp>

namespace resnet_limits {

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Deterministic random stream: the sequence is a pure function of
/// (seed, stream_id, attempt). The Philox bijection keyed by the seed maps
/// the counter (stream_id, attempt) to a 256-bit xoshiro256++ state, which
/// then generates the stream sequentially.
///
/// Satisfies UniformRandomBitGenerator so it also works with <random> and
/// Boost.Random distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t attempt = 0)
      : seed_(seed), stream_id_(stream_id), attempt_(attempt) {
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed),
                                 static_cast<std::uint32_t>(seed >> 32)};
    const auto lo = static_cast<std::uint32_t>(stream_id);
    const auto hi = static_cast<std::uint32_t>(stream_id >> 32);
    const auto a = Philox4x32::apply({0u, attempt, lo, hi}, key);
    const auto b = Philox4x32::apply({1u, attempt, lo, hi}, key);
    state_ = {join(a[0], a[1]), join(a[2], a[3]), join(b[0], b[1]), join(b[2], b[3])};
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint32_t attempt() const { return attempt_; }

  result_type operator()() { return next_u64(); }

  // xoshiro256++ (Blackman and Vigna).
  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal deviate (Boost.Random ziggurat).
  double normal() { return normal_(*this); }

  void fill_normal(std::span<double> out) {
    for (double& x : out) x = normal_(*this);
  }

  /// Fills +1/-1 with probability 1/2 each.
  void fill_signs(std::span<double> out) {
    std::uint64_t bits = 0;
    int left = 0;
    for (double& s : out) {
      if (left == 0) {
        bits = next_u64();
        left = 64;
      }
      s = (bits & 1u) ? 1.0 : -1.0;
      bits >>= 1;
      --left;
    }
  }

 private:
  static constexpr std::uint64_t join(std::uint32_t lo, std::uint32_t hi) {
    return (std::uint64_t{hi} << 32) | lo;
  }
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint32_t attempt_;
  std::array<std::uint64_t, 4> state_{};
  boost::random::normal_distribution<double> normal_;
};

}  // namespace resnet_limits

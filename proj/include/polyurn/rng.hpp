// Copyright 2026 The polyurn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace polyurn {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Stateless: output depends only on (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMulA = 0xD2511F53u;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    return ctr;
  }
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Domain tags keep independent consumers of the same master seed apart.
enum class StreamDomain : std::uint64_t {
  Trajectory = 0x7472616aull,
  Bootstrap = 0x626f6f74ull,
  Hooking = 0x686f6f6bull,
  Fixture = 0x66697874ull,
};

/// A random stream identified by (master seed, domain, stream index).
///
/// The Philox key is splitmix64(master_seed ^ domain); the counter holds the
/// 64-bit block index in words 0-1 and the 64-bit stream index in words 2-3.
/// Each block yields two doubles in [0, 1) with 53 random bits each. Streams
/// with different indices never share a counter, so any stream can be
/// regenerated on its own without replaying others.
class Stream {
 public:
  Stream(std::uint64_t master_seed, std::uint64_t index, StreamDomain domain = StreamDomain::Trajectory) noexcept
      : index_(index) {
    const std::uint64_t k = splitmix64(master_seed ^ static_cast<std::uint64_t>(domain));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  /// Uniform double in [0, 1).
  double uniform() noexcept {
    if (cursor_ == 2) refill();
    return buffer_[cursor_++];
  }

  /// Uniform integer in [0, bound) by multiply-shift on 53 bits; bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(bound));
    return k < bound ? k : bound - 1;
  }

  std::uint64_t blocks_used() const noexcept { return block_; }

 private:
  void refill() noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32)};
    const auto out = Philox4x32::apply(ctr, key_);
    ++block_;
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    buffer_[0] = static_cast<double>(((std::uint64_t{out[0]} << 32) | out[1]) >> 11) * kScale;
    buffer_[1] = static_cast<double>(((std::uint64_t{out[2]} << 32) | out[3]) >> 11) * kScale;
    cursor_ = 0;
  }

  Philox4x32::Key key_{};
  std::uint64_t index_;
  std::uint64_t block_ = 0;
  std::array<double, 2> buffer_{};
  int cursor_ = 2;
};

}  // namespace polyurn

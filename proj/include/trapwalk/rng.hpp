#pragma once

#include <cstdint>
#include <limits>

namespace trapwalk {

/// 64-bit finalizer (Stafford variant 13). Bijective on uint64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream.
///
/// Output k of a stream is a fixed hash of (stream key, k), so a stream can be
/// reconstructed from its (master seed, index) pair alone and the result of a
/// Monte Carlo replica never depends on which worker ran it. Satisfies the
/// UniformRandomBitGenerator requirements, so std distributions accept it.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t master_seed, std::uint64_t stream_index) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t inner = mix64(inner_key_ + (counter_++) * kGolden);
    return mix64(outer_key_ + inner);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal (Marsaglia polar method, spare value cached).
  double normal() noexcept;

  /// Poisson variate with the given mean (mean >= 0).
  std::uint64_t poisson(double mean);

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  std::uint64_t inner_key_;
  std::uint64_t outer_key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Largest admissible stream index (indices live in [0, 2^62)).
inline constexpr std::int64_t kMaxStreamIndex = (std::int64_t{1} << 62) - 1;

/// Independent reproducible stream number `stream_index` of `master_seed`.
/// Throws std::out_of_range for negative or oversized indices.
Rng split_seed(std::uint64_t master_seed, std::int64_t stream_index);

/// Flattens a two-level (outer, inner) replica address into one stream index,
/// `outer * stride + inner`. Throws std::overflow_error when the result would
/// leave the admissible range and std::out_of_range when inner >= stride.
std::int64_t nested_stream_index(std::int64_t outer, std::int64_t inner,
                                 std::int64_t stride);

/// Seed of a sub-experiment addressed by (tag, a, b), e.g. the field for grid
/// point a, replicate b. Distinct addresses give unrelated seeds.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                    std::uint64_t a = 0, std::uint64_t b = 0) noexcept {
  std::uint64_t h = mix64(master + 0x243f6a8885a308d3ULL * (tag + 1));
  h = mix64(h ^ (a + 0x13198a2e03707344ULL));
  return mix64(h ^ (b + 0xa4093822299f31d0ULL));
}

}  // namespace trapwalk

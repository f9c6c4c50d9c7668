#include "trapwalk/rng.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace trapwalk {

Rng::Rng(std::uint64_t master_seed, std::uint64_t stream_index) noexcept
    : inner_key_(mix64(master_seed ^ 0x6a09e667f3bcc909ULL)),
      outer_key_(mix64(mix64(stream_index + 0x3c6ef372fe94f82bULL) ^ inner_key_)) {}

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("poisson mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(*this);
}

Rng split_seed(std::uint64_t master_seed, std::int64_t stream_index) {
  if (stream_index < 0 || stream_index > kMaxStreamIndex) {
    throw std::out_of_range("stream index out of range: " + std::to_string(stream_index));
  }
  return Rng(master_seed, static_cast<std::uint64_t>(stream_index));
}

std::int64_t nested_stream_index(std::int64_t outer, std::int64_t inner,
                                 std::int64_t stride) {
  if (outer < 0 || inner < 0 || stride <= 0) {
    throw std::out_of_range("stream indices must be nonnegative and stride positive");
  }
  if (inner >= stride) throw std::out_of_range("inner stream index exceeds stride");
  if (outer > (kMaxStreamIndex - inner) / stride) {
    throw std::overflow_error("nested stream index overflows");
  }
  return outer * stride + inner;
}

}  // namespace trapwalk

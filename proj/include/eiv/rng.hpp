#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

#include <Eigen/Core>

namespace eiv {

/// Counter-based 64-bit-state generator (splitmix64). Every draw advances the
/// state by a fixed odd constant and hashes it, so streams derived from
/// distinct seeds are independent for practical purposes and a stream is fully
/// determined by its seed. Used for all sampling in this project; nothing
/// depends on std:: distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Unbiased draw from {0, ..., n-1} by rejection.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = -n % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1;
    do { u1 = next_double(); } while (u1 <= 0.0);
    const double u2 = next_double();
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = two_pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  double next_rademacher() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

  void fill_gaussian(Eigen::Ref<Eigen::MatrixXd> M) {
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, j) = next_gaussian();
  }

  void fill_rademacher(Eigen::Ref<Eigen::MatrixXd> M) {
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, j) = next_rademacher();
  }

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Stream splitting: combine a seed with one more word, order-sensitively.
inline std::uint64_t seed_combine(std::uint64_t seed, std::uint64_t word) {
  return detail::mix64(seed ^ (word + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

inline std::uint64_t seed_combine(std::uint64_t seed, std::string_view tag) {
  // FNV-1a over the tag bytes, then one mixing round.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return seed_combine(seed, h);
}

/// stream = hash(master_seed, purpose_tag, index...). All per-trial and
/// per-cell seeds in the harness are derived through this, never sequentially,
/// so work units can run in any order on any number of threads.
template <typename... Parts>
std::uint64_t derive_stream(std::uint64_t master_seed, std::string_view tag, Parts... parts) {
  std::uint64_t s = seed_combine(master_seed, tag);
  ((s = seed_combine(s, static_cast<std::uint64_t>(parts))), ...);
  return s;
}

}  // namespace eiv

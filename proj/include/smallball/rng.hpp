#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace smallball {

// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the output
// depends only on (counter, key), which is what lets every replicate own an
// independent stream regardless of which thread generates it.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept;
};

/// Random stream keyed by (base_seed, replicate). Counter word layout:
/// [block_lo, block_hi, replicate_lo, replicate_hi]; key = base_seed.
///
/// Satisfies UniformRandomBitGenerator so it can be handed to <random>
/// distributions, but the sampler code uses uniform()/normal() directly so
/// that paths are bitwise reproducible independent of the standard library.
class ReplicateRng {
 public:
  using result_type = std::uint64_t;

  ReplicateRng(std::uint64_t base_seed, std::uint64_t replicate) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;

  std::uint64_t base_seed() const noexcept { return seed_; }
  std::uint64_t replicate() const noexcept { return replicate_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t replicate_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace smallball

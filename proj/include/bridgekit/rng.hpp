#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace bridgekit {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123). The 128-bit counter is
/// split into a 64-bit block index and a 64-bit stream index, so two streams with different
/// indices never share a counter value and hence never overlap.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t key, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// The raw 10-round bijection, exposed for known-answer tests.
  static Counter block(Counter counter, Key key);

  /// Skips `n` 64-bit outputs.
  void discard(std::uint64_t n);

 private:
  void refill();

  Key key_;
  std::uint64_t block_index_ = 0;
  std::uint64_t stream_;
  Counter buffer_{};
  int used_ = 4;  // number of 32-bit words of buffer_ consumed
};

/// Master seed plus stream derivation. Every random consumer asks for its own stream index;
/// the result of a computation never depends on how streams are scheduled onto threads.
class RngPolicy {
 public:
  explicit RngPolicy(std::uint64_t master_seed) : master_seed_(master_seed) {}

  std::uint64_t master_seed() const { return master_seed_; }

  Philox4x32 stream(std::uint64_t index) const { return Philox4x32(master_seed_, index); }

  /// Stream `index` inside a named domain; domains keep unrelated consumers apart.
  Philox4x32 stream(std::uint32_t domain, std::uint64_t index) const {
    return Philox4x32(master_seed_, (static_cast<std::uint64_t>(domain) << 40) ^ index);
  }

 private:
  std::uint64_t master_seed_;
};

}  // namespace bridgekit

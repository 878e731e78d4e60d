#pragma once

#include <array>
#include <cstdint>

namespace bigjump {

using Philox4x64Block = std::array<std::uint64_t, 4>;
using Philox4x64Key = std::array<std::uint64_t, 2>;

// Philox4x64 with 10 rounds (Salmon et al. counter-based generator).
Philox4x64Block philox4x64(Philox4x64Block ctr, Philox4x64Key key);

// Independent stream of 64-bit words keyed by (seed, stream_id).
// Block i of the stream is philox4x64({i, 0, 0, 0}, {seed, stream_id}).
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t stream_id() const { return key_[1]; }
  std::uint64_t words_drawn() const { return drawn_; }

 private:
  Philox4x64Key key_;
  std::uint64_t block_ = 0;
  Philox4x64Block buffer_{};
  int used_ = 4;
  std::uint64_t drawn_ = 0;
};

}  // namespace bigjump

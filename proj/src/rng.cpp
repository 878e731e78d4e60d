#include "bigjump/rng.hpp"

namespace bigjump {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline Philox4x64Block round(const Philox4x64Block& c, const Philox4x64Key& k) {
  std::uint64_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, c[0], hi0, lo0);
  mulhilo(kMul1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

Philox4x64Block philox4x64(Philox4x64Block ctr, Philox4x64Key key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    ctr = round(ctr, key);
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : key_{seed, stream_id} {}

std::uint64_t RngStream::next_u64() {
  if (used_ == 4) {
    buffer_ = philox4x64({block_, 0, 0, 0}, key_);
    ++block_;
    used_ = 0;
  }
  ++drawn_;
  return buffer_[used_++];
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace bigjump

#pragma once

#include <array>
#include <cstdint>

namespace perc {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
// the output is a pure function of (counter, key).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

inline PhiloxKey philox_key(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

std::uint64_t splitmix64(std::uint64_t x);

// Derive an independent 64-bit seed from a master seed and a tag sequence.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

// Small sequential stream on top of Philox, for the places where a plain
// stream of uniforms is enough (resampling, test fixtures).
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream);
  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  bool bernoulli(double p);

 private:
  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buf_{};
  int used_ = 4;
};

}  // namespace perc

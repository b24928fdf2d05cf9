#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace hawkeslab::rng {

using PhiloxKey = std::array<std::uint32_t, 2>;
using PhiloxBlock = std::array<std::uint32_t, 4>;

// Philox4x32 with 10 rounds (Salmon et al. counter-based generator).
PhiloxBlock philox4x32_10(PhiloxBlock counter, PhiloxKey key);

// Identifies one random stream: the master seed is the Philox key, and
// (stream, id) fill the upper 96 bits of the counter.  The low 32 bits count
// blocks within the stream, so distinct (master, stream, id) triples never
// share a counter value.
struct StreamSeed {
  std::uint64_t master = 0;
  std::uint32_t stream = 0;
  std::uint64_t id = 0;

  friend bool operator==(const StreamSeed&, const StreamSeed&) = default;
};

// Stream tags reserved for the simulators.
inline constexpr std::uint32_t kEventSourceStream = 0x80000000u;

// Per-path seed: id = path index, stream = caller-chosen stream index.
StreamSeed derive_seed(std::uint64_t master, std::uint64_t path, std::uint32_t stream);

// First 64 output bits of a stream; used to print seeds in manifests.
std::uint64_t fingerprint(const StreamSeed& seed);

// 64-bit mixing function (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// Identifier of the index-th offspring of a parent source.
std::uint64_t child_id(std::uint64_t parent, std::uint64_t index);

// Counter-based engine satisfying UniformRandomBitGenerator.
class Engine {
 public:
  using result_type = std::uint64_t;

  explicit Engine(const StreamSeed& seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on the open interval (0, 1).
  double uniform();
  // Unit-rate exponential.
  double exponential();

  std::uint32_t blocks_used() const { return block_; }

 private:
  void refill();

  PhiloxKey key_;
  std::uint32_t stream_;
  std::uint64_t id_;
  std::uint32_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

}  // namespace hawkeslab::rng

#include "hawkeslab/rng.hpp"

#include <cmath>

namespace hawkeslab::rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

PhiloxKey key_from(std::uint64_t master) {
  return {static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32)};
}

}  // namespace

PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

StreamSeed derive_seed(std::uint64_t master, std::uint64_t path, std::uint32_t stream) {
  return StreamSeed{master, stream, path};
}

std::uint64_t fingerprint(const StreamSeed& seed) {
  Engine e(seed);
  return e();
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t child_id(std::uint64_t parent, std::uint64_t index) {
  return mix64(parent ^ mix64(index ^ 0xA0761D6478BD642Full));
}

Engine::Engine(const StreamSeed& seed) : key_(key_from(seed.master)), stream_(seed.stream), id_(seed.id) {}

void Engine::refill() {
  const PhiloxBlock out = philox4x32_10(
      {block_, stream_, static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)}, key_);
  ++block_;
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  buffered_ = 2;
}

Engine::result_type Engine::operator()() {
  if (buffered_ == 0) refill();
  return buffer_[2 - buffered_--];
}

double Engine::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Engine::exponential() { return -std::log(uniform()); }

}  // namespace hawkeslab::rng

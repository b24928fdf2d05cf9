#include <doctest.h>

#include <set>

#include "hawkeslab/rng.hpp"

using namespace hawkeslab::rng;

TEST_CASE("philox4x32-10 known-answer vectors") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("seed derivation is injective on path and stream") {
  std::set<std::uint64_t> prints;
  for (std::uint64_t s : {0ULL, 1ULL, 42ULL, 0xffffffffffffffffULL}) {
    CHECK_FALSE(derive_seed(s, 0, 0) == derive_seed(s, 1, 0));
    CHECK_FALSE(derive_seed(s, 0, 0) == derive_seed(s, 0, 1));
    for (std::uint64_t p = 0; p < 100; ++p)
      for (std::uint32_t j = 0; j < 4; ++j) prints.insert(fingerprint(derive_seed(s, p, j)));
  }
  CHECK(prints.size() == 4 * 100 * 4);
}

TEST_CASE("same seed reproduces the same stream") {
  Engine a(derive_seed(7, 3, 1)), b(derive_seed(7, 3, 1)), c(derive_seed(7, 4, 1));
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a(), y = b(), z = c();
    CHECK(x == y);
    differs = differs || x != z;
  }
  CHECK(differs);
}

TEST_CASE("uniform draws lie in the open unit interval with the right mean") {
  Engine e(derive_seed(1, 0, 0));
  double sum = 0.0, esum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = e.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    esum += e.exponential();
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(esum / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("child ids differ from their parent and siblings") {
  std::set<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < 1000; ++i) ids.insert(child_id(12345, i));
  CHECK(ids.size() == 1000);
  CHECK(ids.count(12345) == 0);
}

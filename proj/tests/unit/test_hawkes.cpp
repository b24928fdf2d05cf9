#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hawkeslab/errors.hpp"
#include "hawkeslab/hawkes.hpp"
#include "hawkeslab/stats.hpp"

using namespace hawkeslab;
using marks::MarkDistribution;

namespace {

const marks::MarkPairConfig kExp{MarkDistribution::exponential(1.0), MarkDistribution::exponential(1.0)};

hawkes::HawkesParams plain(double a, double horizon, const marks::MarkPairConfig& m = kExp) {
  hawkes::HawkesParams p;
  p.base_intensity = 1.3;
  p.endogeneity = a;
  p.scale = 1.0;
  p.horizon = horizon;
  p.marks = m;
  return p;
}

// lambda_t from the definition, arrivals with s <= t < s + y.
double brute_intensity(const hawkes::EventLog& log, double t, bool left_limit = false) {
  double v = log.params.base_intensity;
  for (const auto& a : log.arrivals) {
    const bool started = left_limit ? a.time < t : a.time <= t;
    if (started && t < a.time + a.y) v += log.params.endogeneity * a.x;
  }
  return v;
}

}  // namespace

TEST_CASE("intensity is conserved at every breakpoint") {
  const auto log = hawkes::simulate(plain(0.7, 60.0), rng::derive_seed(3, 0, 1));
  REQUIRE(log.arrivals.size() > 50);
  const auto& bp = log.breakpoints;
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    const double mid = 0.5 * (bp[k].time + bp[k + 1].time);
    CHECK(bp[k].intensity == doctest::Approx(brute_intensity(log, mid)).epsilon(1e-10));
    CHECK(log.intensity_at(mid) == doctest::Approx(brute_intensity(log, mid)).epsilon(1e-10));
  }
  for (const auto& a : log.arrivals)
    CHECK(a.intensity_before == doctest::Approx(brute_intensity(log, a.time, true)).epsilon(1e-10));
  double integral = 0.0;
  for (std::size_t k = 0; k < bp.size(); ++k) {
    const double end = k + 1 < bp.size() ? bp[k + 1].time : log.horizon();
    integral += (end - bp[k].time) * brute_intensity(log, 0.5 * (bp[k].time + end));
  }
  CHECK(log.integrated_intensity(log.horizon()) == doctest::Approx(integral).epsilon(1e-10));
}

TEST_CASE("same seed gives the same path") {
  const auto p = plain(0.8, 40.0);
  const auto a = hawkes::simulate(p, rng::derive_seed(5, 2, 1));
  const auto b = hawkes::simulate(p, rng::derive_seed(5, 2, 1));
  REQUIRE(a.arrivals.size() == b.arrivals.size());
  for (std::size_t i = 0; i < a.arrivals.size(); ++i) {
    CHECK(a.arrivals[i].time == b.arrivals[i].time);
    CHECK(a.arrivals[i].x == b.arrivals[i].x);
  }
  const auto c = hawkes::simulate(p, rng::derive_seed(5, 3, 1));
  CHECK((c.arrivals.size() != a.arrivals.size() || c.arrivals.front().time != a.arrivals.front().time));
}

TEST_CASE("raising the endogeneity with a fixed seed only adds arrivals") {
  for (std::uint64_t path = 0; path < 5; ++path) {
    const auto seed = rng::derive_seed(17, path, 1);
    const auto low = hawkes::simulate(plain(0.5, 30.0), seed);
    const auto high = hawkes::simulate(plain(0.8, 30.0), seed);
    std::vector<double> lt, ht;
    for (const auto& a : low.arrivals) lt.push_back(a.time);
    for (const auto& a : high.arrivals) ht.push_back(a.time);
    CHECK(std::includes(ht.begin(), ht.end(), lt.begin(), lt.end()));
    CHECK(ht.size() >= lt.size());
  }
}

TEST_CASE("zero marks reduce to a Poisson process") {
  for (const auto& m : {marks::MarkPairConfig{MarkDistribution::deterministic(0.0), MarkDistribution::exponential(1.0)},
                        marks::MarkPairConfig{MarkDistribution::exponential(1.0), MarkDistribution::deterministic(0.0)}}) {
    const auto p = plain(0.9, 20.0, m);
    stats::RunningMoments count;
    for (std::uint64_t i = 0; i < 2000; ++i) {
      const auto log = hawkes::simulate(p, rng::derive_seed(23, i, 1));
      count.add(static_cast<double>(log.arrivals.size()));
      if (i == 0)
        for (const auto& b : log.breakpoints) CHECK(b.intensity == doctest::Approx(1.3));
    }
    const double mean = 1.3 * 20.0;
    CHECK(std::abs(count.mean() - mean) < 4.0 * std::sqrt(mean / 2000.0));
    CHECK(count.variance() == doctest::Approx(mean).epsilon(0.1));
  }
}

TEST_CASE("event budget is enforced with the partial log attached") {
  auto p = plain(0.9, 1000.0);
  p.event_budget = 25;
  try {
    hawkes::simulate(p, rng::derive_seed(1, 0, 1));
    FAIL("expected a budget error");
  } catch (const hawkes::BudgetExceeded& e) {
    CHECK(e.partial().arrivals.size() <= 25);
    CHECK_FALSE(e.partial().arrivals.empty());
  }
}

TEST_CASE("parameter validation") {
  auto p = plain(0.9, 10.0);
  p.marks.x = MarkDistribution::exponential(0.5);
  CHECK_THROWS_AS(p.validate(), InstabilityError);
  p = plain(0.9, 10.0);
  p.base_intensity = -1.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  const auto near = hawkes::HawkesParams::near_critical(1.0, 100.0, 1.0, 1.0, kExp);
  CHECK(near.endogeneity == doctest::Approx(0.99));
  CHECK(near.original_horizon() == doctest::Approx(100.0));
}

TEST_CASE("rescaled functionals start at their initial values") {
  const double t = 50.0;
  const auto p = hawkes::HawkesParams::near_critical(1.0, t, 1.0, 1.0, kExp);
  const auto log = hawkes::simulate(p, rng::derive_seed(2, 0, 1));
  const auto grid = hawkes::TimeGrid::covering(0.01, 1.0);
  const auto lam = hawkes::rescaled_intensity(log, t, grid);
  CHECK(lam.values.front() == doctest::Approx(1.0 / t));
  CHECK(lam.values.back() == doctest::Approx(log.intensity_at(t) / t));
  const auto z = hawkes::fluctuation(log, t, grid);
  CHECK(z.values.front() == doctest::Approx(0.0));
  const double n = hawkes::offspring_count(log, t);
  CHECK(z.values.back() == doctest::Approx((n - log.integrated_intensity(t)) / t));
}

TEST_CASE("offspring count sums the x marks") {
  const auto log = hawkes::simulate(plain(0.6, 30.0), rng::derive_seed(8, 0, 1));
  double sum = 0.0;
  for (const auto& a : log.arrivals)
    if (a.time <= 15.0) sum += a.x;
  CHECK(hawkes::offspring_count(log, 15.0) == doctest::Approx(sum));
}

TEST_CASE("driver quadratic variation is the exact jump-square sum") {
  const double t = 40.0;
  const auto p = hawkes::HawkesParams::near_critical(1.0, t, 1.0, 1.0, kExp);
  const auto log = hawkes::simulate(p, rng::derive_seed(4, 0, 1));
  const auto grid = hawkes::TimeGrid::covering(0.05, 1.0);
  const auto d = hawkes::driver_paths(log, t, grid);
  double qw = 0.0, qb = 0.0, cov = 0.0;
  for (const auto& a : log.arrivals) {
    qw += a.x * a.x * a.y * a.y / a.intensity_before;
    qb += a.x * a.x / a.intensity_before;
    cov += a.x * a.x * a.y / a.intensity_before;
  }
  CHECK(d.qv_w.back() == doctest::Approx(qw / t));
  CHECK(d.qv_b.back() == doctest::Approx(qb / t));
  CHECK(d.covariation.back() == doctest::Approx(cov / t));
  CHECK(d.w.front() == doctest::Approx(0.0));
  const auto split = hawkes::driver_split(log, t, 1.0, 1.5);
  CHECK(split.small + split.large == doctest::Approx(d.qv_w.back()));
  CHECK(split.small > 0.0);
}

TEST_CASE("truncated remainder matches a quadrature of its definition") {
  const double t = 20.0;
  const auto p = hawkes::HawkesParams::near_critical(1.0, t, 1.0, 1.0, kExp);
  const auto log = hawkes::simulate(p, rng::derive_seed(6, 0, 1));
  const auto grid = hawkes::TimeGrid::covering(0.5, 1.0);
  const auto r = hawkes::truncated_remainder(log, t, grid);
  const double end = t;
  const int n = 400000;
  const double h = end / n;
  double integral = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = (i + 0.5) * h;
    integral += log.intensity_at(u) * std::exp(-(end - u)) * h;
  }
  const double expected = log.intensity_at(end) / t - 1.0 / t - p.endogeneity / t * integral;
  CHECK(r.values.back() == doctest::Approx(expected).epsilon(1e-4));
}

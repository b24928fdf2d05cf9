#include <doctest.h>

#include <cmath>

#include "hawkeslab/errors.hpp"
#include "hawkeslab/sde.hpp"
#include "hawkeslab/stats.hpp"

using namespace hawkeslab;

namespace {

sde::CirParams cir() {
  sde::CirParams p;
  p.reversion = 1.2;
  p.kernel_scale = 0.9;
  p.base = 0.8;
  p.sigma_x = 1.0;
  p.sigma_y = 1.1;
  p.step = 1e-2;
  p.horizon = 1.0;
  return p;
}

double pos(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

TEST_CASE("Volterra recursion equals the direct convolution sum") {
  const auto p = cir();
  const auto path = sde::simulate_cir_volterra(p, rng::derive_seed(1, 0, 2), true);
  const auto& l = path.components[0];
  const auto& dw = path.increments[0];
  const double kappa = p.reversion / p.kernel_scale;
  for (std::size_t n = 1; n < l.size(); ++n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += std::exp(-kappa * (n - k) * p.step) * std::sqrt(pos(l[k])) * dw[k];
    const double expected =
        pos(sde::forced_mean(p.base, p.reversion, p.kernel_scale, path.times[n]) + p.noise() / p.kernel_scale * s);
    CHECK(l[n] == doctest::Approx(expected).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("noiseless limits follow the forced mean") {
  auto p = cir();
  p.sigma_x = 0.0;
  const auto seed = rng::derive_seed(2, 0, 2);
  for (const auto& path : {sde::simulate_cir_volterra(p, seed), sde::simulate_cir_markov(p, seed)}) {
    for (std::size_t n = 0; n < path.times.size(); ++n)
      CHECK(path.components[0][n] ==
            doctest::Approx(sde::forced_mean(p.base, p.reversion, p.kernel_scale, path.times[n])).epsilon(1e-2));
  }
}

TEST_CASE("Markov coefficients") {
  const auto c = sde::markov_coefficients(cir());
  CHECK(c.a == doctest::Approx(1.2 / 0.9));
  CHECK(c.b == doctest::Approx(std::sqrt(1.2) / 0.9));
  CHECK(c.level == doctest::Approx(0.8));
}

TEST_CASE("closed-form moments of the scalar limit") {
  auto p = cir();
  p.step = 2e-3;
  stats::RunningMoments v, m;
  for (std::uint64_t i = 0; i < 3000; ++i) {
    const auto path = sde::simulate_cir_markov(p, rng::derive_seed(3, i, 2));
    v.add(path.components[0].back());
  }
  const double mean = sde::forced_mean(p.base, p.reversion, p.kernel_scale, 1.0);
  CHECK(std::abs(v.mean() - mean) < 4.0 * v.std_error());
  CHECK(v.variance() == doctest::Approx(sde::cir_variance(p.base, p.reversion, p.kernel_scale, p.noise(), 1.0))
                            .epsilon(0.08));
  CHECK(sde::forced_mean_integral(1.0, 1.0, 1.0, 1.0) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("fluctuation limit driver correlation") {
  CHECK(sde::fluctuation_correlation(marks::MarkDistribution::deterministic(1.0)) == doctest::Approx(1.0));
  CHECK(sde::fluctuation_correlation(marks::MarkDistribution::exponential(1.0)) == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(sde::simulate_fluctuation_limit(cir(), 1.5, rng::derive_seed(1, 0, 2)), ParameterError);
  const auto path = sde::simulate_fluctuation_limit(cir(), 1.0, rng::derive_seed(1, 0, 2));
  for (std::size_t k = 0; k < path.increments[0].size(); ++k)
    CHECK(path.increments[1][k] == doctest::Approx(path.increments[0][k]));
  std::vector<double> a, b;
  for (std::uint64_t i = 0; i < 400; ++i) {
    const auto f = sde::simulate_fluctuation_limit(cir(), 0.6, rng::derive_seed(4, i, 2));
    for (std::size_t k = 0; k < f.increments[0].size(); k += 10) {
      a.push_back(f.increments[0][k]);
      b.push_back(f.increments[1][k]);
    }
  }
  CHECK(stats::corr_estimate(a, b).r == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("decoupled system components match the scalar variance") {
  sde::SystemParams s;
  s.driver_variances = {1.0, 0.0, 0.0, 1.0};
  s.step = 2e-3;
  s.scheme = sde::Scheme::MarkovFullTruncation;
  stats::RunningMoments bid;
  for (std::uint64_t i = 0; i < 3000; ++i) bid.add(sde::simulate_system(s, rng::derive_seed(5, i, 2)).components[0].back());
  CHECK(std::abs(bid.mean() - sde::forced_mean(0.5, 1.0, 1.0, 1.0)) < 4.0 * bid.std_error());
  CHECK(bid.variance() == doctest::Approx(sde::cir_variance(0.5, 1.0, 1.0, 1.0, 1.0)).epsilon(0.08));
}

TEST_CASE("total intensity of the system reduces to a scalar equation") {
  sde::SystemParams s;
  s.base_bid = 0.3;
  s.base_ask = 0.6;
  const auto c = sde::total_intensity_params(s);
  CHECK(c.base == doctest::Approx(0.9));
  s.driver_variances = {1.0, 2.0, 1.0, 1.0};
  CHECK_THROWS_AS(sde::total_intensity_params(s), ParameterError);
}

TEST_CASE("Heston price is centred and V has unit quadratic variation slope") {
  sde::SystemParams s;
  s.step = 1e-3;
  stats::RunningMoments price, qv;
  for (std::uint64_t i = 0; i < 500; ++i) {
    const auto h = sde::simulate_heston_price(s, rng::derive_seed(6, i, 2));
    price.add(h.component("price").back());
    std::vector<std::size_t> last{h.times.size() - 1};
    qv.add(stats::qv_estimate(h.component("V"), last).front());
  }
  CHECK(std::abs(price.mean()) < 4.0 * price.std_error());
  CHECK(qv.mean() == doctest::Approx(2.0).epsilon(0.02));
  CHECK_THROWS(sde::simulate_heston_price(s, rng::derive_seed(6, 0, 2)).component("missing"));
}

TEST_CASE("positivity diagnostic counts truncated steps") {
  auto p = cir();
  p.base = 0.05;
  p.sigma_x = 3.0;
  p.scheme = sde::Scheme::MarkovFullTruncation;
  const auto path = sde::simulate_cir(p, rng::derive_seed(7, 0, 2));
  CHECK(path.checked_steps == p.steps());
  CHECK(path.negative_fraction() > 0.0);
  for (double v : path.components[0]) CHECK(v >= 0.0);
}

#include <doctest.h>

#include <cmath>

#include "hawkeslab/errors.hpp"
#include "hawkeslab/renewal.hpp"

using namespace hawkeslab;
using marks::MarkDistribution;

TEST_CASE("geometric-series identities for an exponential kernel") {
  const auto grid = renewal::UniformGrid::covering(1e-2, 60.0);
  const auto phi = renewal::build_phi(0.9, MarkDistribution::exponential(1.0), grid);
  const auto psi = renewal::solve_psi(phi);
  const auto rho = renewal::build_rho(psi, 1.0, 0.9);
  CHECK(phi.total_mass == doctest::Approx(0.9));
  CHECK(std::abs(psi.integral / 9.0 - 1.0) < 5e-3);
  CHECK(std::abs(rho.integral - 1.0) < 1e-3);
  CHECK(rho.non_increasing);
  CHECK(psi.residual < 1e-10);
  // Psi(z) = a exp(-(1 - a) z)
  double err = 0.0;
  for (std::size_t i = 0; i < grid.size; ++i)
    err = std::max(err, std::abs(psi.values[i] - 0.9 * std::exp(-0.1 * grid.at(i))));
  CHECK(err < 1e-5);
}

TEST_CASE("resolvent of a deterministic duration") {
  // Phi = a 1{z < 1}: on [0, 1) Psi solves Psi = a + a int_0^z Psi, so Psi = a e^{a z}.
  const auto grid = renewal::UniformGrid::covering(1e-3, 40.0);
  const auto phi = renewal::build_phi(0.5, MarkDistribution::deterministic(1.0), grid);
  const auto psi = renewal::solve_psi(phi);
  CHECK(psi.values[500] == doctest::Approx(0.5 * std::exp(0.25)).epsilon(1e-4));
  CHECK(psi.integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("short grids and supercritical kernels are rejected") {
  CHECK_THROWS_AS(renewal::build_phi(0.9, MarkDistribution::exponential(1.0), renewal::UniformGrid::covering(1e-2, 3.0)),
                  ResolutionError);
  const auto grid = renewal::UniformGrid::covering(1e-2, 80.0);
  const auto phi = renewal::build_phi(0.6, MarkDistribution::exponential(0.5), grid);
  CHECK_THROWS_AS(renewal::solve_psi(phi), InstabilityError);
  CHECK_THROWS_AS(renewal::build_phi(-0.1, MarkDistribution::exponential(1.0), grid), ParameterError);
}

TEST_CASE("rescaled resolvent is exact for exponential durations") {
  for (double t : {10.0, 100.0}) {
    const double a = 1.0 - 1.0 / t;
    const renewal::UniformGrid grid{2e-4 * t, 40001};
    const auto rho = renewal::build_rho(renewal::solve_psi(renewal::build_phi(a, MarkDistribution::exponential(1.0), grid)), t, a);
    CHECK(rho.sup_distance < 1e-5);
    CHECK(rho.values.front() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("rescaled resolvent converges weakly for uniform durations") {
  // m = E(Y^2)/2 = 2/3: rho^T(0) stays at lambda while the limit starts at lambda/m,
  // so the distance is measured on distribution functions.
  std::vector<double> d;
  for (double t : {10.0, 30.0, 100.0}) {
    const double a = 1.0 - 1.0 / t;
    const double dz = std::min(0.02, 8.0 * t / 40000.0);
    const auto grid = renewal::UniformGrid::covering(dz, 8.0 * t);
    const auto phi = renewal::build_phi(a, MarkDistribution::uniform(0.0, 2.0), grid);
    const auto rho = renewal::build_rho(renewal::solve_psi(phi), t, a);
    CHECK(rho.values.front() == doctest::Approx(1.0).epsilon(1e-3));
    d.push_back(rho.cdf_distance);
  }
  CHECK(d[1] < d[0]);
  CHECK(d[2] < d[1]);
  CHECK(d[2] < 0.01);
}

TEST_CASE("limit kernel") {
  CHECK(renewal::theta(0.0, 1.0, 2.0) == doctest::Approx(0.5));
  CHECK(renewal::theta(2.0, 1.0, 2.0) == doctest::Approx(0.5 * std::exp(-1.0)));
  CHECK_THROWS_AS(renewal::theta(1.0, 0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(renewal::theta(-1.0, 1.0, 1.0), ParameterError);
}

TEST_CASE("renewal table evaluates rho and the limit on rescaled time") {
  const double t = 20.0, a = 1.0 - 1.0 / t;
  const auto grid = renewal::UniformGrid::covering(0.01, 200.0);
  const auto phi = renewal::build_phi(a, MarkDistribution::exponential(1.0), grid);
  const auto psi = renewal::solve_psi(phi);
  const auto rho = renewal::build_rho(psi, t, a);
  const auto table = renewal::make_table(phi, psi, rho);
  REQUIRE(table.theta.size() == grid.size);
  const std::size_t i = 4000;  // z = 40, z / T = 2
  CHECK(table.theta[i] == doctest::Approx(renewal::theta(2.0, 1.0, 1.0)));
  CHECK(table.rho[i] == doctest::Approx(rho.values[i]));
  CHECK(table.phi[i] == doctest::Approx(a * std::exp(-40.0)));
}

TEST_CASE("mean intensity for an exponential kernel") {
  // E lambda_t = base (1 + a/(1-a) (1 - e^{-(1-a) t})) with mass a = a_T E(X)
  const auto grid = renewal::UniformGrid::covering(1e-3, 60.0);
  const auto phi = renewal::build_phi(0.45, MarkDistribution::exponential(1.0), grid);
  const auto curve = renewal::solve_mean_intensity(1.5, phi, 5.0, 2.0);
  const double a = 0.9;
  for (double t : {0.0, 1.0, 2.5, 5.0})
    CHECK(curve.at(t) == doctest::Approx(1.5 * (1.0 + a / (1.0 - a) * (1.0 - std::exp(-(1.0 - a) * t)))).epsilon(1e-6));
  const double integral = 1.5 * (5.0 + a / (1.0 - a) * (5.0 - (1.0 - std::exp(-0.5)) / 0.1));
  CHECK(curve.integral(5.0) == doctest::Approx(integral).epsilon(1e-5));
}

TEST_CASE("two-sided mean system reduces to the scalar one for symmetric kernels") {
  const auto grid = renewal::UniformGrid::covering(1e-2, 60.0);
  const auto half = renewal::build_phi(0.45, MarkDistribution::exponential(1.0), grid);
  const auto pair = renewal::solve_mean_intensity_pair(0.5, 0.5, {half, half, half, half}, 3.0);
  const auto full = renewal::build_phi(0.9, MarkDistribution::exponential(1.0), grid);
  const auto scalar = renewal::solve_mean_intensity(1.0, full, 3.0);
  for (double t : {0.5, 1.0, 3.0}) CHECK(pair.total_at(t) == doctest::Approx(scalar.at(t)).epsilon(1e-9));
}

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "hawkeslab/marks.hpp"
#include "hawkeslab/rng.hpp"

namespace hawkeslab::sde {

enum class Scheme { VolterraEuler, MarkovFullTruncation };

// Scalar limit
//   l_t = base int_0^t theta + (sigma_x sigma_y) int_0^t theta(t-r) sqrt(l_r) dW_r,
//   theta(z) = exp(-lambda z / m) / m,
// equivalently dl = (base - lambda l)/m dt + (sigma_x sigma_y / m) sqrt(l) dW.
struct CirParams {
  double reversion = 1.0;     // lambda
  double kernel_scale = 1.0;  // m
  double base = 1.0;          // lambda_0
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double step = 1e-3;
  double horizon = 1.0;
  Scheme scheme = Scheme::VolterraEuler;

  double noise() const { return sigma_x * sigma_y; }
  std::size_t steps() const;
  void validate() const;
};

// Coefficients of the Markov form in X = lambda * l:
//   dX = a (level - X) dt + b noise sqrt(X) dW.
struct MarkovCoefficients {
  double a = 0.0;      // lambda / m
  double b = 0.0;      // sqrt(lambda) / m
  double level = 0.0;  // lambda_0
};
MarkovCoefficients markov_coefficients(const CirParams& params);

// Two-sided limit: the bid intensity is driven by W1 (through the bid level)
// and W2 (through the ask level), the ask intensity by W3 and W4; W_i has
// variance driver_variances[i] per unit time.
struct SystemParams {
  double reversion = 1.0;
  double kernel_scale = 1.0;
  double base_bid = 0.5;
  double base_ask = 0.5;
  std::array<double, 4> driver_variances{1.0, 1.0, 1.0, 1.0};
  double step = 1e-3;
  double horizon = 1.0;
  Scheme scheme = Scheme::VolterraEuler;

  std::size_t steps() const;
  void validate() const;
};

// Scalar equation for the total intensity when all driver variances agree.
CirParams total_intensity_params(const SystemParams& params);

struct SdePath {
  rng::StreamSeed seed;
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> components;
  // Per-step Brownian increments, one row per driver, when requested.
  std::vector<std::vector<double>> increments;
  std::size_t negative_steps = 0;  // steps whose update went below zero before truncation
  std::size_t checked_steps = 0;

  const std::vector<double>& component(std::string_view name) const;
  double negative_fraction() const;
};

SdePath simulate_cir_volterra(const CirParams& params, const rng::StreamSeed& seed, bool keep_increments = false);
SdePath simulate_cir_markov(const CirParams& params, const rng::StreamSeed& seed, bool keep_increments = false);
SdePath simulate_cir(const CirParams& params, const rng::StreamSeed& seed, bool keep_increments = false);

// (lambda, Z) with dZ = sigma_x sqrt(lambda) dB and corr(dW, dB) = rho.
SdePath simulate_fluctuation_limit(const CirParams& params, double rho, const rng::StreamSeed& seed);

// (bid, ask) intensities.
SdePath simulate_system(const SystemParams& params, const rng::StreamSeed& seed, bool keep_increments = false);

// (bid, ask, total, price, V, Z) with
//   dP = sqrt(bid) d(W1 - W3) + sqrt(ask) d(W2 - W4),
//   dV = sqrt(bid/total) d(W1 - W3) + sqrt(ask/total) d(W2 - W4),
//   dZ = sqrt(bid/total) d(W1 + W3) + sqrt(ask/total) d(W2 + W4).
// Both weights are sqrt(1/2) when the total intensity is zero.
SdePath simulate_heston_price(const SystemParams& params, const rng::StreamSeed& seed, bool keep_increments = false);

// E(Y)/sqrt(E(Y^2)).
double fluctuation_correlation(const marks::MarkDistribution& y);

// Closed forms for the scalar limit started at 0.
double forced_mean(double base, double lambda, double m, double t);
double cir_variance(double base, double lambda, double m, double noise, double t);
// int_0^t forced_mean.
double forced_mean_integral(double base, double lambda, double m, double t);

}  // namespace hawkeslab::sde

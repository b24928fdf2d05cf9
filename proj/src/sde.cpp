#include "hawkeslab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hawkeslab/errors.hpp"

namespace hawkeslab::sde {

namespace {

std::size_t step_count(double step, double horizon) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ParameterError("step must be > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon must be > 0");
  const double n = std::round(horizon / step);
  if (n < 1.0 || std::abs(n * step - horizon) > 1e-9 * std::max(1.0, horizon))
    throw ParameterError("horizon must be an integer multiple of the step");
  return static_cast<std::size_t>(n);
}

SdePath make_path(const rng::StreamSeed& seed, std::size_t steps, double step, std::vector<std::string> names,
                  std::size_t drivers, bool keep) {
  SdePath p;
  p.seed = seed;
  p.times.resize(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) p.times[n] = static_cast<double>(n) * step;
  p.names = std::move(names);
  p.components.assign(p.names.size(), std::vector<double>(steps + 1, 0.0));
  if (keep) p.increments.assign(drivers, std::vector<double>(steps, 0.0));
  p.checked_steps = steps;
  return p;
}

// Standard normal draws from the path stream.
class Gaussian {
 public:
  explicit Gaussian(const rng::StreamSeed& seed) : engine_(seed) {}
  double operator()() { return normal_(engine_); }

 private:
  rng::Engine engine_;
  std::normal_distribution<double> normal_;
};

inline double pos(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

std::size_t CirParams::steps() const { return step_count(step, horizon); }

void CirParams::validate() const {
  if (!(reversion > 0.0)) throw ParameterError("lambda must be > 0");
  if (!(kernel_scale > 0.0)) throw ParameterError("m must be > 0");
  if (!(base >= 0.0)) throw ParameterError("lambda_0 must be >= 0");
  if (!(sigma_x >= 0.0) || !(sigma_y >= 0.0)) throw ParameterError("noise scales must be >= 0");
  steps();
}

std::size_t SystemParams::steps() const { return step_count(step, horizon); }

void SystemParams::validate() const {
  if (!(reversion > 0.0)) throw ParameterError("lambda must be > 0");
  if (!(kernel_scale > 0.0)) throw ParameterError("m must be > 0");
  if (!(base_bid >= 0.0) || !(base_ask >= 0.0)) throw ParameterError("base intensities must be >= 0");
  for (double v : driver_variances)
    if (!(v >= 0.0)) throw ParameterError("driver variances must be >= 0");
  steps();
}

MarkovCoefficients markov_coefficients(const CirParams& p) {
  return {p.reversion / p.kernel_scale, std::sqrt(p.reversion) / p.kernel_scale, p.base};
}

CirParams total_intensity_params(const SystemParams& p) {
  const double v = p.driver_variances[0];
  for (double w : p.driver_variances)
    if (std::abs(w - v) > 1e-12 * std::max(1.0, v))
      throw ParameterError("total intensity is a scalar equation only for equal driver variances");
  CirParams c;
  c.reversion = p.reversion;
  c.kernel_scale = p.kernel_scale;
  c.base = p.base_bid + p.base_ask;
  c.sigma_x = std::sqrt(2.0 * v);
  c.sigma_y = 1.0;
  c.step = p.step;
  c.horizon = p.horizon;
  c.scheme = p.scheme;
  return c;
}

const std::vector<double>& SdePath::component(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return components[i];
  throw ParameterError("no component named " + std::string(name));
}

double SdePath::negative_fraction() const {
  return checked_steps == 0 ? 0.0 : static_cast<double>(negative_steps) / static_cast<double>(checked_steps);
}

SdePath simulate_cir_volterra(const CirParams& prm, const rng::StreamSeed& seed, bool keep) {
  prm.validate();
  const std::size_t steps = prm.steps();
  const double dt = prm.step;
  const double kappa = prm.reversion / prm.kernel_scale;
  const double decay = std::exp(-kappa * dt);
  const double scale = prm.noise() / prm.kernel_scale;
  const double sq = std::sqrt(dt);
  SdePath path = make_path(seed, steps, dt, {"intensity"}, 1, keep);
  auto& l = path.components[0];
  Gaussian gauss(seed);
  double s = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    const double dw = sq * gauss();
    if (keep) path.increments[0][n - 1] = dw;
    s = decay * (s + std::sqrt(pos(l[n - 1])) * dw);
    const double raw = forced_mean(prm.base, prm.reversion, prm.kernel_scale, path.times[n]) + scale * s;
    if (raw < 0.0) ++path.negative_steps;
    l[n] = pos(raw);
  }
  return path;
}

SdePath simulate_cir_markov(const CirParams& prm, const rng::StreamSeed& seed, bool keep) {
  prm.validate();
  const std::size_t steps = prm.steps();
  const double dt = prm.step;
  const auto c = markov_coefficients(prm);
  const double diffusion = c.b * prm.noise();
  const double sq = std::sqrt(dt);
  SdePath path = make_path(seed, steps, dt, {"intensity"}, 1, keep);
  auto& l = path.components[0];
  Gaussian gauss(seed);
  double x = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    const double dw = sq * gauss();
    if (keep) path.increments[0][n - 1] = dw;
    const double xp = pos(x);
    x = x + c.a * (c.level - xp) * dt + diffusion * std::sqrt(xp) * dw;
    if (x < 0.0) ++path.negative_steps;
    l[n] = pos(x) / prm.reversion;
  }
  return path;
}

SdePath simulate_cir(const CirParams& prm, const rng::StreamSeed& seed, bool keep) {
  return prm.scheme == Scheme::VolterraEuler ? simulate_cir_volterra(prm, seed, keep)
                                             : simulate_cir_markov(prm, seed, keep);
}

SdePath simulate_fluctuation_limit(const CirParams& prm, double rho, const rng::StreamSeed& seed) {
  if (!(std::abs(rho) <= 1.0)) throw ParameterError("driver correlation must lie in [-1, 1]");
  prm.validate();
  const std::size_t steps = prm.steps();
  const double dt = prm.step;
  const double sq = std::sqrt(dt);
  const double kappa = prm.reversion / prm.kernel_scale;
  const double decay = std::exp(-kappa * dt);
  const double scale = prm.noise() / prm.kernel_scale;
  const auto c = markov_coefficients(prm);
  const double diffusion = c.b * prm.noise();
  const double orth = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  SdePath path = make_path(seed, steps, dt, {"intensity", "fluctuation"}, 2, true);
  auto& l = path.components[0];
  auto& z = path.components[1];
  Gaussian gauss(seed);
  double s = 0.0, x = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    const double dw = sq * gauss();
    const double db = rho * dw + orth * sq * gauss();
    path.increments[0][n - 1] = dw;
    path.increments[1][n - 1] = db;
    const double root = std::sqrt(pos(l[n - 1]));
    z[n] = z[n - 1] + prm.sigma_x * root * db;
    double raw;
    if (prm.scheme == Scheme::VolterraEuler) {
      s = decay * (s + root * dw);
      raw = forced_mean(prm.base, prm.reversion, prm.kernel_scale, path.times[n]) + scale * s;
      l[n] = pos(raw);
    } else {
      const double xp = pos(x);
      x = x + c.a * (c.level - xp) * dt + diffusion * std::sqrt(xp) * dw;
      raw = x;
      l[n] = pos(x) / prm.reversion;
    }
    if (raw < 0.0) ++path.negative_steps;
  }
  return path;
}

namespace {

// Shared stepping for the two-sided system; `extra` receives the left-point
// state and the four increments after each step.
template <class Extra>
void step_system(const SystemParams& prm, const rng::StreamSeed& seed, SdePath& path, Extra&& extra) {
  const std::size_t steps = prm.steps();
  const double dt = prm.step;
  const double sq = std::sqrt(dt);
  const double m = prm.kernel_scale;
  const double lam = prm.reversion;
  const double decay = std::exp(-lam / m * dt);
  std::array<double, 4> sd{};
  for (int i = 0; i < 4; ++i) sd[i] = std::sqrt(prm.driver_variances[i]) * sq;
  auto& bid = path.components[0];
  auto& ask = path.components[1];
  Gaussian gauss(seed);
  double sb = 0.0, sa = 0.0;  // Volterra memory
  double xb = 0.0, xa = 0.0;  // Markov state lambda * l
  path.checked_steps = 2 * steps;
  for (std::size_t n = 1; n <= steps; ++n) {
    std::array<double, 4> dw{};
    for (int i = 0; i < 4; ++i) dw[i] = sd[i] * gauss();
    if (!path.increments.empty())
      for (int i = 0; i < 4; ++i) path.increments[i][n - 1] = dw[i];
    const double rb = std::sqrt(pos(bid[n - 1]));
    const double ra = std::sqrt(pos(ask[n - 1]));
    double raw_b, raw_a;
    if (prm.scheme == Scheme::VolterraEuler) {
      sb = decay * (sb + rb * dw[0] + ra * dw[1]);
      sa = decay * (sa + rb * dw[2] + ra * dw[3]);
      raw_b = forced_mean(prm.base_bid, lam, m, path.times[n]) + sb / m;
      raw_a = forced_mean(prm.base_ask, lam, m, path.times[n]) + sa / m;
      bid[n] = pos(raw_b);
      ask[n] = pos(raw_a);
    } else {
      const double pb = pos(xb), pa = pos(xa);
      const double b = std::sqrt(lam) / m;
      xb = xb + lam / m * (prm.base_bid - pb) * dt + b * (std::sqrt(pb) * dw[0] + std::sqrt(pa) * dw[1]);
      xa = xa + lam / m * (prm.base_ask - pa) * dt + b * (std::sqrt(pb) * dw[2] + std::sqrt(pa) * dw[3]);
      raw_b = xb;
      raw_a = xa;
      bid[n] = pos(xb) / lam;
      ask[n] = pos(xa) / lam;
    }
    if (raw_b < 0.0) ++path.negative_steps;
    if (raw_a < 0.0) ++path.negative_steps;
    extra(n, rb, ra, dw);
  }
}

}  // namespace

SdePath simulate_system(const SystemParams& prm, const rng::StreamSeed& seed, bool keep) {
  prm.validate();
  SdePath path = make_path(seed, prm.steps(), prm.step, {"bid", "ask"}, 4, keep);
  step_system(prm, seed, path, [](std::size_t, double, double, const std::array<double, 4>&) {});
  return path;
}

SdePath simulate_heston_price(const SystemParams& prm, const rng::StreamSeed& seed, bool keep) {
  prm.validate();
  SdePath path = make_path(seed, prm.steps(), prm.step, {"bid", "ask", "total", "price", "V", "Z"}, 4, keep);
  auto& total = path.components[2];
  auto& price = path.components[3];
  auto& v = path.components[4];
  auto& z = path.components[5];
  const double half = std::sqrt(0.5);
  step_system(prm, seed, path, [&](std::size_t n, double rb, double ra, const std::array<double, 4>& dw) {
    const double sum = rb * rb + ra * ra;
    const double wb = sum > 0.0 ? rb / std::sqrt(sum) : half;
    const double wa = sum > 0.0 ? ra / std::sqrt(sum) : half;
    const double sell = dw[0] - dw[2];
    const double buy = dw[1] - dw[3];
    price[n] = price[n - 1] + rb * sell + ra * buy;
    v[n] = v[n - 1] + wb * sell + wa * buy;
    z[n] = z[n - 1] + wb * (dw[0] + dw[2]) + wa * (dw[1] + dw[3]);
    total[n] = path.components[0][n] + path.components[1][n];
  });
  return path;
}

double fluctuation_correlation(const marks::MarkDistribution& y) {
  const double m2 = y.second_moment();
  if (!(m2 > 0.0) || !std::isfinite(m2)) throw ParameterError("E(Y^2) must be finite and positive");
  return y.mean() / std::sqrt(m2);
}

double forced_mean(double base, double lambda, double m, double t) {
  return base / lambda * -std::expm1(-lambda * t / m);
}

double forced_mean_integral(double base, double lambda, double m, double t) {
  const double k = lambda / m;
  return base / lambda * (t + std::expm1(-k * t) / k);
}

double cir_variance(double base, double lambda, double m, double noise, double t) {
  // dl = k (th - l) dt + s sqrt(l) dW, l_0 = 0.
  const double k = lambda / m;
  const double th = base / lambda;
  const double s2 = noise * noise / (m * m);
  const double e = std::exp(-k * t);
  return th * s2 / (2.0 * k) * (1.0 - e) * (1.0 - e);
}

}  // namespace hawkeslab::sde

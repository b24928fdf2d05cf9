#include "hawkeslab/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hawkeslab/errors.hpp"

namespace hawkeslab::renewal {

namespace {

double kernel_at(const std::vector<double>& kernel, std::size_t i) { return i < kernel.size() ? kernel[i] : 0.0; }

// sum_{k=1}^{n-1} hat[k] * f[n-k] with four independent accumulators.
double lagged_sum(const std::vector<double>& hat, const std::vector<double>& f, std::size_t n) {
  const std::size_t top = std::min(n, hat.size());
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const double* hp = hat.data();
  const double* fp = f.data() + n;
  std::size_t k = 1;
  for (; k + 3 < top; k += 4) {
    s0 += hp[k] * fp[-static_cast<std::ptrdiff_t>(k)];
    s1 += hp[k + 1] * fp[-static_cast<std::ptrdiff_t>(k + 1)];
    s2 += hp[k + 2] * fp[-static_cast<std::ptrdiff_t>(k + 2)];
    s3 += hp[k + 3] * fp[-static_cast<std::ptrdiff_t>(k + 3)];
  }
  for (; k < top; ++k) s0 += hp[k] * fp[-static_cast<std::ptrdiff_t>(k)];
  return (s0 + s1) + (s2 + s3);
}

// Integral of Phi(z_n - s) f(s) over [0, z_n] with f piecewise linear,
// excluding the newest node f[n].
double history(const PhiTable& phi, const std::vector<double>& f, std::size_t n) {
  return kernel_at(phi.start, n) * f[0] + lagged_sum(phi.hat, f, n);
}

double trapezoid(const std::vector<double>& v, double step) {
  if (v.size() < 2) return 0.0;
  double s = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
  return s * step;
}

// Integral beyond the last grid point assuming exponential decay at the rate
// seen over the final tenth of the grid.
double tail_extrapolation(const std::vector<double>& v, double step) {
  const std::size_t n = v.size();
  if (n < 20) return 0.0;
  const std::size_t back = n / 10;
  const double far = v[n - 1];
  const double near = v[n - 1 - back];
  if (!(far > 0.0) || !(near > far)) return 0.0;
  const double rate = std::log(near / far) / (static_cast<double>(back) * step);
  return far / rate;
}

}  // namespace

UniformGrid UniformGrid::covering(double step, double horizon) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ParameterError("grid step must be > 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ParameterError("grid horizon must be >= 0");
  const double cells = std::ceil(horizon / step - 1e-9);
  return UniformGrid{step, static_cast<std::size_t>(cells) + 1};
}

PhiTable build_phi(double endogeneity, const marks::MarkDistribution& y, const UniformGrid& grid) {
  if (!(endogeneity > 0.0 && endogeneity < 1.0)) throw ParameterError("endogeneity must lie in (0, 1)");
  y.validate();
  if (grid.size < 2) throw ResolutionError("renewal grid needs at least two points");
  PhiTable phi;
  phi.grid = grid;
  phi.endogeneity = endogeneity;
  phi.values.resize(grid.size);
  for (std::size_t i = 0; i < grid.size; ++i) phi.values[i] = endogeneity * y.survival(grid.at(i));
  // E[min(Y,z)] and E[min(Y,z)^2]/2 are the first two integrated survival
  // moments; their increments give exact cell integrals of Phi and z*Phi.
  const double h = grid.step;
  std::vector<double> g(grid.size), q(grid.size);
  for (std::size_t i = 0; i < grid.size; ++i) {
    const double z = grid.at(i);
    g[i] = y.integrated_survival(z);
    q[i] = 0.5 * (y.truncated_moment(2, z) + z * z * y.survival(z));
  }
  const std::size_t cells = grid.size - 1;
  std::vector<double> mass(cells), lever(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    mass[i] = endogeneity * (g[i + 1] - g[i]);
    const double first = endogeneity * ((q[i + 1] - q[i]) - grid.at(i) * (g[i + 1] - g[i]));
    lever[i] = std::clamp(first / h, 0.0, mass[i]);
  }
  phi.hat.assign(grid.size, 0.0);
  phi.start.assign(grid.size, 0.0);
  phi.hat[0] = mass[0] - lever[0];
  for (std::size_t k = 1; k < grid.size; ++k) {
    phi.hat[k] = lever[k - 1] + (k < cells ? mass[k] - lever[k] : 0.0);
    phi.start[k] = lever[k - 1];
  }
  phi.kernel_scale = marks::kernel_scale(y);
  phi.total_mass = endogeneity * y.mean();
  phi.captured_mass = endogeneity * y.integrated_survival(grid.horizon());
  if (phi.captured_mass < 0.999 * phi.total_mass)
    throw ResolutionError("grid horizon " + std::to_string(grid.horizon()) + " captures only " +
                          std::to_string(phi.captured_mass / phi.total_mass) + " of the kernel mass");
  return phi;
}

PsiTable solve_psi(const PhiTable& phi) {
  const std::size_t n = phi.values.size();
  const double h = phi.grid.step;
  const double mass = phi.total_mass;
  if (mass >= 1.0) throw InstabilityError("kernel mass " + std::to_string(mass) + " is not below 1");

  PsiTable psi;
  psi.grid = phi.grid;
  psi.endogeneity = phi.endogeneity;
  psi.kernel_scale = phi.kernel_scale;
  psi.values.assign(n, 0.0);
  const auto& k = phi.values;
  auto& v = psi.values;
  v[0] = k[0];
  const double diag = 1.0 - phi.hat[0];
  for (std::size_t i = 1; i < n; ++i) v[i] = (k[i] + history(phi, v, i)) / diag;

  const std::size_t probes = std::min<std::size_t>(n, 257);
  double residual = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    const std::size_t i = probes == 1 ? 0 : p * (n - 1) / (probes - 1);
    const double conv = i > 0 ? history(phi, v, i) + phi.hat[0] * v[i] : 0.0;
    residual = std::max(residual, std::abs(v[i] - k[i] - conv));
  }
  psi.residual = residual;
  psi.integral_on_grid = trapezoid(v, h);
  psi.integral = psi.integral_on_grid + tail_extrapolation(v, h);
  return psi;
}

RhoTable build_rho(const PsiTable& psi, double scale, double endogeneity) {
  if (!(scale > 0.0)) throw ParameterError("scale T must be > 0");
  if (!(endogeneity > 0.0 && endogeneity < 1.0)) throw ParameterError("endogeneity must lie in (0, 1)");
  RhoTable rho;
  rho.scale = scale;
  rho.reversion = scale * (1.0 - endogeneity);
  rho.kernel_scale = psi.kernel_scale;
  rho.grid = UniformGrid{psi.grid.step / scale, psi.grid.size};
  const double factor = scale * (1.0 - endogeneity) / endogeneity;
  const double rate = rho.reversion / rho.kernel_scale;
  rho.values.resize(psi.values.size());
  rho.limit.resize(psi.values.size());
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    rho.values[i] = factor * psi.values[i];
    rho.limit[i] = rate * std::exp(-rate * rho.grid.at(i));
    rho.sup_distance = std::max(rho.sup_distance, std::abs(rho.values[i] - rho.limit[i]));
    if (i > 0 && rho.values[i] > rho.values[i - 1]) rho.non_increasing = false;
  }
  double cumulative = 0.0;
  for (std::size_t i = 1; i < rho.values.size(); ++i) {
    cumulative += 0.5 * (rho.values[i - 1] + rho.values[i]) * rho.grid.step;
    const double target = -std::expm1(-rate * rho.grid.at(i));
    rho.cdf_distance = std::max(rho.cdf_distance, std::abs(cumulative - target));
  }
  rho.integral_on_grid = (1.0 - endogeneity) / endogeneity * psi.integral_on_grid;
  rho.integral = (1.0 - endogeneity) / endogeneity * psi.integral;
  return rho;
}

double theta(double z, double lambda, double m) {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be > 0");
  if (!(m > 0.0)) throw ParameterError("m must be > 0");
  if (z < 0.0) throw ParameterError("theta is defined for z >= 0");
  return std::exp(-lambda * z / m) / m;
}

double MeanIntensityCurve::at(double t) const {
  if (t <= 0.0) return values.front();
  const double pos = t / grid.step;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= values.size()) return values.back();
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

double MeanIntensityCurve::integral(double t) const {
  const auto last = std::min(values.size() - 1, static_cast<std::size_t>(std::llround(t / grid.step)));
  if (last == 0) return 0.0;
  double s = 0.5 * (values[0] + values[last]);
  for (std::size_t i = 1; i < last; ++i) s += values[i];
  return s * grid.step;
}

MeanIntensityCurve solve_mean_intensity(double base, const PhiTable& phi, double horizon, double mean_x) {
  if (!(base > 0.0)) throw ParameterError("base intensity must be > 0");
  const double mass = mean_x * phi.total_mass;
  if (mass >= 1.0) throw InstabilityError("kernel mass " + std::to_string(mass) + " is not below 1");
  MeanIntensityCurve curve;
  curve.grid = UniformGrid::covering(phi.grid.step, horizon);
  curve.base_intensity = base;
  curve.endogeneity = phi.endogeneity;
  const std::size_t n = curve.grid.size;
  auto& v = curve.values;
  v.assign(n, 0.0);
  v[0] = base;
  const double diag = 1.0 - mean_x * phi.hat[0];
  for (std::size_t i = 1; i < n; ++i) v[i] = (base + mean_x * history(phi, v, i)) / diag;
  return curve;
}

double MeanIntensityPair::total_at(double t) const {
  const double pos = std::max(0.0, t / grid.step);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= bid.size()) return bid.back() + ask.back();
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * (bid[i] + ask[i]) + w * (bid[i + 1] + ask[i + 1]);
}

MeanIntensityPair solve_mean_intensity_pair(double base_bid, double base_ask, const std::vector<PhiTable>& kernels,
                                            double horizon) {
  if (kernels.size() != 4) throw ParameterError("two-sided mean system needs four kernels");
  if (!(base_bid > 0.0) || !(base_ask > 0.0)) throw ParameterError("base intensities must be > 0");
  const double h = kernels[0].grid.step;
  for (const auto& k : kernels)
    if (k.grid.step != h) throw ParameterError("kernels must share a grid step");
  MeanIntensityPair out;
  out.grid = UniformGrid::covering(h, horizon);
  const std::size_t n = out.grid.size;
  const auto& k = kernels;
  auto& b = out.bid;
  auto& a = out.ask;
  b.assign(n, 0.0);
  a.assign(n, 0.0);
  b[0] = base_bid;
  a[0] = base_ask;
  const double m11 = 1.0 - k[0].hat[0], m12 = -k[1].hat[0];
  const double m21 = -k[2].hat[0], m22 = 1.0 - k[3].hat[0];
  const double det = m11 * m22 - m12 * m21;
  for (std::size_t i = 1; i < n; ++i) {
    const double rb = base_bid + history(k[0], b, i) + history(k[1], a, i);
    const double ra = base_ask + history(k[2], b, i) + history(k[3], a, i);
    b[i] = (rb * m22 - m12 * ra) / det;
    a[i] = (m11 * ra - m21 * rb) / det;
  }
  return out;
}

RenewalTable make_table(const PhiTable& phi, const PsiTable& psi, const RhoTable& rho) {
  RenewalTable t;
  t.grid = phi.grid;
  t.phi = phi.values;
  t.psi = psi.values;
  t.rho = rho.values;
  t.endogeneity = phi.endogeneity;
  t.scale = rho.scale;
  t.reversion = rho.reversion;
  t.kernel_scale = rho.kernel_scale;
  t.theta.resize(rho.grid.size);
  for (std::size_t i = 0; i < rho.grid.size; ++i) t.theta[i] = theta(rho.grid.at(i), t.reversion, t.kernel_scale);
  return t;
}

}  // namespace hawkeslab::renewal

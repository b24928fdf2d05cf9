#pragma once

#include <cstddef>
#include <vector>

#include "hawkeslab/marks.hpp"

namespace hawkeslab::renewal {

struct UniformGrid {
  double step = 1e-3;
  std::size_t size = 1;

  double at(std::size_t i) const { return static_cast<double>(i) * step; }
  double horizon() const { return at(size - 1); }

  // Smallest grid with the given step that reaches the horizon.
  static UniformGrid covering(double step, double horizon);
};

// Phi(z) = a * P(Y > z), tabulated, together with product-trapezoid
// weights: the convolution of Phi with a piecewise-linear function on the
// grid is integrated exactly.
//   hat[0]     weight of the newest node (half hat at lag 0)
//   hat[k]     weight of the node at lag k >= 1 (full hat)
//   start[n]   weight of the node at z=0 when convolving up to z_n
struct PhiTable {
  UniformGrid grid;
  std::vector<double> values;
  std::vector<double> hat;
  std::vector<double> start;
  double endogeneity = 0.0;
  double kernel_scale = 0.0;   // m = E(Y^2)/2
  double total_mass = 0.0;     // a * E(Y)
  double captured_mass = 0.0;  // a * E(min(Y, Z_max))
};

struct PsiTable {
  UniformGrid grid;
  std::vector<double> values;
  double endogeneity = 0.0;
  double kernel_scale = 0.0;
  double residual = 0.0;             // sup |Psi - Phi - Phi*Psi| on probe points
  double integral_on_grid = 0.0;     // trapezoid over [0, Z_max]
  double integral = 0.0;             // plus exponential tail extrapolation
};

// rho^T on the rescaled grid z/T, with the exponential limit alongside.
struct RhoTable {
  UniformGrid grid;
  std::vector<double> values;
  std::vector<double> limit;
  double scale = 0.0;      // T
  double reversion = 0.0;  // lambda = T (1 - a)
  double kernel_scale = 0.0;
  double sup_distance = 0.0;
  // sup |int_0^z rho - (1 - exp(-lambda z / m))| over the grid
  double cdf_distance = 0.0;
  double integral_on_grid = 0.0;
  double integral = 0.0;
  bool non_increasing = true;
};

struct MeanIntensityCurve {
  UniformGrid grid;
  std::vector<double> values;
  double base_intensity = 0.0;
  double endogeneity = 0.0;

  // Linear interpolation on the grid.
  double at(double t) const;
  // Trapezoid integral of the curve over [0, t] (t on the grid).
  double integral(double t) const;
};

struct MeanIntensityPair {
  UniformGrid grid;
  std::vector<double> bid;
  std::vector<double> ask;

  double total_at(double t) const;
};

// Throws ResolutionError when the grid captures less than 99.9% of the
// kernel mass.
PhiTable build_phi(double endogeneity, const marks::MarkDistribution& y, const UniformGrid& grid);

// Forward substitution of Psi = Phi + Phi * Psi with trapezoid weights.
// Throws InstabilityError when the kernel mass is >= 1.
PsiTable solve_psi(const PhiTable& phi);

// rho^T(z) = T (1 - a)/a * Psi(T z) with lambda = T (1 - a).
RhoTable build_rho(const PsiTable& psi, double scale, double endogeneity);

// theta(z) = exp(-lambda z / m) / m.
double theta(double z, double lambda, double m);

// E lambda_t = base + mean_x * integral of Phi(t - s) E lambda_s ds.
MeanIntensityCurve solve_mean_intensity(double base, const PhiTable& phi, double horizon, double mean_x = 1.0);

// Two-sided mean system.  kernels[i] tabulates a_i E(X_i) P(Y_i > z) on a
// shared grid; streams 1,2 feed the bid side, 3,4 the ask side, and streams
// 1,3 arrive at the bid rate, 2,4 at the ask rate.
MeanIntensityPair solve_mean_intensity_pair(double base_bid, double base_ask, const std::vector<PhiTable>& kernels,
                                            double horizon);

// Combined table with columns z, phi(z), psi(z), rho(z/T), theta(z/T).
struct RenewalTable {
  UniformGrid grid;
  std::vector<double> phi;
  std::vector<double> psi;
  std::vector<double> rho;
  std::vector<double> theta;
  double endogeneity = 0.0;
  double scale = 0.0;
  double reversion = 0.0;
  double kernel_scale = 0.0;
};

RenewalTable make_table(const PhiTable& phi, const PsiTable& psi, const RhoTable& rho);

}  // namespace hawkeslab::renewal

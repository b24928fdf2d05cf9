#pragma once

#include <cstddef>
#include <vector>

#include "hawkeslab/errors.hpp"
#include "hawkeslab/marks.hpp"
#include "hawkeslab/rng.hpp"

namespace hawkeslab::hawkes {

// Uniform grid of rescaled times {0, step, ..., horizon}.
struct TimeGrid {
  double step = 0.01;
  std::size_t size = 1;

  double at(std::size_t i) const { return static_cast<double>(i) * step; }
  double horizon() const { return at(size - 1); }
  static TimeGrid covering(double step, double horizon);
};

struct HawkesParams {
  double base_intensity = 1.0;  // lambda_0
  double endogeneity = 0.5;     // a_T
  double scale = 1.0;           // T
  double reversion = 0.0;       // lambda in a_T = 1 - lambda/T, informational
  double horizon = 1.0;         // rescaled horizon; simulated up to scale * horizon
  marks::MarkPairConfig marks;
  std::size_t event_budget = 10'000'000;

  // a_T = 1 - lambda/T.
  static HawkesParams near_critical(double lambda, double scale, double base, double horizon,
                                    const marks::MarkPairConfig& marks);

  double original_horizon() const { return scale * horizon; }
  // Throws ParameterError, or InstabilityError when a_T E(X) E(Y) >= 1.
  void validate() const;
};

struct Arrival {
  double time = 0.0;
  double x = 0.0;
  double y = 0.0;
  double intensity_before = 0.0;  // lambda_{s-}
};

// Intensity value from `time` until the next breakpoint.
struct Breakpoint {
  double time = 0.0;
  double intensity = 0.0;
};

struct EventLog {
  HawkesParams params;
  rng::StreamSeed seed;
  std::vector<Arrival> arrivals;
  std::vector<Breakpoint> breakpoints;

  double horizon() const { return params.original_horizon(); }
  // Right-continuous intensity at original time t.
  double intensity_at(double t) const;
  // Exact integral of the intensity over [0, t].
  double integrated_intensity(double t) const;
};

class BudgetExceeded : public BudgetError {
 public:
  BudgetExceeded(const std::string& what, EventLog partial) : BudgetError(what), partial_(std::move(partial)) {}
  const EventLog& partial() const { return partial_; }

 private:
  EventLog partial_;
};

// Exact simulation on [0, T * horizon).  Every arrival is an independent
// source proposing offspring at rate x on [s, s + y), each kept with
// probability a_T; the immigrant source emits at rate lambda_0.  Proposals
// and their acceptance draws come from counter-based streams keyed by the
// genealogy, so raising a_T with the same seed only adds arrivals.
EventLog simulate(const HawkesParams& params, const rng::StreamSeed& seed);

// Rebuilds breakpoints and pre-arrival intensities from the arrivals.
void rebuild_breakpoints(EventLog& log);

struct GridPath {
  std::vector<double> times;
  std::vector<double> values;
};

// lambda_{T t} / T on the rescaled grid.
GridPath rescaled_intensity(const EventLog& log, double scale, const TimeGrid& grid);

// Sum of x over arrivals with s <= t (original time).
double offspring_count(const EventLog& log, double t);

// Z_t = (N_{Tt} - int_0^{Tt} lambda) / T.
GridPath fluctuation(const EventLog& log, double scale, const TimeGrid& grid);

// Compensated jump martingales normalised by the pre-arrival intensity:
//   W_t = T^{-1/2} [ sum x y / sqrt(lambda_{s-}) - E(X)E(Y) int sqrt(lambda) ]
//   B_t = T^{-1/2} [ sum x   / sqrt(lambda_{s-}) - E(X)     int sqrt(lambda) ]
// together with their exact jump quadratic (co)variations.
struct DriverPaths {
  std::vector<double> times;
  std::vector<double> w;
  std::vector<double> b;
  std::vector<double> qv_w;
  std::vector<double> qv_b;
  std::vector<double> covariation;
};

DriverPaths driver_paths(const EventLog& log, double scale, const TimeGrid& grid);
GridPath empirical_driver(const EventLog& log, double scale, const TimeGrid& grid);
GridPath offspring_driver(const EventLog& log, double scale, const TimeGrid& grid);

// R_t = lambda~_t - lambda_0/T - (a_T E(X)/T) int_0^{Tt} lambda_u P(Y > Tt - u) du,
// evaluated exactly from the piecewise-constant intensity.
GridPath truncated_remainder(const EventLog& log, double scale, const TimeGrid& grid);

// Splits the jump quadratic variation of W over [0, T*t] into arrivals with
// both marks <= cap and the rest.
struct DriverSplit {
  double cap = 0.0;
  double small = 0.0;
  double large = 0.0;
};
DriverSplit driver_split(const EventLog& log, double scale, double t, double cap);

}  // namespace hawkeslab::hawkes

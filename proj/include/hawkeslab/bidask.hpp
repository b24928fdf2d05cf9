#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "hawkeslab/errors.hpp"
#include "hawkeslab/hawkes.hpp"
#include "hawkeslab/marks.hpp"
#include "hawkeslab/rng.hpp"

namespace hawkeslab::bidask {

// Streams are numbered 1..4.  Streams 1 and 2 are bid orders and raise the
// bid intensity; 3 and 4 are ask orders and raise the ask intensity.
// Streams 1 and 3 arrive at the bid intensity, 2 and 4 at the ask intensity.
enum class Side { Bid = 0, Ask = 1 };

Side contributes_to(int stream);
Side driven_by(int stream);

struct BidAskParams {
  double base_bid = 0.5;
  double base_ask = 0.5;
  std::array<double, 4> coefficients{0.5, 0.5, 0.5, 0.5};
  double scale = 1.0;
  double reversion = 0.0;
  double horizon = 1.0;
  std::array<marks::MarkPairConfig, 4> streams;
  std::size_t event_budget = 10'000'000;
  // Labels of the two immigrant random streams; mirrored() swaps them so
  // the mirrored market replays the same randomness with sides exchanged.
  std::array<std::uint32_t, 2> side_keys{0, 1};

  // All coefficients a_T = 1 - lambda/T.
  static BidAskParams near_critical(double lambda, double scale, double base_bid, double base_ask, double horizon,
                                    const std::array<marks::MarkPairConfig, 4>& streams);

  // Exchanges bid and ask: streams 1<->4, 2<->3 and the two baselines.
  BidAskParams mirrored() const;

  double original_horizon() const { return scale * horizon; }
  void validate() const;
};

struct StabilityReport {
  std::array<double, 4> matrix{};  // row-major a_i E(X_i)
  double radius = 0.0;
  double mean_duration = 0.0;
  double value = 0.0;
  bool stable = false;
};

// Spectral radius of [[a1 E X1, a2 E X2], [a3 E X3, a4 E X4]] times E(Y_1).
StabilityReport check_stability(const BidAskParams& params);

struct MarketArrival {
  double time = 0.0;
  int stream = 1;
  double x = 0.0;
  double y = 0.0;
  double bid_before = 0.0;
  double ask_before = 0.0;
};

// State from `time` until the next breakpoint; the price is linear in
// between with the recorded slope.
struct MarketBreakpoint {
  double time = 0.0;
  double bid = 0.0;
  double ask = 0.0;
  double price = 0.0;
  double slope = 0.0;
};

struct MarketPath {
  BidAskParams params;
  rng::StreamSeed seed;
  std::vector<MarketArrival> arrivals;
  std::vector<MarketBreakpoint> breakpoints;

  double horizon() const { return params.original_horizon(); }
  const MarketBreakpoint& state_at(double t) const;
  double price_at(double t) const;
};

class BudgetExceeded : public BudgetError {
 public:
  BudgetExceeded(const std::string& what, MarketPath partial) : BudgetError(what), partial_(std::move(partial)) {}
  const MarketPath& partial() const { return partial_; }

 private:
  MarketPath partial_;
};

// Exact simulation on [0, T * horizon).  Every order is a source emitting
// at twice its intensity contribution; each emission is labelled same-side
// or cross-side with a fair draw, which realises M1,M3 at the bid rate and
// M2,M4 at the ask rate.
MarketPath simulate_market(const BidAskParams& params, const rng::StreamSeed& seed);

void rebuild_breakpoints(MarketPath& path);

struct RescaledMarket {
  std::vector<double> times;
  std::vector<double> bid;
  std::vector<double> ask;
  std::vector<double> price;
};

RescaledMarket rescaled_market(const MarketPath& path, double scale, const hawkes::TimeGrid& grid);

// (N+_t, N-_t) with N = sum x min(y, t - s) over the side's orders.
std::pair<double, double> executed_volumes(const MarketPath& path, double t);

struct DriverQuartet {
  std::vector<double> times;
  std::array<std::vector<double>, 4> paths;
  std::array<std::vector<double>, 4> jump_qv;
};

// W^i_t = T^{-1/2}[ sum_i x y / sqrt(lambda^{side}_{s-}) - E(X_i)E(Y_i) int sqrt(lambda^{side}) ]
// with `side` the intensity driving stream i.
DriverQuartet driver_quartet(const MarketPath& path, double scale, const hawkes::TimeGrid& grid);

}  // namespace hawkeslab::bidask

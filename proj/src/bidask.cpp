#include "hawkeslab/bidask.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <string>
#include <tuple>

#include "hawkeslab/detail/sources.hpp"
#include "hawkeslab/detail/sum.hpp"

namespace hawkeslab::bidask {

namespace {

constexpr std::uint64_t kImmigrantOffset = 1000;

int side_index(Side s) { return static_cast<int>(s); }

// Stream emitted by a source of the given side: same-side orders raise the
// intensity that drives them.
int emitted_stream(int side, bool same) {
  if (side == 0) return same ? 1 : 3;
  return same ? 4 : 2;
}

}  // namespace

Side contributes_to(int stream) { return stream <= 2 ? Side::Bid : Side::Ask; }
Side driven_by(int stream) { return (stream == 1 || stream == 3) ? Side::Bid : Side::Ask; }

BidAskParams BidAskParams::near_critical(double lambda, double scale, double base_bid, double base_ask,
                                         double horizon, const std::array<marks::MarkPairConfig, 4>& streams) {
  if (!(scale > lambda) || !(lambda > 0.0)) throw ParameterError("near-critical scaling needs T > lambda > 0");
  BidAskParams p;
  p.base_bid = base_bid;
  p.base_ask = base_ask;
  p.coefficients.fill(1.0 - lambda / scale);
  p.scale = scale;
  p.reversion = lambda;
  p.horizon = horizon;
  p.streams = streams;
  return p;
}

BidAskParams BidAskParams::mirrored() const {
  BidAskParams m = *this;
  std::swap(m.base_bid, m.base_ask);
  m.coefficients = {coefficients[3], coefficients[2], coefficients[1], coefficients[0]};
  m.streams = {streams[3], streams[2], streams[1], streams[0]};
  std::swap(m.side_keys[0], m.side_keys[1]);
  return m;
}

void BidAskParams::validate() const {
  if (!(base_bid > 0.0) || !(base_ask > 0.0)) throw ParameterError("base intensities must be > 0");
  for (double a : coefficients)
    if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterError("coefficients must be >= 0");
  if (!(scale > 0.0)) throw ParameterError("T must be > 0");
  if (!(horizon > 0.0)) throw ParameterError("horizon must be > 0");
  if (event_budget == 0) throw ParameterError("event budget must be positive");
  for (const auto& s : streams) {
    s.x.validate();
    s.y.validate();
  }
  const auto report = check_stability(*this);
  if (!report.stable)
    throw InstabilityError("spectral radius condition fails: " + std::to_string(report.value) + " >= 1");
}

StabilityReport check_stability(const BidAskParams& params) {
  StabilityReport r;
  for (int i = 0; i < 4; ++i) r.matrix[i] = params.coefficients[i] * params.streams[i].x.mean();
  const double p = r.matrix[0], q = r.matrix[1], u = r.matrix[2], s = r.matrix[3];
  const double tr = p + s;
  const double det = p * s - q * u;
  const double disc = tr * tr - 4.0 * det;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    r.radius = std::max(std::abs(0.5 * (tr + root)), std::abs(0.5 * (tr - root)));
  } else {
    r.radius = std::sqrt(det);
  }
  r.mean_duration = params.streams[0].y.mean();
  r.value = r.radius * r.mean_duration;
  r.stable = r.value < 1.0;
  return r;
}

const MarketBreakpoint& MarketPath::state_at(double t) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t,
                             [](double v, const MarketBreakpoint& b) { return v < b.time; });
  if (it == breakpoints.begin()) return breakpoints.front();
  return *std::prev(it);
}

double MarketPath::price_at(double t) const {
  const auto& b = state_at(t);
  return b.price + b.slope * (t - b.time);
}

void rebuild_breakpoints(MarketPath& path) {
  const auto& prm = path.params;
  const double horizon = path.horizon();
  using Expiry = std::tuple<double, int, double>;
  std::priority_queue<Expiry, std::vector<Expiry>, std::greater<>> expiries;
  std::array<detail::CompensatedSum, 2> intensity_mass, exec_mass;
  std::array<std::size_t, 2> active{0, 0};
  auto& bp = path.breakpoints;
  bp.clear();
  bp.reserve(2 * path.arrivals.size() + 1);
  double price = 0.0;
  double last = 0.0;
  double slope = 0.0;
  auto push = [&](double t) {
    price += slope * (t - last);
    last = t;
    slope = exec_mass[0].value() - exec_mass[1].value();
    bp.push_back({t, prm.base_bid + intensity_mass[0].value(), prm.base_ask + intensity_mass[1].value(), price, slope});
  };
  bp.push_back({0.0, prm.base_bid, prm.base_ask, 0.0, 0.0});
  auto expire_until = [&](double t, bool inclusive) {
    while (!expiries.empty() &&
           (std::get<0>(expiries.top()) < t || (inclusive && std::get<0>(expiries.top()) <= t))) {
      const auto [when, stream, x] = expiries.top();
      expiries.pop();
      const int s = side_index(contributes_to(stream));
      if (--active[s] == 0) {
        intensity_mass[s].reset();
        exec_mass[s].reset();
      } else {
        intensity_mass[s].add(-prm.coefficients[stream - 1] * x);
        exec_mass[s].add(-x);
      }
      push(when);
    }
  };
  for (auto& ar : path.arrivals) {
    expire_until(ar.time, false);
    ar.bid_before = prm.base_bid + intensity_mass[0].value();
    ar.ask_before = prm.base_ask + intensity_mass[1].value();
    if (ar.y > 0.0) {
      const int s = side_index(contributes_to(ar.stream));
      intensity_mass[s].add(prm.coefficients[ar.stream - 1] * ar.x);
      exec_mass[s].add(ar.x);
      ++active[s];
      expiries.emplace(ar.time + ar.y, ar.stream, ar.x);
    }
    push(ar.time);
  }
  while (!expiries.empty() && std::get<0>(expiries.top()) < horizon)
    expire_until(std::get<0>(expiries.top()), true);
}

MarketPath simulate_market(const BidAskParams& params, const rng::StreamSeed& seed) {
  params.validate();
  MarketPath path;
  path.params = params;
  path.seed = seed;
  const double horizon = params.original_horizon();

  detail::SourceQueue queue;
  const std::uint64_t root = rng::child_id(rng::mix64(seed.id), seed.stream);
  const std::array<double, 2> base{params.base_bid, params.base_ask};
  for (int side = 0; side < 2; ++side) {
    const std::uint64_t id = rng::child_id(root, kImmigrantOffset + params.side_keys[side]);
    queue.add(detail::Source{0.0, horizon, 2.0 * base[side], id, 0, side, 1.0,
                             rng::Engine({seed.master, rng::kEventSourceStream, id})},
              0.0);
  }
  while (!queue.empty()) {
    const auto e = queue.pop(true);
    const int stream = emitted_stream(e.side, e.label < 0.5);
    const auto& law = params.streams[stream - 1];
    rng::Engine engine({seed.master, rng::kEventSourceStream, e.child});
    const double x = law.x.sample(engine);
    const double y = law.y.sample(engine);
    path.arrivals.push_back({e.time, stream, x, y, 0.0, 0.0});
    if (path.arrivals.size() > params.event_budget) {
      path.arrivals.pop_back();
      rebuild_breakpoints(path);
      throw BudgetExceeded("event budget of " + std::to_string(params.event_budget) + " exceeded at t=" +
                               std::to_string(e.time),
                           std::move(path));
    }
    const int side = side_index(contributes_to(stream));
    queue.add(detail::Source{0.0, std::min(e.time + y, horizon), 2.0 * params.coefficients[stream - 1] * x, e.child,
                             0, side, 1.0, std::move(engine)},
              e.time);
  }
  rebuild_breakpoints(path);
  return path;
}

RescaledMarket rescaled_market(const MarketPath& path, double scale, const hawkes::TimeGrid& grid) {
  RescaledMarket out;
  for (auto* v : {&out.times, &out.bid, &out.ask, &out.price}) v->resize(grid.size);
  for (std::size_t k = 0; k < grid.size; ++k) {
    const double t = scale * grid.at(k);
    const auto& b = path.state_at(t);
    out.times[k] = grid.at(k);
    out.bid[k] = b.bid / scale;
    out.ask[k] = b.ask / scale;
    out.price[k] = (b.price + b.slope * (t - b.time)) / scale;
  }
  return out;
}

std::pair<double, double> executed_volumes(const MarketPath& path, double t) {
  double bid = 0.0, ask = 0.0;
  for (const auto& ar : path.arrivals) {
    if (ar.time > t) break;
    const double v = ar.x * std::min(ar.y, t - ar.time);
    (contributes_to(ar.stream) == Side::Bid ? bid : ask) += v;
  }
  return {bid, ask};
}

DriverQuartet driver_quartet(const MarketPath& path, double scale, const hawkes::TimeGrid& grid) {
  DriverQuartet out;
  out.times.resize(grid.size);
  for (int i = 0; i < 4; ++i) {
    out.paths[i].assign(grid.size, 0.0);
    out.jump_qv[i].assign(grid.size, 0.0);
  }
  std::array<double, 4> comp_rate{};
  for (int i = 0; i < 4; ++i) comp_rate[i] = path.params.streams[i].x.mean() * path.params.streams[i].y.mean();
  const double norm = 1.0 / std::sqrt(scale);
  const auto& bp = path.breakpoints;
  std::size_t b = 0, j = 0;
  double t = 0.0;
  std::array<double, 2> sqrt_int{0.0, 0.0};
  std::array<double, 4> jumps{}, qv{};
  auto accumulate = [&](double dt) {
    sqrt_int[0] += std::sqrt(bp[b].bid) * dt;
    sqrt_int[1] += std::sqrt(bp[b].ask) * dt;
  };
  for (std::size_t k = 0; k < grid.size; ++k) {
    const double to = scale * grid.at(k);
    out.times[k] = grid.at(k);
    for (; j < path.arrivals.size() && path.arrivals[j].time <= to; ++j) {
      const auto& ar = path.arrivals[j];
      const double level = driven_by(ar.stream) == Side::Bid ? ar.bid_before : ar.ask_before;
      const double d = ar.x * ar.y / std::sqrt(level);
      jumps[ar.stream - 1] += d;
      qv[ar.stream - 1] += d * d;
    }
    while (b + 1 < bp.size() && bp[b + 1].time <= to) {
      accumulate(bp[b + 1].time - t);
      t = bp[b + 1].time;
      ++b;
    }
    if (to > t) {
      accumulate(to - t);
      t = to;
    }
    for (int i = 0; i < 4; ++i) {
      const int s = side_index(driven_by(i + 1));
      out.paths[i][k] = norm * (jumps[i] - comp_rate[i] * sqrt_int[s]);
      out.jump_qv[i][k] = qv[i] / scale;
    }
  }
  return out;
}

}  // namespace hawkeslab::bidask

#include "hawkeslab/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <string>
#include <utility>

#include "hawkeslab/detail/sources.hpp"
#include "hawkeslab/detail/sum.hpp"

namespace hawkeslab::hawkes {

namespace {

// Walks the piecewise-constant intensity, accumulating exact integrals of
// lambda and sqrt(lambda) up to a moving time.
class IntensitySweep {
 public:
  explicit IntensitySweep(const std::vector<Breakpoint>& bp) : bp_(bp) {}

  void advance(double to) {
    while (i_ + 1 < bp_.size() && bp_[i_ + 1].time <= to) {
      accumulate(bp_[i_ + 1].time - t_);
      t_ = bp_[i_ + 1].time;
      ++i_;
    }
    if (to > t_) {
      accumulate(to - t_);
      t_ = to;
    }
  }

  double integral() const { return integral_; }
  double sqrt_integral() const { return sqrt_integral_; }

 private:
  void accumulate(double dt) {
    integral_ += bp_[i_].intensity * dt;
    sqrt_integral_ += std::sqrt(bp_[i_].intensity) * dt;
  }

  const std::vector<Breakpoint>& bp_;
  std::size_t i_ = 0;
  double t_ = 0.0;
  double integral_ = 0.0;
  double sqrt_integral_ = 0.0;
};

std::vector<double> original_times(const TimeGrid& grid, double scale) {
  std::vector<double> t(grid.size);
  for (std::size_t k = 0; k < grid.size; ++k) t[k] = scale * grid.at(k);
  return t;
}

std::vector<double> rescaled_times(const TimeGrid& grid) {
  std::vector<double> t(grid.size);
  for (std::size_t k = 0; k < grid.size; ++k) t[k] = grid.at(k);
  return t;
}

std::uint64_t root_id(const rng::StreamSeed& seed) { return rng::child_id(rng::mix64(seed.id), seed.stream); }

}  // namespace

TimeGrid TimeGrid::covering(double step, double horizon) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ParameterError("grid step must be > 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ParameterError("grid horizon must be >= 0");
  const double cells = std::round(horizon / step);
  if (std::abs(cells * step - horizon) > 1e-9 * std::max(1.0, horizon))
    throw ParameterError("grid step must divide the horizon");
  return TimeGrid{step, static_cast<std::size_t>(cells) + 1};
}

HawkesParams HawkesParams::near_critical(double lambda, double scale, double base, double horizon,
                                         const marks::MarkPairConfig& marks) {
  if (!(scale > lambda) || !(lambda > 0.0)) throw ParameterError("near-critical scaling needs T > lambda > 0");
  HawkesParams p;
  p.base_intensity = base;
  p.endogeneity = 1.0 - lambda / scale;
  p.scale = scale;
  p.reversion = lambda;
  p.horizon = horizon;
  p.marks = marks;
  return p;
}

void HawkesParams::validate() const {
  if (!(base_intensity > 0.0) || !std::isfinite(base_intensity)) throw ParameterError("lambda_0 must be > 0");
  if (!(endogeneity >= 0.0 && endogeneity < 1.0)) throw ParameterError("a_T must lie in [0, 1)");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("T must be > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon must be > 0");
  if (event_budget == 0) throw ParameterError("event budget must be positive");
  marks.x.validate();
  marks.y.validate();
  const double branching = endogeneity * marks.x.mean() * marks.y.mean();
  if (!(branching < 1.0))
    throw InstabilityError("a_T E(X) E(Y) = " + std::to_string(branching) + " is not below 1");
}

double EventLog::intensity_at(double t) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t,
                             [](double v, const Breakpoint& b) { return v < b.time; });
  if (it == breakpoints.begin()) return params.base_intensity;
  return std::prev(it)->intensity;
}

double EventLog::integrated_intensity(double t) const {
  IntensitySweep sweep(breakpoints);
  sweep.advance(t);
  return sweep.integral();
}

void rebuild_breakpoints(EventLog& log) {
  const double base = log.params.base_intensity;
  const double a = log.params.endogeneity;
  const double horizon = log.horizon();
  using Expiry = std::pair<double, double>;
  std::priority_queue<Expiry, std::vector<Expiry>, std::greater<>> expiries;
  detail::CompensatedSum mass;
  std::size_t active = 0;
  auto& bp = log.breakpoints;
  bp.clear();
  bp.reserve(2 * log.arrivals.size() + 1);
  bp.push_back({0.0, base});
  auto expire_until = [&](double t, bool inclusive) {
    while (!expiries.empty() && (expiries.top().first < t || (inclusive && expiries.top().first <= t))) {
      const auto [when, x] = expiries.top();
      expiries.pop();
      if (--active == 0)
        mass.reset();
      else
        mass.add(-x);
      bp.push_back({when, base + a * mass.value()});
    }
  };
  for (auto& ar : log.arrivals) {
    expire_until(ar.time, false);
    ar.intensity_before = base + a * mass.value();
    if (ar.y > 0.0) {
      mass.add(ar.x);
      ++active;
      expiries.emplace(ar.time + ar.y, ar.x);
    }
    bp.push_back({ar.time, base + a * mass.value()});
  }
  while (!expiries.empty() && expiries.top().first < horizon) expire_until(expiries.top().first, true);
}

EventLog simulate(const HawkesParams& params, const rng::StreamSeed& seed) {
  params.validate();
  EventLog log;
  log.params = params;
  log.seed = seed;
  const double horizon = params.original_horizon();
  const auto& xd = params.marks.x;
  const auto& yd = params.marks.y;

  detail::SourceQueue queue;
  const std::uint64_t root = root_id(seed);
  queue.add(detail::Source{0.0, horizon, params.base_intensity, root, 0, 0, 1.0,
                           rng::Engine({seed.master, rng::kEventSourceStream, root})},
            0.0);
  while (!queue.empty()) {
    const auto e = queue.pop(false);
    rng::Engine engine({seed.master, rng::kEventSourceStream, e.child});
    if (e.keep < 1.0 && !(engine.uniform() < e.keep)) continue;
    const double x = xd.sample(engine);
    const double y = yd.sample(engine);
    log.arrivals.push_back({e.time, x, y, 0.0});
    if (log.arrivals.size() > params.event_budget) {
      log.arrivals.pop_back();
      rebuild_breakpoints(log);
      throw BudgetExceeded("event budget of " + std::to_string(params.event_budget) + " exceeded at t=" +
                               std::to_string(e.time),
                           std::move(log));
    }
    queue.add(detail::Source{0.0, std::min(e.time + y, horizon), x, e.child, 0, 0, params.endogeneity,
                             std::move(engine)},
              e.time);
  }
  rebuild_breakpoints(log);
  return log;
}

GridPath rescaled_intensity(const EventLog& log, double scale, const TimeGrid& grid) {
  GridPath out{rescaled_times(grid), std::vector<double>(grid.size)};
  for (std::size_t k = 0; k < grid.size; ++k) out.values[k] = log.intensity_at(scale * grid.at(k)) / scale;
  return out;
}

double offspring_count(const EventLog& log, double t) {
  double n = 0.0;
  for (const auto& ar : log.arrivals) {
    if (ar.time > t) break;
    n += ar.x;
  }
  return n;
}

GridPath fluctuation(const EventLog& log, double scale, const TimeGrid& grid) {
  GridPath out{rescaled_times(grid), std::vector<double>(grid.size)};
  const auto times = original_times(grid, scale);
  IntensitySweep sweep(log.breakpoints);
  double count = 0.0;
  std::size_t j = 0;
  for (std::size_t k = 0; k < grid.size; ++k) {
    while (j < log.arrivals.size() && log.arrivals[j].time <= times[k]) count += log.arrivals[j++].x;
    sweep.advance(times[k]);
    out.values[k] = (count - sweep.integral()) / scale;
  }
  return out;
}

DriverPaths driver_paths(const EventLog& log, double scale, const TimeGrid& grid) {
  DriverPaths out;
  out.times = rescaled_times(grid);
  for (auto* v : {&out.w, &out.b, &out.qv_w, &out.qv_b, &out.covariation}) v->assign(grid.size, 0.0);
  const auto times = original_times(grid, scale);
  const double mx = log.params.marks.x.mean();
  const double mxy = mx * log.params.marks.y.mean();
  const double norm = 1.0 / std::sqrt(scale);
  IntensitySweep sweep(log.breakpoints);
  double jw = 0.0, jb = 0.0, qw = 0.0, qb = 0.0, cov = 0.0;
  std::size_t j = 0;
  for (std::size_t k = 0; k < grid.size; ++k) {
    for (; j < log.arrivals.size() && log.arrivals[j].time <= times[k]; ++j) {
      const auto& ar = log.arrivals[j];
      const double inv = 1.0 / std::sqrt(ar.intensity_before);
      const double dw = ar.x * ar.y * inv;
      const double db = ar.x * inv;
      jw += dw;
      jb += db;
      qw += dw * dw;
      qb += db * db;
      cov += dw * db;
    }
    sweep.advance(times[k]);
    out.w[k] = norm * (jw - mxy * sweep.sqrt_integral());
    out.b[k] = norm * (jb - mx * sweep.sqrt_integral());
    out.qv_w[k] = qw / scale;
    out.qv_b[k] = qb / scale;
    out.covariation[k] = cov / scale;
  }
  return out;
}

GridPath empirical_driver(const EventLog& log, double scale, const TimeGrid& grid) {
  auto d = driver_paths(log, scale, grid);
  return GridPath{std::move(d.times), std::move(d.w)};
}

GridPath offspring_driver(const EventLog& log, double scale, const TimeGrid& grid) {
  auto d = driver_paths(log, scale, grid);
  return GridPath{std::move(d.times), std::move(d.b)};
}

GridPath truncated_remainder(const EventLog& log, double scale, const TimeGrid& grid) {
  GridPath out{rescaled_times(grid), std::vector<double>(grid.size)};
  const auto& y = log.params.marks.y;
  const double coef = log.params.endogeneity * log.params.marks.x.mean() / scale;
  const auto& bp = log.breakpoints;
  for (std::size_t k = 0; k < grid.size; ++k) {
    const double t = scale * grid.at(k);
    double conv = 0.0;
    for (std::size_t i = 0; i < bp.size() && bp[i].time < t; ++i) {
      const double u1 = i + 1 < bp.size() ? std::min(bp[i + 1].time, t) : t;
      if (u1 <= bp[i].time) continue;
      conv += bp[i].intensity * (y.integrated_survival(t - bp[i].time) - y.integrated_survival(t - u1));
    }
    out.values[k] = log.intensity_at(t) / scale - log.params.base_intensity / scale - coef * conv;
  }
  return out;
}

DriverSplit driver_split(const EventLog& log, double scale, double t, double cap) {
  DriverSplit s;
  s.cap = cap;
  const double end = scale * t;
  for (const auto& ar : log.arrivals) {
    if (ar.time > end) break;
    const double j = ar.x * ar.x * ar.y * ar.y / ar.intensity_before / scale;
    if (ar.x <= cap && ar.y <= cap)
      s.small += j;
    else
      s.large += j;
  }
  return s;
}

}  // namespace hawkeslab::hawkes

#include "hawkeslab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "hawkeslab/bidask.hpp"
#include "hawkeslab/errors.hpp"
#include "hawkeslab/hawkes.hpp"
#include "hawkeslab/parallel.hpp"
#include "hawkeslab/renewal.hpp"

namespace hawkeslab::experiments {

using nlohmann::json;

namespace {

// Stream labels of the per-path seeds.  The same label is used for every T
// so that ensembles at different T share their randomness path by path.
enum Role : std::uint32_t {
  kPrelimit = 1,
  kLimit = 2,
  kMarket = 3,
  kFluctuationLimit = 4,
  kSystem = 5,
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Verdict at_most(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value, threshold, value <= threshold, std::move(detail)};
}

Verdict holds(std::string name, bool ok, std::string detail = {}) {
  return {std::move(name), ok ? 1.0 : 0.0, 1.0, ok, std::move(detail)};
}

double relative_error(double value, double target) { return std::abs(value / target - 1.0); }

std::vector<std::size_t> grid_indices(const std::vector<double>& times, double step) {
  std::vector<std::size_t> idx;
  idx.reserve(times.size());
  for (double t : times) idx.push_back(static_cast<std::size_t>(std::llround(t / step)));
  return idx;
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t j) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

RunSeed run_seed(const std::string& label, const ExperimentConfig& c, Role role, std::size_t paths) {
  return {label, c.seed, role, paths, rng::fingerprint(rng::derive_seed(c.seed, 0, role))};
}

std::string format_scale(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

[[noreturn]] void rethrow_budget(const std::string& where, std::size_t path, const BudgetError& e) {
  throw BudgetError(where + ", path " + std::to_string(path) + ": " + e.what());
}

double mark_noise(const marks::MarkPairConfig& p) { return p.x.second_moment() * p.y.second_moment(); }

sde::CirParams scalar_limit(const ExperimentConfig& c) {
  sde::CirParams p;
  p.reversion = c.reversion;
  p.kernel_scale = marks::kernel_scale(c.marks.y);
  p.base = c.base_intensity;
  p.sigma_x = std::sqrt(c.marks.x.second_moment());
  p.sigma_y = std::sqrt(c.marks.y.second_moment());
  p.step = c.limit.step;
  p.horizon = c.horizon;
  p.scheme = c.limit.scheme;
  return p;
}

sde::SystemParams system_limit(const ExperimentConfig& c) {
  sde::SystemParams p;
  p.reversion = c.reversion;
  p.kernel_scale = marks::kernel_scale(c.streams[0].y);
  p.base_bid = c.base_bid;
  p.base_ask = c.base_ask;
  for (std::size_t i = 0; i < 4; ++i) p.driver_variances[i] = mark_noise(c.streams[i]);
  p.step = c.limit.step;
  p.horizon = c.horizon;
  p.scheme = c.limit.scheme;
  return p;
}

bool equal_variances(const sde::SystemParams& p) {
  const auto& v = p.driver_variances;
  return std::all_of(v.begin(), v.end(), [&](double x) { return std::abs(x - v[0]) <= 1e-12 * std::abs(v[0]); });
}

// Samples of the last-checkpoint values of a limit component.
std::vector<std::vector<double>> limit_samples(std::size_t n, unsigned workers, const std::vector<std::size_t>& idx,
                                               const std::function<sde::SdePath(std::size_t)>& simulate,
                                               std::size_t component) {
  return parallel::map_indices(n, workers, [&](std::size_t i) {
    const sde::SdePath path = simulate(i);
    std::vector<double> out;
    for (std::size_t k : idx) out.push_back(path.components[component][k]);
    return out;
  });
}

std::vector<std::string> meta(double scale, std::size_t n, double dt, std::uint64_t seed) {
  return {cell(scale), cell(static_cast<std::uint64_t>(n)), cell(dt), cell(seed)};
}

// ---------------------------------------------------------------- renewal

ExperimentReport renewal_identities(const ExperimentConfig& c) {
  ExperimentReport r;
  const auto grid = renewal::UniformGrid::covering(c.renewal.step, c.renewal.horizon);
  const double a = c.endogeneity;
  const auto phi = renewal::build_phi(a, c.marks.y, grid);
  const auto psi = renewal::solve_psi(phi);
  const auto rho = renewal::build_rho(psi, 1.0, a);
  const double ey = c.marks.y.mean();
  const double psi_target = a * ey / (1.0 - a * ey);
  const double rho_target = (1.0 - a) * ey / (1.0 - a * ey);

  r.verdicts.push_back(at_most("psi_integral", relative_error(psi.integral, psi_target), c.tolerance("psi_integral"),
                               "relative error of the integral of Psi against a E(Y)/(1 - a E(Y))"));
  r.verdicts.push_back(at_most("rho_integral", std::abs(rho.integral - rho_target), c.tolerance("rho_integral"),
                               "absolute error of the integral of rho"));
  r.verdicts.push_back(holds("rho_non_increasing", rho.non_increasing, "rho non-increasing at every grid point"));

  const auto table = renewal::make_table(phi, psi, rho);
  Table t{"renewal_table.csv", {"z", "phi", "psi", "rho", "theta_limit", "T", "dz"}, {}};
  t.rows.reserve(table.grid.size);
  for (std::size_t i = 0; i < table.grid.size; ++i)
    t.rows.push_back({cell(table.grid.at(i)), cell(table.phi[i]), cell(table.psi[i]), cell(table.rho[i]),
                      cell(table.theta[i]), cell(1.0), cell(grid.step)});
  r.tables.push_back(std::move(t));
  r.summary = {{"psi_integral", psi.integral},
               {"psi_integral_on_grid", psi.integral_on_grid},
               {"psi_target", psi_target},
               {"rho_integral", rho.integral},
               {"rho_target", rho_target},
               {"residual", psi.residual},
               {"rho_non_increasing", rho.non_increasing}};
  return r;
}

ExperimentReport renewal_convergence(const ExperimentConfig& c) {
  ExperimentReport r;
  Table t{"renewal_convergence.csv",
          {"T", "dz", "a", "sup_distance", "cdf_distance", "psi_integral", "rho_integral", "residual", "rho_non_increasing"},
          {}};
  std::vector<double> sup;
  json rows = json::array();
  for (double scale : c.scales) {
    const double a = 1.0 - c.reversion / scale;
    const double dz = c.renewal.window * scale / static_cast<double>(c.renewal.cells);
    const renewal::UniformGrid grid{dz, c.renewal.cells + 1};
    const auto phi = renewal::build_phi(a, c.marks.y, grid);
    const auto psi = renewal::solve_psi(phi);
    const auto rho = renewal::build_rho(psi, scale, a);
    sup.push_back(rho.sup_distance);
    t.rows.push_back({cell(scale), cell(dz), cell(a), cell(rho.sup_distance), cell(rho.cdf_distance),
                      cell(psi.integral), cell(rho.integral), cell(psi.residual), cell(rho.non_increasing ? 1.0 : 0.0)});
    rows.push_back({{"T", scale}, {"sup_distance", rho.sup_distance}, {"cdf_distance", rho.cdf_distance}});
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < sup.size(); ++i) decreasing = decreasing && sup[i] < sup[i - 1];
  if (sup.size() > 1)
    r.verdicts.push_back(holds("sup_distance_decreasing", decreasing, "sup |rho^T - limit| strictly decreasing in T"));
  r.verdicts.push_back(at_most("sup_distance_final", sup.back(), c.tolerance("sup_distance_final"),
                               "sup |rho^T - limit| at the largest T"));
  r.tables.push_back(std::move(t));
  r.summary = {{"rows", rows}};
  return r;
}

ExperimentReport renewal_check(const ExperimentConfig& c) {
  return c.scales.empty() ? renewal_identities(c) : renewal_convergence(c);
}

// ---------------------------------------------------------------- hawkes-mean

Table event_table(const hawkes::EventLog& log) {
  Table t{"events.csv", {"s", "x", "y"}, {}};
  t.rows.reserve(log.arrivals.size());
  for (const auto& a : log.arrivals) t.rows.push_back({cell(a.time), cell(a.x), cell(a.y)});
  return t;
}

ExperimentReport hawkes_mean(const ExperimentConfig& c) {
  ExperimentReport r;
  std::vector<double> times = c.checkpoints;
  if (times.empty())
    for (int k = 1; k <= 10; ++k) times.push_back(c.horizon * k / 10.0);

  hawkes::HawkesParams p;
  p.base_intensity = c.base_intensity;
  p.endogeneity = c.endogeneity;
  p.scale = 1.0;
  p.horizon = c.horizon;
  p.marks = c.marks;
  p.event_budget = c.event_budget;
  p.validate();

  const auto values = parallel::map_indices(c.paths, c.workers, [&](std::size_t i) {
    try {
      const auto log = hawkes::simulate(p, rng::derive_seed(c.seed, i, kPrelimit));
      std::vector<double> v;
      for (double t : times) v.push_back(log.intensity_at(t));
      return v;
    } catch (const BudgetError& e) {
      rethrow_budget("hawkes-mean", i, e);
    }
  });

  const auto grid = renewal::UniformGrid::covering(c.renewal.step, std::max(c.renewal.horizon, c.horizon));
  const auto phi = renewal::build_phi(c.endogeneity, c.marks.y, grid);
  const auto curve = renewal::solve_mean_intensity(c.base_intensity, phi, c.horizon, c.marks.x.mean());

  Table t{"hawkes_mean.csv", {"T", "n", "dt", "seed", "t", "mean", "se", "oracle", "z"}, {}};
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto s = stats::summarize_sample(times[k], column(values, k));
    const double oracle = curve.at(times[k]);
    const double z = (s.mean - oracle) / s.std_error;
    worst = std::max(worst, std::abs(z));
    auto row = meta(1.0, c.paths, c.renewal.step, c.seed);
    for (double v : {times[k], s.mean, s.std_error, oracle, z}) row.push_back(cell(v));
    t.rows.push_back(std::move(row));
  }
  r.verdicts.push_back(at_most("max_abs_z", worst, c.tolerance("max_abs_z"),
                               "largest |MC mean - renewal mean| / SE over the checkpoints"));
  r.tables.push_back(std::move(t));

  const auto first = hawkes::simulate(p, rng::derive_seed(c.seed, 0, kPrelimit));
  r.tables.push_back(event_table(first));
  r.summary = {{"path0",
                {{"seed", rng::fingerprint(first.seed)},
                 {"events", first.arrivals.size()},
                 {"final_intensity", first.intensity_at(first.horizon())}}}};
  r.seeds.push_back(run_seed("hawkes", c, kPrelimit, c.paths));
  return r;
}

// ---------------------------------------------------------------- bid/ask

ExperimentReport bidask_price(const ExperimentConfig& c) {
  ExperimentReport r;
  const auto grid = hawkes::TimeGrid::covering(c.grid, c.horizon);
  const auto idx = grid_indices(c.checkpoints, c.grid);
  const std::size_t last = idx.back();
  const double t1 = c.checkpoints.back();
  const auto sys = system_limit(c);
  std::array<double, 4> qv_target{};
  for (std::size_t i = 0; i < 4; ++i) qv_target[i] = sys.driver_variances[i] * t1;

  const bool scalar_total = equal_variances(sys);
  std::vector<double> limit_total;
  sde::CirParams total{};
  const std::size_t nl = c.limit_paths();
  if (scalar_total) {
    total = sde::total_intensity_params(sys);
    total.scheme = c.limit.scheme;
    const auto lidx = grid_indices({t1}, total.step);
    limit_total = sorted(column(limit_samples(nl, c.workers, lidx,
                                              [&](std::size_t i) {
                                                return sde::simulate_cir(total, rng::derive_seed(c.seed, i, kLimit));
                                              },
                                              0),
                                0));
    r.seeds.push_back(run_seed("total-intensity limit", c, kLimit, nl));
  }

  struct Sample {
    double price = 0.0;
    double total = 0.0;
    std::array<double, 4> qv{};
  };

  Table t{"bidask_price.csv",
          {"T", "n", "dt", "seed", "t", "price_mean", "price_se", "price_z", "total_mean", "total_variance",
           "limit_mean", "limit_variance", "ks", "qv1", "qv2", "qv3", "qv4", "qv_target1", "qv_target2", "qv_target3",
           "qv_target4"},
          {}};
  double worst_z = 0.0, worst_qv = 0.0;
  std::vector<double> ks;
  json rows = json::array();
  for (double scale : c.scales) {
    auto p = bidask::BidAskParams::near_critical(c.reversion, scale, c.base_bid, c.base_ask, c.horizon, c.streams);
    p.event_budget = c.event_budget;
    p.validate();
    const auto samples = parallel::map_indices(c.paths, c.workers, [&](std::size_t i) {
      try {
        const auto path = bidask::simulate_market(p, rng::derive_seed(c.seed, i, kMarket));
        const auto m = bidask::rescaled_market(path, scale, grid);
        const auto d = bidask::driver_quartet(path, scale, grid);
        Sample s;
        s.price = m.price[last];
        s.total = m.bid[last] + m.ask[last];
        for (std::size_t k = 0; k < 4; ++k) s.qv[k] = d.jump_qv[k][last];
        return s;
      } catch (const BudgetError& e) {
        rethrow_budget("bidask-price at T=" + format_scale(scale), i, e);
      }
    });
    stats::RunningMoments price, tot;
    std::array<stats::RunningMoments, 4> qv;
    std::vector<double> totals;
    for (const auto& s : samples) {
      price.add(s.price);
      tot.add(s.total);
      totals.push_back(s.total);
      for (std::size_t k = 0; k < 4; ++k) qv[k].add(s.qv[k]);
    }
    const double z = price.std_error() > 0.0 ? price.mean() / price.std_error() : 0.0;
    worst_z = std::max(worst_z, std::abs(z));
    for (std::size_t k = 0; k < 4; ++k) worst_qv = std::max(worst_qv, relative_error(qv[k].mean(), qv_target[k]));
    double k_s = kNaN, lm = kNaN, lv = kNaN;
    if (scalar_total) {
      k_s = stats::ks_distance(sorted(totals), limit_total);
      ks.push_back(k_s);
      lm = sde::forced_mean(total.base, total.reversion, total.kernel_scale, t1);
      lv = sde::cir_variance(total.base, total.reversion, total.kernel_scale, total.noise(), t1);
    }
    auto row = meta(scale, c.paths, c.grid, c.seed);
    for (double v : {t1, price.mean(), price.std_error(), z, tot.mean(), tot.variance(), lm, lv, k_s})
      row.push_back(cell(v));
    for (std::size_t k = 0; k < 4; ++k) row.push_back(cell(qv[k].mean()));
    for (std::size_t k = 0; k < 4; ++k) row.push_back(cell(qv_target[k]));
    t.rows.push_back(std::move(row));
    rows.push_back({{"T", scale}, {"price_mean", price.mean()}, {"price_se", price.std_error()}, {"ks", k_s}});

    if (scale == c.scales.front()) {
      const auto path = bidask::simulate_market(p, rng::derive_seed(c.seed, 0, kMarket));
      Table ev{"market_events.csv", {"t", "stream", "x", "y"}, {}};
      for (const auto& a : path.arrivals)
        ev.rows.push_back({cell(a.time), cell(static_cast<std::uint64_t>(a.stream)), cell(a.x), cell(a.y)});
      Table pr{"price_breakpoints.csv", {"t", "P"}, {}};
      for (const auto& b : path.breakpoints) pr.rows.push_back({cell(b.time), cell(b.price)});
      r.tables.push_back(std::move(ev));
      r.tables.push_back(std::move(pr));
    }
  }
  r.verdicts.push_back(at_most("martingale", worst_z, c.tolerance("martingale_z"),
                               "largest |mean rescaled price| / SE over T"));
  if (scalar_total && ks.size() > 1) {
    bool dec = true;
    for (std::size_t i = 1; i < ks.size(); ++i) dec = dec && ks[i] < ks[i - 1];
    r.verdicts.push_back(holds("ks_decreasing", dec, "KS of the total intensity against the scalar limit decreasing in T"));
  }
  r.verdicts.push_back(at_most("qv_error_max", worst_qv, c.tolerance("qv_error_max"),
                               "largest relative error of a driver quadratic variation"));
  r.tables.insert(r.tables.begin(), std::move(t));
  r.summary = {{"rows", rows}};
  r.seeds.insert(r.seeds.begin(), run_seed("market", c, kMarket, c.paths));
  return r;
}

// ---------------------------------------------------------------- limit SDEs

Table path_table(const sde::SdePath& path) {
  Table t{"limit_sde_path.csv", {"t"}, {}};
  for (const auto& n : path.names) t.columns.push_back(n);
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    std::vector<std::string> row{cell(path.times[i])};
    for (const auto& comp : path.components) row.push_back(cell(comp[i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

ExperimentReport limit_scalar(const ExperimentConfig& c) {
  ExperimentReport r;
  auto p = scalar_limit(c);
  p.step = c.grid;
  const auto idx = grid_indices(c.checkpoints, p.step);
  auto run_scheme = [&](sde::Scheme scheme) {
    auto q = p;
    q.scheme = scheme;
    return parallel::map_indices(c.paths, c.workers, [&](std::size_t i) {
      const auto path = sde::simulate_cir(q, rng::derive_seed(c.seed, i, kLimit));
      std::vector<double> v;
      for (std::size_t k : idx) v.push_back(path.components[0][k]);
      v.push_back(static_cast<double>(path.negative_steps));
      v.push_back(static_cast<double>(path.checked_steps));
      return v;
    });
  };
  const auto volterra = run_scheme(sde::Scheme::VolterraEuler);
  const auto markov = run_scheme(sde::Scheme::MarkovFullTruncation);

  Table t{"limit_sde_moments.csv",
          {"T", "n", "dt", "seed", "t", "scheme", "mean", "se", "variance", "closed_mean", "closed_variance"},
          {}};
  double mean_diff = 0.0, var_diff = 0.0, worst_z = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double tk = c.checkpoints[k];
    const double cm = sde::forced_mean(p.base, p.reversion, p.kernel_scale, tk);
    const double cv = sde::cir_variance(p.base, p.reversion, p.kernel_scale, p.noise(), tk);
    const auto sv = stats::summarize_sample(tk, column(volterra, k));
    const auto sm = stats::summarize_sample(tk, column(markov, k));
    mean_diff = std::max(mean_diff, std::abs(sv.mean - sm.mean) / sm.mean);
    var_diff = std::max(var_diff, std::abs(sv.variance - sm.variance) / sm.variance);
    worst_z = std::max(worst_z, std::abs(sv.mean - cm) / sv.std_error);
    for (const auto& [name, s] : {std::pair{"volterra", sv}, std::pair{"markov", sm}}) {
      auto row = meta(1.0, c.paths, p.step, c.seed);
      row.push_back(cell(tk));
      row.push_back(name);
      for (double v : {s.mean, s.std_error, s.variance, cm, cv}) row.push_back(cell(v));
      t.rows.push_back(std::move(row));
    }
  }
  double negative = 0.0, checked = 0.0;
  for (const auto& v : markov) {
    negative += v[idx.size()];
    checked += v[idx.size() + 1];
  }
  r.verdicts.push_back(at_most("mean_difference", mean_diff, c.tolerance("mean_difference"),
                               "largest relative difference of Volterra and Markov means over the checkpoints"));
  r.verdicts.push_back(at_most("variance_difference", var_diff, c.tolerance("variance_difference"),
                               "largest relative difference of Volterra and Markov variances"));
  r.verdicts.push_back(at_most("mean_z", worst_z, c.tolerance("mean_z"),
                               "largest |Volterra mean - closed form| / SE"));
  r.tables.push_back(std::move(t));
  auto first = p;
  first.scheme = c.limit.scheme;
  r.tables.push_back(path_table(sde::simulate_cir(first, rng::derive_seed(c.seed, 0, kLimit))));
  r.summary = {{"negative_fraction_markov", checked > 0 ? negative / checked : 0.0}};
  r.seeds.push_back(run_seed("limit", c, kLimit, c.paths));
  return r;
}

ExperimentReport limit_pm(const ExperimentConfig& c) {
  ExperimentReport r;
  auto p = system_limit(c);
  p.step = c.grid;
  const auto idx = grid_indices(c.checkpoints, p.step);
  const auto values = parallel::map_indices(c.paths, c.workers, [&](std::size_t i) {
    const auto path = sde::simulate_system(p, rng::derive_seed(c.seed, i, kSystem));
    std::vector<double> v;
    for (std::size_t k : idx) {
      v.push_back(path.components[0][k]);
      v.push_back(path.components[1][k]);
    }
    v.push_back(static_cast<double>(path.negative_steps));
    v.push_back(static_cast<double>(path.checked_steps));
    return v;
  });
  Table t{"limit_sde_moments.csv",
          {"T", "n", "dt", "seed", "t", "component", "mean", "se", "variance", "closed_mean"},
          {}};
  double worst_z = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double tk = c.checkpoints[k];
    for (std::size_t side = 0; side < 2; ++side) {
      const double base = side == 0 ? p.base_bid : p.base_ask;
      const double cm = sde::forced_mean(base, p.reversion, p.kernel_scale, tk);
      const auto s = stats::summarize_sample(tk, column(values, 2 * k + side));
      worst_z = std::max(worst_z, std::abs(s.mean - cm) / s.std_error);
      auto row = meta(1.0, c.paths, p.step, c.seed);
      row.push_back(cell(tk));
      row.push_back(side == 0 ? "bid" : "ask");
      for (double v : {s.mean, s.std_error, s.variance, cm}) row.push_back(cell(v));
      t.rows.push_back(std::move(row));
    }
  }
  double negative = 0.0, checked = 0.0;
  for (const auto& v : values) {
    negative += v[2 * idx.size()];
    checked += v[2 * idx.size() + 1];
  }
  const double fraction = checked > 0 ? negative / checked : 0.0;
  r.verdicts.push_back(at_most("mean_z", worst_z, c.tolerance("mean_z"), "largest |mean - forced mean| / SE"));
  r.verdicts.push_back(at_most("negative_fraction", fraction, c.tolerance("negative_fraction"),
                               "fraction of updates below zero before truncation"));
  r.tables.push_back(std::move(t));
  r.tables.push_back(path_table(sde::simulate_system(p, rng::derive_seed(c.seed, 0, kSystem))));
  r.summary = {{"negative_fraction", fraction}};
  r.seeds.push_back(run_seed("system", c, kSystem, c.paths));
  return r;
}

struct HestonSample {
  double price = 0.0;
  double total = 0.0;
  double v = 0.0;
  double z = 0.0;
  double v_qv = 0.0;
};

std::vector<HestonSample> heston_samples(const ExperimentConfig& c, const sde::SystemParams& p) {
  const std::size_t last = static_cast<std::size_t>(std::llround(c.checkpoints.back() / p.step));
  return parallel::map_indices(c.paths, c.workers, [&](std::size_t i) {
    const auto path = sde::simulate_heston_price(p, rng::derive_seed(c.seed, i, kSystem));
    HestonSample s;
    s.total = path.components[2][last];
    s.price = path.components[3][last];
    s.v = path.components[4][last];
    s.z = path.components[5][last];
    const std::vector<std::size_t> at{last};
    s.v_qv = stats::qv_estimate(path.components[4], at)[0];
    return s;
  });
}

ExperimentReport limit_heston(const ExperimentConfig& c) {
  ExperimentReport r;
  auto p = system_limit(c);
  p.step = c.grid;
  const auto samples = heston_samples(c, p);
  const double t1 = c.checkpoints.back();
  stats::RunningMoments price, vqv;
  std::vector<double> v, z;
  for (const auto& s : samples) {
    price.add(s.price);
    vqv.add(s.v_qv);
    v.push_back(s.v);
    z.push_back(s.z);
  }
  const auto& dv = p.driver_variances;
  double slope = 0.0;
  if (equal_variances(p)) slope = 2.0 * dv[0];
  const double mz = price.mean() / price.std_error();
  r.verdicts.push_back(at_most("martingale", std::abs(mz), c.tolerance("martingale_z"), "|mean price| / SE"));
  if (equal_variances(p)) {
    r.verdicts.push_back(at_most("v_qv_slope", relative_error(vqv.mean() / t1, slope), c.tolerance("v_qv_slope"),
                                 "relative error of the slope of [V] against twice the driver variance"));
    const auto corr = stats::corr_estimate(v, z);
    r.verdicts.push_back(at_most("vz_correlation", std::abs(corr.r), c.tolerance("vz_correlation"), "|corr(V, Z)|"));
  }
  Table t{"heston_moments.csv", {"T", "n", "dt", "seed", "t", "price_mean", "price_se", "v_qv_mean", "v_qv_target"}, {}};
  auto row = meta(1.0, c.paths, p.step, c.seed);
  for (double x : {t1, price.mean(), price.std_error(), vqv.mean(), slope * t1}) row.push_back(cell(x));
  t.rows.push_back(std::move(row));
  r.tables.push_back(std::move(t));
  r.tables.push_back(path_table(sde::simulate_heston_price(p, rng::derive_seed(c.seed, 0, kSystem))));
  r.seeds.push_back(run_seed("heston", c, kSystem, c.paths));
  return r;
}

ExperimentReport limit_sde(const ExperimentConfig& c) {
  switch (c.system) {
    case LimitSystem::Scalar:
      return limit_scalar(c);
    case LimitSystem::PlusMinus:
      return limit_pm(c);
    case LimitSystem::Heston:
      return limit_heston(c);
  }
  throw ConfigError("unknown limit system");
}

ExperimentReport heston_correlation(const ExperimentConfig& c) {
  ExperimentReport r;
  auto p = system_limit(c);
  p.step = c.grid;
  const auto samples = heston_samples(c, p);
  std::vector<double> price, total, v, z;
  for (const auto& s : samples) {
    price.push_back(s.price);
    total.push_back(s.total);
    v.push_back(s.v);
    z.push_back(s.z);
  }
  const auto pt = stats::corr_estimate(price, total);
  const auto vz = stats::corr_estimate(v, z);
  const auto& dv = p.driver_variances;
  const double imbalance = dv[0] + dv[1] - dv[2] - dv[3];
  if (equal_variances(p)) {
    r.verdicts.push_back(at_most("vz_correlation", std::abs(vz.r), c.tolerance("vz_correlation"), "|corr(V, Z)|"));
  } else {
    const bool sign_ok = imbalance == 0.0 || pt.r * imbalance > 0.0;
    r.verdicts.push_back(holds("price_intensity_sign", sign_ok,
                               "sign of corr(P, total intensity) follows the buy/sell variance imbalance"));
  }
  Table t{"heston_correlation.csv",
          {"T", "n", "dt", "seed", "t", "corr_price_total", "corr_price_total_se", "corr_v_z", "corr_v_z_se",
           "variance_imbalance"},
          {}};
  auto row = meta(1.0, c.paths, p.step, c.seed);
  for (double x : {c.checkpoints.back(), pt.r, pt.std_error, vz.r, vz.std_error, imbalance}) row.push_back(cell(x));
  t.rows.push_back(std::move(row));
  r.tables.push_back(std::move(t));
  r.summary = {{"corr_price_total", pt.r}, {"corr_v_z", vz.r}};
  r.seeds.push_back(run_seed("heston", c, kSystem, c.paths));
  return r;
}

}  // namespace

// ---------------------------------------------------------------- scalar ensembles

std::vector<ScalarEnsemble> simulate_scalar_ensembles(const ExperimentConfig& c) {
  const auto grid = hawkes::TimeGrid::covering(c.grid, c.horizon);
  const auto idx = grid_indices(c.checkpoints, c.grid);
  std::vector<ScalarEnsemble> out;
  for (double scale : c.scales) {
    auto p = hawkes::HawkesParams::near_critical(c.reversion, scale, c.base_intensity, c.horizon, c.marks);
    p.event_budget = c.event_budget;
    p.validate();
    ScalarEnsemble e;
    e.scale = scale;
    e.samples = parallel::map_indices(c.paths, c.workers, [&](std::size_t i) {
      try {
        const auto log = hawkes::simulate(p, rng::derive_seed(c.seed, i, kPrelimit));
        const auto lam = hawkes::rescaled_intensity(log, scale, grid);
        const auto fl = hawkes::fluctuation(log, scale, grid);
        const auto d = hawkes::driver_paths(log, scale, grid);
        ScalarSample s;
        for (std::size_t k : idx) {
          s.intensity.push_back(lam.values[k]);
          s.fluctuation.push_back(fl.values[k]);
          s.qv.push_back(d.qv_w[k]);
        }
        s.w = d.w[idx.back()];
        s.b = d.b[idx.back()];
        s.events = log.arrivals.size();
        return s;
      } catch (const BudgetError& e) {
        rethrow_budget("T=" + format_scale(scale), i, e);
      }
    });
    out.push_back(std::move(e));
  }
  return out;
}

ExperimentReport intensity_converge_report(const ExperimentConfig& c, const std::vector<ScalarEnsemble>& runs) {
  ExperimentReport r;
  r.experiment = Experiment::IntensityConverge;
  const auto lp = scalar_limit(c);
  const auto lidx = grid_indices(c.checkpoints, lp.step);
  const std::size_t nl = c.limit_paths();
  const auto limit = limit_samples(
      nl, c.workers, lidx, [&](std::size_t i) { return sde::simulate_cir(lp, rng::derive_seed(c.seed, i, kLimit)); },
      0);
  std::vector<std::vector<double>> limit_sorted;
  for (std::size_t k = 0; k < lidx.size(); ++k) limit_sorted.push_back(sorted(column(limit, k)));
  const double qv_rate = mark_noise(c.marks);

  Table t{"intensity_converge.csv",
          {"T", "n", "dt", "seed", "t", "mean", "se", "variance", "limit_mean", "limit_variance", "ks", "mean_error",
           "variance_error", "qv_mean", "qv_error", "events_mean"},
          {}};
  std::map<double, stats::ConvergenceRow> rows;
  for (const auto& run : runs) {
    double events = 0.0;
    for (const auto& s : run.samples) events += static_cast<double>(s.events);
    events /= static_cast<double>(run.samples.size());
    for (std::size_t k = 0; k < c.checkpoints.size(); ++k) {
      const double tk = c.checkpoints[k];
      std::vector<double> lam, qv;
      for (const auto& s : run.samples) {
        lam.push_back(s.intensity[k]);
        qv.push_back(s.qv[k]);
      }
      const auto s = stats::summarize_sample(tk, lam, true);
      const double cm = sde::forced_mean(lp.base, lp.reversion, lp.kernel_scale, tk);
      const double cv = sde::cir_variance(lp.base, lp.reversion, lp.kernel_scale, lp.noise(), tk);
      const double ks = stats::ks_distance(s.sorted, limit_sorted[k]);
      const double me = relative_error(s.mean, cm), ve = relative_error(s.variance, cv);
      const double qm = std::accumulate(qv.begin(), qv.end(), 0.0) / static_cast<double>(qv.size());
      const double qe = relative_error(qm, qv_rate * tk);
      auto row = meta(run.scale, run.samples.size(), c.grid, c.seed);
      for (double v : {tk, s.mean, s.std_error, s.variance, cm, cv, ks, me, ve, qm, qe, events}) row.push_back(cell(v));
      t.rows.push_back(std::move(row));
      if (k + 1 == c.checkpoints.size()) rows[run.scale] = {run.scale, run.samples.size(), ks, me, ve, qe};
    }
  }
  const auto table = stats::build_convergence_table(c.scales, rows);
  Table ct{"convergence_table.csv", {"T", "n", "dt", "seed", "ks", "mean_error", "variance_error", "qv_error"}, {}};
  json jrows = json::array();
  for (const auto& row : table.rows) {
    auto cells = meta(row.scale, row.n, c.grid, c.seed);
    for (double v : {row.ks, row.mean_error, row.variance_error, *row.qv_error}) cells.push_back(cell(v));
    ct.rows.push_back(std::move(cells));
    jrows.push_back({{"T", row.scale},
                     {"n", row.n},
                     {"ks", row.ks},
                     {"mean_error", row.mean_error},
                     {"variance_error", row.variance_error},
                     {"qv_error", *row.qv_error}});
  }
  if (const auto dec = table.ks_decreasing())
    r.verdicts.push_back(holds("ks_decreasing", *dec, "KS distance at the last checkpoint strictly decreasing in T"));
  const auto& final_row = table.rows.back();
  r.verdicts.push_back(at_most("mean_error_final", final_row.mean_error, c.tolerance("mean_error_final"),
                               "relative mean error at the largest T"));
  r.verdicts.push_back(at_most("variance_error_final", final_row.variance_error, c.tolerance("variance_error_final"),
                               "relative variance error at the largest T"));
  r.tables.push_back(std::move(t));
  r.tables.push_back(std::move(ct));
  json flags = json::object();
  auto flag = [](std::optional<bool> f) { return f ? json(*f) : json(nullptr); };
  flags["ks_decreasing"] = flag(table.ks_decreasing());
  flags["mean_error_decreasing"] = flag(table.mean_error_decreasing());
  flags["variance_error_decreasing"] = flag(table.variance_error_decreasing());
  r.summary = {{"convergence_table", jrows}, {"monotone", flags}};
  r.seeds.push_back(run_seed("prelimit", c, kPrelimit, c.paths));
  r.seeds.push_back(run_seed("limit", c, kLimit, nl));
  return r;
}

ExperimentReport fluctuations_report(const ExperimentConfig& c, const std::vector<ScalarEnsemble>& runs) {
  ExperimentReport r;
  r.experiment = Experiment::Fluctuations;
  const auto lp = scalar_limit(c);
  const double t1 = c.checkpoints.back();
  const double rho = sde::fluctuation_correlation(c.marks.y);
  const double oracle = lp.sigma_x * lp.sigma_x * sde::forced_mean_integral(lp.base, lp.reversion, lp.kernel_scale, t1);
  const double qv_target = mark_noise(c.marks) * t1;
  const std::size_t nl = c.limit_paths();
  const auto lidx = grid_indices({t1}, lp.step);
  const auto zlim = sorted(column(limit_samples(nl, c.workers, lidx,
                                                [&](std::size_t i) {
                                                  return sde::simulate_fluctuation_limit(
                                                      lp, rho, rng::derive_seed(c.seed, i, kFluctuationLimit));
                                                },
                                                1),
                                  0));

  Table t{"fluctuations.csv",
          {"T", "n", "dt", "seed", "t", "z_mean", "z_variance", "z_variance_oracle", "z_variance_error", "corr",
           "corr_se", "corr_target", "qv_mean", "qv_target", "qv_error", "ks_z"},
          {}};
  double zerr = 0.0, cerr = 0.0, qerr = 0.0;
  std::vector<double> ks;
  for (const auto& run : runs) {
    std::vector<double> z, w, b;
    stats::RunningMoments qv;
    for (const auto& s : run.samples) {
      z.push_back(s.fluctuation.back());
      w.push_back(s.w);
      b.push_back(s.b);
      qv.add(s.qv.back());
    }
    const auto sz = stats::summarize_sample(t1, z, true);
    const auto corr = stats::corr_estimate(w, b);
    zerr = relative_error(sz.variance, oracle);
    cerr = std::abs(corr.r - rho);
    qerr = relative_error(qv.mean(), qv_target);
    ks.push_back(stats::ks_distance(sz.sorted, zlim));
    auto row = meta(run.scale, run.samples.size(), c.grid, c.seed);
    for (double v : {t1, sz.mean, sz.variance, oracle, zerr, corr.r, corr.std_error, rho, qv.mean(), qv_target, qerr,
                     ks.back()})
      row.push_back(cell(v));
    t.rows.push_back(std::move(row));
  }
  r.verdicts.push_back(at_most("z_variance_error_final", zerr, c.tolerance("z_variance_error_final"),
                               "relative error of Var(Z_1) against the isometry oracle at the largest T"));
  r.verdicts.push_back(at_most("correlation_final", cerr, c.tolerance("correlation_final"),
                               "|corr(W_1, B_1) - E(Y)/sqrt(E(Y^2))| at the largest T"));
  r.verdicts.push_back(at_most("qv_error_final", qerr, c.tolerance("qv_error_final"),
                               "relative error of [W]_1 against E(X^2)E(Y^2) at the largest T"));
  r.tables.push_back(std::move(t));
  r.summary = {{"z_variance_oracle", oracle}, {"correlation_target", rho}, {"qv_target", qv_target}, {"ks_z", ks}};
  r.seeds.push_back(run_seed("prelimit", c, kPrelimit, c.paths));
  r.seeds.push_back(run_seed("fluctuation limit", c, kFluctuationLimit, nl));
  return r;
}

// ---------------------------------------------------------------- dispatch

ExperimentReport run(const ExperimentConfig& c) {
  c.validate();
  ExperimentReport r;
  switch (c.experiment) {
    case Experiment::RenewalCheck:
      r = renewal_check(c);
      break;
    case Experiment::HawkesMean:
      r = hawkes_mean(c);
      break;
    case Experiment::IntensityConverge:
      r = intensity_converge_report(c, simulate_scalar_ensembles(c));
      break;
    case Experiment::Fluctuations:
      r = fluctuations_report(c, simulate_scalar_ensembles(c));
      break;
    case Experiment::BidaskPrice:
      r = bidask_price(c);
      break;
    case Experiment::LimitSde:
      r = limit_sde(c);
      break;
    case Experiment::HestonCorrelation:
      r = heston_correlation(c);
      break;
  }
  r.experiment = c.experiment;
  return r;
}

bool ExperimentReport::pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

const Verdict& ExperimentReport::verdict(const std::string& name) const {
  for (const auto& v : verdicts)
    if (v.name == name) return v;
  throw ConfigError("report has no verdict '" + name + "'");
}

std::string cell(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string cell(std::uint64_t v) { return std::to_string(v); }

}  // namespace hawkeslab::experiments

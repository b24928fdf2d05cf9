// One line per acceptance criterion; exits nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hawkeslab/experiments.hpp"
#include "hawkeslab/sde.hpp"

namespace ex = hawkeslab::experiments;
namespace sde = hawkeslab::sde;
namespace rng = hawkeslab::rng;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = HAWKESLAB_CONFIG_DIR;
const fs::path kOutDir = HAWKESLAB_ACCEPTANCE_OUT;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ex::ExperimentConfig config(const std::string& name, const std::string& out) {
  auto c = ex::load_config(kConfigDir / (name + ".json"));
  c.output = (kOutDir / out).string();
  return c;
}

ex::ExperimentReport run_and_write(const ex::ExperimentConfig& c) {
  const std::string started = ex::utc_timestamp();
  auto r = ex::run(c);
  ex::write_artifacts(c, r, started);
  return r;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string verdict_text(const ex::Verdict& v) {
  std::ostringstream os;
  os << v.name << '=' << v.value << (v.pass ? " ok" : " BREACH") << " (limit " << v.threshold << ')';
  return os.str();
}

Outcome report_outcome(const ex::ExperimentReport& r, const std::vector<std::string>& names, double seconds,
                       double budget) {
  Outcome o{true, {}};
  for (const auto& n : names) {
    const auto& v = r.verdict(n);
    o.pass = o.pass && v.pass;
    o.detail += verdict_text(v) + "; ";
  }
  const bool on_time = seconds < budget;
  o.pass = o.pass && on_time;
  o.detail += fmt("runtime %.1f s", seconds) + fmt(" (limit %.0f s)", budget);
  return o;
}

Outcome renewal_identities() {
  const Clock clock;
  const auto r = run_and_write(config("renewal_check", "c1_renewal_identities"));
  return report_outcome(r, {"psi_integral", "rho_integral", "rho_non_increasing"}, clock.seconds(), 5.0);
}

Outcome renewal_convergence() {
  const Clock clock;
  const auto r = run_and_write(config("renewal_convergence", "c2_renewal_convergence"));
  auto o = report_outcome(r, {"sup_distance_decreasing", "sup_distance_final"}, clock.seconds(), 10.0);
  std::string rows;
  for (const auto& row : r.summary["rows"]) rows += fmt(" T=%g:", row["T"].get<double>()) + fmt("%.3g", row["sup_distance"].get<double>());
  o.detail += ";" + rows;
  return o;
}

Outcome hawkes_mean() {
  const Clock clock;
  const auto r = run_and_write(config("hawkes_mean", "c3_hawkes_mean"));
  return report_outcome(r, {"max_abs_z"}, clock.seconds(), 120.0);
}

struct ScalarRuns {
  ex::ExperimentConfig config;
  std::vector<ex::ScalarEnsemble> runs;
  double seconds = 0.0;
};

const ScalarRuns& scalar_runs() {
  static const ScalarRuns cached = [] {
    const Clock clock;
    ScalarRuns s;
    s.config = config("intensity_converge", "c4_intensity_converge");
    s.config.validate();
    s.runs = ex::simulate_scalar_ensembles(s.config);
    s.seconds = clock.seconds();
    return s;
  }();
  return cached;
}

Outcome intensity_converge() {
  const auto& s = scalar_runs();
  const Clock clock;
  const std::string started = ex::utc_timestamp();
  const auto r = ex::intensity_converge_report(s.config, s.runs);
  ex::write_artifacts(s.config, r, started);
  auto o = report_outcome(r, {"ks_decreasing", "mean_error_final", "variance_error_final"}, s.seconds + clock.seconds(),
                          600.0);
  std::string ks;
  for (const auto& row : r.summary["convergence_table"]) ks += fmt(" T=%g:", row["T"].get<double>()) + fmt("%.4f", row["ks"].get<double>());
  o.detail += "; KS" + ks;
  return o;
}

Outcome fluctuations(bool qv_only) {
  const auto& s = scalar_runs();
  const Clock clock;
  auto c = config("fluctuations", qv_only ? "c6_driver_qv" : "c5_fluctuations");
  c.validate();
  const std::string started = ex::utc_timestamp();
  const auto r = ex::fluctuations_report(c, s.runs);
  ex::write_artifacts(c, r, started);
  if (qv_only) return report_outcome(r, {"qv_error_final"}, clock.seconds(), 600.0);
  return report_outcome(r, {"z_variance_error_final", "correlation_final"}, s.seconds + clock.seconds(), 300.0);
}

Outcome bidask_price() {
  const Clock clock;
  const auto r = run_and_write(config("bidask_price", "c7_bidask_price"));
  auto o = report_outcome(r, {"martingale", "ks_decreasing", "qv_error_max"}, clock.seconds(), 900.0);
  std::string ks;
  for (const auto& row : r.summary["rows"]) ks += fmt(" T=%g:", row["T"].get<double>()) + fmt("%.4f", row["ks"].get<double>());
  o.detail += "; KS" + ks;
  return o;
}

Outcome volterra_markov() {
  const Clock clock;
  const auto r = run_and_write(config("limit_sde_scalar", "c8_volterra_markov"));
  return report_outcome(r, {"mean_difference", "variance_difference"}, clock.seconds(), 120.0);
}

double sup_error(const std::vector<double>& values, const std::vector<double>& times,
                 const std::function<double(double)>& exact) {
  double e = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) e = std::max(e, std::abs(values[i] - exact(times[i])));
  return e;
}

Outcome noiseless() {
  const Clock clock;
  const auto seed = rng::derive_seed(9, 0, 0);
  double worst = 0.0;
  std::string detail;
  auto track = [&](const std::string& name, double e) {
    worst = std::max(worst, e);
    detail += name + fmt("=%.2e ", e);
  };

  sde::CirParams p;
  p.reversion = 1.3;
  p.kernel_scale = 0.8;
  p.base = 0.7;
  p.sigma_x = 0.0;
  p.sigma_y = 1.4;
  p.step = 1e-3;
  p.horizon = 2.0;
  auto cir = [&](double t) { return sde::forced_mean(p.base, p.reversion, p.kernel_scale, t); };
  const auto v = sde::simulate_cir_volterra(p, seed);
  track("volterra", sup_error(v.components[0], v.times, cir));
  const auto m = sde::simulate_cir_markov(p, seed);
  track("markov", sup_error(m.components[0], m.times, cir));
  const auto f = sde::simulate_fluctuation_limit(p, 0.5, seed);
  track("fluctuation", std::max(sup_error(f.components[0], f.times, cir),
                                sup_error(f.components[1], f.times, [](double) { return 0.0; })));

  sde::SystemParams s;
  s.reversion = 1.3;
  s.kernel_scale = 0.8;
  s.base_bid = 0.4;
  s.base_ask = 0.9;
  s.driver_variances = {0.0, 0.0, 0.0, 0.0};
  s.step = 1e-3;
  s.horizon = 2.0;
  auto bid = [&](double t) { return sde::forced_mean(s.base_bid, s.reversion, s.kernel_scale, t); };
  auto ask = [&](double t) { return sde::forced_mean(s.base_ask, s.reversion, s.kernel_scale, t); };
  for (auto scheme : {sde::Scheme::VolterraEuler, sde::Scheme::MarkovFullTruncation}) {
    s.scheme = scheme;
    const std::string tag = scheme == sde::Scheme::VolterraEuler ? "volterra" : "markov";
    const auto sys = sde::simulate_system(s, seed);
    track("system_" + tag, std::max(sup_error(sys.components[0], sys.times, bid),
                                    sup_error(sys.components[1], sys.times, ask)));
    const auto h = sde::simulate_heston_price(s, seed);
    track("heston_" + tag,
          std::max({sup_error(h.component("total"), h.times, [&](double t) { return bid(t) + ask(t); }),
                    sup_error(h.component("price"), h.times, [](double) { return 0.0; }),
                    sup_error(h.component("V"), h.times, [](double) { return 0.0; })}));
  }
  const double seconds = clock.seconds();
  return {worst < 1e-3 && seconds < 5.0, detail + fmt("sup=%.2e (limit 1e-3); ", worst) + fmt("runtime %.2f s", seconds)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  struct Case {
    std::string config;
    std::size_t paths;
    std::vector<double> scales;
  };
  const std::vector<Case> cases = {{"hawkes_mean", 2000, {}},
                                   {"intensity_converge", 300, {25, 50}},
                                   {"bidask_price", 200, {50, 100}},
                                   {"limit_sde_heston", 500, {}}};
  std::size_t files = 0;
  std::vector<std::string> mismatches;
  for (const auto& k : cases) {
    std::vector<fs::path> dirs;
    for (unsigned workers : {1u, 3u}) {
      auto c = config(k.config, "c10_determinism/" + k.config + "_w" + std::to_string(workers));
      c.paths = k.paths;
      c.workers = workers;
      if (!k.scales.empty()) c.scales = k.scales;
      if (c.limit.paths) c.limit.paths = 4 * k.paths;
      run_and_write(c);
      dirs.push_back(c.output);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      if (read_file(entry.path()) != read_file(dirs[1] / entry.path().filename()))
        mismatches.push_back(k.config + "/" + entry.path().filename().string());
    }
  }
  std::string detail = std::to_string(files) + " CSV files compared between 1 and 3 workers";
  for (const auto& m : mismatches) detail += "; differs: " + m;
  return {mismatches.empty() && files > 0, detail};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  fs::create_directories(kOutDir);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"renewal identities", renewal_identities},
      {"renewal convergence", renewal_convergence},
      {"simulated mean vs renewal mean", hawkes_mean},
      {"rescaled intensity convergence", intensity_converge},
      {"fluctuation limit", [] { return fluctuations(false); }},
      {"driver quadratic variation", [] { return fluctuations(true); }},
      {"bid/ask price and total intensity", bidask_price},
      {"Volterra vs Markov schemes", volterra_markov},
      {"noiseless reductions", noiseless},
      {"determinism across worker counts", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2zu %s: %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

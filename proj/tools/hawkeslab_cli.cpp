#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "hawkeslab/errors.hpp"
#include "hawkeslab/experiments.hpp"

namespace ex = hawkeslab::experiments;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  std::optional<double> grid;
  std::optional<std::string> system;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  sub->add_option("--paths", o.paths, "Monte Carlo paths per run")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--grid", o.grid, "time grid step")->check(CLI::PositiveNumber);
}

ex::ExperimentConfig resolve(ex::Experiment e, const Overrides& o) {
  ex::ExperimentConfig c = o.config.empty() ? ex::default_config(e) : ex::load_config(o.config);
  if (c.experiment != e)
    throw hawkeslab::ConfigError("config describes '" + ex::to_string(c.experiment) + "' but the subcommand is '" +
                                 ex::to_string(e) + "'");
  if (o.paths) c.paths = *o.paths;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output = *o.out;
  if (o.workers) c.workers = *o.workers;
  if (o.grid) c.grid = *o.grid;
  if (o.system) c.system = ex::parse_system(*o.system);
  return c;
}

int execute(const ex::ExperimentConfig& c) {
  const std::string started = ex::utc_timestamp();
  const ex::ExperimentReport report = ex::run(c);
  ex::write_artifacts(c, report, started);
  for (const auto& v : report.verdicts)
    std::printf("%-4s %-28s value=%.6g threshold=%.6g  %s\n", v.pass ? "PASS" : "FAIL", v.name.c_str(), v.value,
                v.threshold, v.detail.c_str());
  std::printf("%s: %s (artifacts in %s)\n", ex::to_string(c.experiment).c_str(), report.pass() ? "pass" : "FAIL",
              c.output.c_str());
  return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nearly unstable Hawkes experiments"};
  app.require_subcommand(1);
  Overrides o;
  std::vector<std::pair<CLI::App*, ex::Experiment>> subs;
  for (const char* name : {"renewal-check", "hawkes-mean", "intensity-converge", "fluctuations", "bidask-price",
                           "limit-sde", "heston-correlation"}) {
    const auto e = ex::parse_experiment(name);
    CLI::App* sub = app.add_subcommand(name, "run the " + std::string(name) + " experiment");
    if (e == ex::Experiment::BidaskPrice) sub->alias("bidask");
    add_common(sub, o);
    if (e == ex::Experiment::LimitSde)
      sub->add_option("--system", o.system, "limit system")->check(CLI::IsMember({"scalar", "pm", "heston"}));
    subs.emplace_back(sub, e);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [sub, e] : subs)
      if (sub->parsed()) return execute(resolve(e, o));
  } catch (const hawkeslab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const hawkeslab::ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

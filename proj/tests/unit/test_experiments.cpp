#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hawkeslab/errors.hpp"
#include "hawkeslab/experiments.hpp"

using namespace hawkeslab;
namespace ex = hawkeslab::experiments;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigDir = HAWKESLAB_CONFIG_DIR;

std::string csv_bytes(const ex::ExperimentReport& r) {
  std::ostringstream os;
  for (const auto& t : r.tables) {
    os << t.file << '\n';
    for (const auto& row : t.rows) {
      for (const auto& c : row) os << c << ',';
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace

TEST_CASE("experiment names parse and print") {
  CHECK(ex::parse_experiment("intensity-converge") == ex::Experiment::IntensityConverge);
  CHECK(ex::parse_experiment("bidask") == ex::Experiment::BidaskPrice);
  CHECK(ex::to_string(ex::Experiment::LimitSde) == "limit-sde");
  CHECK(ex::parse_system("pm") == ex::LimitSystem::PlusMinus);
  CHECK_THROWS_AS(ex::parse_experiment("nope"), ConfigError);
}

TEST_CASE("config parsing keeps defaults and rejects unknown keys") {
  const auto c = ex::parse_config(json{{"experiment", "intensity-converge"}, {"paths", 123}});
  CHECK(c.paths == 123);
  CHECK(c.scales == std::vector<double>{25, 50, 100, 200});
  CHECK_THROWS_AS(ex::parse_config(json{{"experiment", "hawkes-mean"}, {"pathz", 3}}), ConfigError);
  CHECK_THROWS_AS(ex::parse_config(json{{"experiment", "hawkes-mean"}, {"paths", "many"}}), ConfigError);
  CHECK_THROWS_AS(ex::parse_config(json{{"experiment", "hawkes-mean"}, {"tolerances", {{"bogus", 1.0}}}}),
                  ConfigError);
  CHECK_THROWS_AS(ex::parse_mark(json{{"kind", "exponential"}, {"rate", 1.0}, {"shape", 2.0}}), ConfigError);
  CHECK_THROWS_AS(ex::parse_mark(json{{"kind", "cauchy"}}), ConfigError);
}

TEST_CASE("shipped configs load and validate") {
  for (const auto& entry : std::filesystem::directory_iterator(kConfigDir)) {
    CAPTURE(entry.path().string());
    const auto c = ex::load_config(entry.path());
    CHECK_NOTHROW(c.validate());
    const auto back = ex::parse_config(ex::to_json(c));
    CHECK(ex::config_hash(back) == ex::config_hash(c));
  }
}

TEST_CASE("validation catches inconsistent grids and unstable marks") {
  auto c = ex::default_config(ex::Experiment::IntensityConverge);
  c.grid = 0.3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ex::default_config(ex::Experiment::IntensityConverge);
  c.checkpoints = {0.5, 0.25};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ex::default_config(ex::Experiment::IntensityConverge);
  c.scales = {100, 50};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ex::default_config(ex::Experiment::IntensityConverge);
  c.marks.x = marks::MarkDistribution::exponential(0.5);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.waive_validation = true;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("mark JSON round trip") {
  for (const auto& m : {marks::MarkDistribution::deterministic(1.5), marks::MarkDistribution::exponential(2.0),
                        marks::MarkDistribution::gamma(0.5, 0.5), marks::MarkDistribution::uniform(0.0, 2.0),
                        marks::MarkDistribution::pareto_tail(3.5, 1.0)})
    CHECK(ex::parse_mark(ex::to_json(m)) == m);
}

TEST_CASE("config hash ignores workers and output") {
  auto a = ex::default_config(ex::Experiment::HawkesMean);
  auto b = a;
  b.workers = 7;
  b.output = "elsewhere";
  CHECK(ex::config_hash(a) == ex::config_hash(b));
  b.seed = a.seed + 1;
  CHECK(ex::config_hash(a) != ex::config_hash(b));
}

TEST_CASE("cells keep full precision") {
  CHECK(ex::cell(0.1) == "0.10000000000000001");
  CHECK(ex::cell(std::uint64_t{42}) == "42");
  CHECK(ex::cell(std::nan("")) == "nan");
}

TEST_CASE("results do not depend on the worker count") {
  auto c = ex::default_config(ex::Experiment::IntensityConverge);
  c.paths = 60;
  c.scales = {25, 50};
  c.limit.paths = 200;
  ex::ExperimentReport first;
  for (unsigned workers : {1u, 3u}) {
    c.workers = workers;
    const auto r = ex::run(c);
    if (workers == 1)
      first = r;
    else
      CHECK(csv_bytes(r) == csv_bytes(first));
  }
  auto h = ex::default_config(ex::Experiment::HawkesMean);
  h.paths = 100;
  h.workers = 1;
  const auto a = ex::run(h);
  h.workers = 4;
  CHECK(csv_bytes(ex::run(h)) == csv_bytes(a));
}

TEST_CASE("budget errors name the failing path") {
  auto c = ex::default_config(ex::Experiment::HawkesMean);
  c.paths = 5;
  c.event_budget = 3;
  try {
    ex::run(c);
    FAIL("expected a budget error");
  } catch (const BudgetError& e) {
    CHECK(std::string(e.what()).find("path 0") != std::string::npos);
  }
}

TEST_CASE("artifacts are written with a manifest") {
  auto c = ex::default_config(ex::Experiment::RenewalCheck);
  c.output = (std::filesystem::temp_directory_path() / "hawkeslab_unit_artifacts").string();
  std::filesystem::remove_all(c.output);
  const auto r = ex::run(c);
  const auto m = ex::write_artifacts(c, r, ex::utc_timestamp());
  CHECK(m.config_hash == ex::config_hash(c));
  CHECK(std::filesystem::exists(std::filesystem::path(c.output) / "manifest.json"));
  CHECK(std::filesystem::exists(std::filesystem::path(c.output) / "renewal_table.csv"));
  std::ifstream in(std::filesystem::path(c.output) / "summary.json");
  const auto summary = json::parse(in);
  CHECK(summary["experiment"] == "renewal-check");
}

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hawkeslab/marks.hpp"
#include "hawkeslab/sde.hpp"
#include "hawkeslab/stats.hpp"

namespace hawkeslab::experiments {

enum class Experiment {
  RenewalCheck,
  HawkesMean,
  IntensityConverge,
  Fluctuations,
  BidaskPrice,
  LimitSde,
  HestonCorrelation,
};

enum class LimitSystem { Scalar, PlusMinus, Heston };

Experiment parse_experiment(const std::string& name);
std::string to_string(Experiment e);
LimitSystem parse_system(const std::string& name);
std::string to_string(LimitSystem s);

struct RenewalGrid {
  double step = 1e-3;       // dz for the fixed-a identities
  double horizon = 60.0;    // Z_max for the fixed-a identities
  double window = 8.0;      // rescaled window z/T for the convergence study
  std::size_t cells = 40000;
};

struct LimitConfig {
  std::size_t paths = 0;  // 0: same as the pre-limit path count
  double step = 1e-3;
  sde::Scheme scheme = sde::Scheme::MarkovFullTruncation;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::RenewalCheck;
  LimitSystem system = LimitSystem::Scalar;
  std::uint64_t seed = 1;
  std::size_t paths = 2000;
  unsigned workers = 1;
  std::string output = "out";
  std::vector<double> scales;
  double reversion = 1.0;
  double endogeneity = 0.9;
  double base_intensity = 1.0;
  double base_bid = 0.5;
  double base_ask = 0.5;
  double horizon = 1.0;
  double grid = 0.01;
  std::vector<double> checkpoints;
  marks::MarkPairConfig marks;
  std::array<marks::MarkPairConfig, 4> streams;
  RenewalGrid renewal;
  LimitConfig limit;
  std::size_t event_budget = 10'000'000;
  bool waive_validation = false;
  std::map<std::string, double> tolerances;

  // Throws ConfigError on any violated invariant.
  void validate() const;
  double tolerance(const std::string& name) const;
  std::size_t limit_paths() const { return limit.paths ? limit.paths : paths; }
};

ExperimentConfig default_config(Experiment e);

// Missing keys keep the experiment's defaults; unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& file);
nlohmann::json to_json(const ExperimentConfig& c);
marks::MarkDistribution parse_mark(const nlohmann::json& j);
nlohmann::json to_json(const marks::MarkDistribution& d);

// 64-bit FNV-1a of the canonical config dump.
std::uint64_t config_hash(const ExperimentConfig& c);

struct Verdict {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

// Cells are preformatted: floats with 17 significant digits.
struct Table {
  std::string file;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::string cell(double v);
std::string cell(std::uint64_t v);

struct RunSeed {
  std::string label;
  std::uint64_t master = 0;
  std::uint32_t stream = 0;
  std::size_t paths = 0;
  std::uint64_t first_fingerprint = 0;
};

struct ExperimentReport {
  Experiment experiment = Experiment::RenewalCheck;
  std::vector<Verdict> verdicts;
  std::vector<Table> tables;
  std::vector<RunSeed> seeds;
  nlohmann::json summary = nlohmann::json::object();

  bool pass() const;
  const Verdict& verdict(const std::string& name) const;
};

ExperimentReport run(const ExperimentConfig& config);

// Per-T ensembles of the single-type process, shared by intensity-converge
// and fluctuations.
struct ScalarSample {
  std::vector<double> intensity;    // lambda~ at each checkpoint
  std::vector<double> fluctuation;  // Z at each checkpoint
  std::vector<double> qv;           // [W] at each checkpoint
  double w = 0.0;                   // W at the last checkpoint
  double b = 0.0;                   // B at the last checkpoint
  std::size_t events = 0;
};

struct ScalarEnsemble {
  double scale = 0.0;
  std::vector<ScalarSample> samples;
};

std::vector<ScalarEnsemble> simulate_scalar_ensembles(const ExperimentConfig& config);
ExperimentReport intensity_converge_report(const ExperimentConfig& config, const std::vector<ScalarEnsemble>& runs);
ExperimentReport fluctuations_report(const ExperimentConfig& config, const std::vector<ScalarEnsemble>& runs);

struct RunManifest {
  std::uint64_t config_hash = 0;
  std::string version;
  std::string started;
  std::string finished;
  std::vector<RunSeed> seeds;
  std::vector<std::string> files;
};

// Writes the report tables as CSV plus summary.json and manifest.json.
RunManifest write_artifacts(const ExperimentConfig& config, const ExperimentReport& report, const std::string& started);

std::string utc_timestamp();
extern const char* const kVersion;

}  // namespace hawkeslab::experiments

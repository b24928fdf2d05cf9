#include <chrono>
#include <ctime>
#include <fstream>

#include "hawkeslab/errors.hpp"
#include "hawkeslab/experiments.hpp"

#ifndef HAWKESLAB_VERSION
#define HAWKESLAB_VERSION "0.0.0"
#endif

namespace hawkeslab::experiments {

using nlohmann::json;

const char* const kVersion = HAWKESLAB_VERSION;

namespace {

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << text;
}

std::string csv(const Table& t) {
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(t.columns);
  for (const auto& row : t.rows) line(row);
  return s;
}

json verdicts_json(const ExperimentReport& r) {
  json out = json::array();
  for (const auto& v : r.verdicts)
    out.push_back({{"name", v.name}, {"value", v.value}, {"threshold", v.threshold}, {"pass", v.pass}, {"detail", v.detail}});
  return out;
}

std::string hex(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest write_artifacts(const ExperimentConfig& config, const ExperimentReport& report, const std::string& started) {
  const std::filesystem::path dir(config.output);
  std::filesystem::create_directories(dir);
  RunManifest m;
  m.config_hash = config_hash(config);
  m.version = kVersion;
  m.started = started;
  m.seeds = report.seeds;
  for (const auto& t : report.tables) {
    write_text(dir / t.file, csv(t));
    m.files.push_back(t.file);
  }
  const json summary = {{"experiment", to_string(report.experiment)},
                        {"pass", report.pass()},
                        {"verdicts", verdicts_json(report)},
                        {"results", report.summary},
                        {"config", to_json(config)}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  m.files.push_back("summary.json");
  m.finished = utc_timestamp();

  json seeds = json::array();
  for (const auto& s : m.seeds)
    seeds.push_back({{"label", s.label},
                     {"master", s.master},
                     {"stream", s.stream},
                     {"paths", s.paths},
                     {"first_path_fingerprint", hex(s.first_fingerprint)}});
  json files = m.files;
  files.push_back("manifest.json");
  const json manifest = {{"config_hash", hex(m.config_hash)},
                         {"version", m.version},
                         {"started", m.started},
                         {"finished", m.finished},
                         {"seeds", seeds},
                         {"files", files}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  m.files.push_back("manifest.json");
  return m;
}

}  // namespace hawkeslab::experiments

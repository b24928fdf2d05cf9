#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "hawkeslab/errors.hpp"
#include "hawkeslab/experiments.hpp"

namespace hawkeslab::experiments {

using nlohmann::json;

namespace {

const std::vector<std::pair<std::string, Experiment>> kExperimentNames = {
    {"renewal-check", Experiment::RenewalCheck},
    {"hawkes-mean", Experiment::HawkesMean},
    {"intensity-converge", Experiment::IntensityConverge},
    {"fluctuations", Experiment::Fluctuations},
    {"bidask-price", Experiment::BidaskPrice},
    {"limit-sde", Experiment::LimitSde},
    {"heston-correlation", Experiment::HestonCorrelation},
};

std::map<std::string, double> default_tolerances(Experiment e) {
  switch (e) {
    case Experiment::RenewalCheck:
      return {{"psi_integral", 5e-3}, {"rho_integral", 1e-3}, {"sup_distance_final", 0.02}};
    case Experiment::HawkesMean:
      return {{"max_abs_z", 3.0}};
    case Experiment::IntensityConverge:
      return {{"mean_error_final", 0.05}, {"variance_error_final", 0.15}};
    case Experiment::Fluctuations:
      return {{"z_variance_error_final", 0.10}, {"correlation_final", 0.05}, {"qv_error_final", 0.10}};
    case Experiment::BidaskPrice:
      return {{"martingale_z", 3.0}, {"qv_error_max", 0.10}};
    case Experiment::LimitSde:
      return {{"mean_difference", 0.01}, {"variance_difference", 0.05}, {"mean_z", 3.0},
              {"negative_fraction", 0.01}, {"martingale_z", 3.0}, {"v_qv_slope", 0.05},
              {"vz_correlation", 0.05}};
    case Experiment::HestonCorrelation:
      return {{"vz_correlation", 0.05}};
  }
  return {};
}

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

template <class T>
T read(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    fail("config key '" + key + "': " + e.what());
  }
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) fail("config key '" + key + "' must be a number");
  return j.get<double>();
}

std::size_t count(const json& j, const std::string& key) {
  const bool ok = j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
  if (!ok) fail("config key '" + key + "' must be a nonnegative integer");
  return j.get<std::size_t>();
}

using Handler = std::function<void(const json&)>;

void dispatch(const json& j, const std::string& where, const std::map<std::string, Handler>& handlers) {
  if (!j.is_object()) fail("'" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    auto it = handlers.find(key);
    if (it == handlers.end()) fail("unknown key '" + key + "' in " + where);
    it->second(value);
  }
}

marks::MarkPairConfig parse_pair(const json& j, const std::string& where) {
  marks::MarkPairConfig pair;
  bool has_x = false, has_y = false;
  dispatch(j, where,
           {{"x",
             [&](const json& v) {
               pair.x = parse_mark(v);
               has_x = true;
             }},
            {"y", [&](const json& v) {
               pair.y = parse_mark(v);
               has_y = true;
             }}});
  if (!has_x || !has_y) fail("'" + where + "' needs both x and y");
  return pair;
}

json pair_json(const marks::MarkPairConfig& p) { return {{"x", to_json(p.x)}, {"y", to_json(p.y)}}; }

}  // namespace

Experiment parse_experiment(const std::string& name) {
  if (name == "bidask") return Experiment::BidaskPrice;
  for (const auto& [n, e] : kExperimentNames)
    if (n == name) return e;
  fail("unknown experiment '" + name + "'");
}

std::string to_string(Experiment e) {
  for (const auto& [n, x] : kExperimentNames)
    if (x == e) return n;
  return "unknown";
}

LimitSystem parse_system(const std::string& name) {
  if (name == "scalar") return LimitSystem::Scalar;
  if (name == "pm") return LimitSystem::PlusMinus;
  if (name == "heston") return LimitSystem::Heston;
  fail("unknown limit system '" + name + "' (expected scalar, pm or heston)");
}

std::string to_string(LimitSystem s) {
  switch (s) {
    case LimitSystem::Scalar:
      return "scalar";
    case LimitSystem::PlusMinus:
      return "pm";
    case LimitSystem::Heston:
      return "heston";
  }
  return "unknown";
}

marks::MarkDistribution parse_mark(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    fail("a distribution must be an object with a string 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  std::map<std::string, double> p;
  for (const auto& [key, value] : j.items())
    if (key != "kind") p[key] = number(value, kind + "." + key);
  auto take = [&](const std::string& key) {
    auto it = p.find(key);
    if (it == p.end()) fail("distribution '" + kind + "' needs '" + key + "'");
    const double v = it->second;
    p.erase(it);
    return v;
  };
  try {
    marks::MarkDistribution d;
    if (kind == "deterministic") {
      d = marks::MarkDistribution::deterministic(take("value"));
    } else if (kind == "exponential") {
      d = marks::MarkDistribution::exponential(take("rate"));
    } else if (kind == "gamma") {
      const double shape = take("shape");
      d = marks::MarkDistribution::gamma(shape, take("rate"));
    } else if (kind == "uniform") {
      const double lo = take("lo");
      d = marks::MarkDistribution::uniform(lo, take("hi"));
    } else if (kind == "pareto_tail") {
      const double index = take("index");
      d = marks::MarkDistribution::pareto_tail(index, take("scale"));
    } else {
      fail("unknown distribution kind '" + kind + "'");
    }
    if (!p.empty()) fail("unknown parameter '" + p.begin()->first + "' for distribution '" + kind + "'");
    return d;
  } catch (const ParameterError& e) {
    fail(std::string("invalid distribution: ") + e.what());
  }
}

json to_json(const marks::MarkDistribution& d) {
  return std::visit(
      [](const auto& law) -> json {
        using L = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<L, marks::Deterministic>) return {{"kind", "deterministic"}, {"value", law.value}};
        if constexpr (std::is_same_v<L, marks::Exponential>) return {{"kind", "exponential"}, {"rate", law.rate}};
        if constexpr (std::is_same_v<L, marks::Gamma>)
          return {{"kind", "gamma"}, {"shape", law.shape}, {"rate", law.rate}};
        if constexpr (std::is_same_v<L, marks::Uniform>) return {{"kind", "uniform"}, {"lo", law.lo}, {"hi", law.hi}};
        if constexpr (std::is_same_v<L, marks::ParetoTail>)
          return {{"kind", "pareto_tail"}, {"index", law.index}, {"scale", law.scale}};
      },
      d.law());
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  c.tolerances = default_tolerances(e);
  c.marks = {marks::MarkDistribution::exponential(1.0), marks::MarkDistribution::exponential(1.0)};
  const marks::MarkPairConfig half{marks::MarkDistribution::exponential(2.0), marks::MarkDistribution::exponential(1.0)};
  c.streams = {half, half, half, half};
  switch (e) {
    case Experiment::RenewalCheck:
      break;
    case Experiment::HawkesMean:
      c.paths = 10000;
      c.horizon = 5.0;
      c.grid = 0.5;
      break;
    case Experiment::IntensityConverge:
    case Experiment::Fluctuations:
      c.scales = {25, 50, 100, 200};
      c.checkpoints = {0.25, 0.5, 1.0};
      break;
    case Experiment::BidaskPrice:
      c.scales = {50, 100, 200};
      c.checkpoints = {0.25, 0.5, 1.0};
      break;
    case Experiment::LimitSde:
    case Experiment::HestonCorrelation:
      c.paths = 10000;
      c.grid = 1e-3;
      c.checkpoints = {0.25, 0.5, 1.0};
      break;
  }
  return c;
}

double ExperimentConfig::tolerance(const std::string& name) const {
  auto it = tolerances.find(name);
  if (it == tolerances.end()) throw ConfigError("no tolerance named '" + name + "'");
  return it->second;
}

void ExperimentConfig::validate() const {
  if (paths < 1) fail("paths must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
  if (!(horizon > 0.0)) fail("horizon must be > 0");
  if (!(grid > 0.0)) fail("grid must be > 0");
  const double cells = horizon / grid;
  if (std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells)) fail("grid must divide the horizon");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const double t = checkpoints[i];
    if (!(t > 0.0) || t > horizon * (1.0 + 1e-12)) fail("checkpoints must lie in (0, horizon]");
    if (i > 0 && !(t > checkpoints[i - 1])) fail("checkpoints must be increasing");
    const double k = t / grid;
    if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) fail("checkpoints must lie on the grid");
  }
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > reversion)) fail("every T must exceed the reversion lambda");
    if (i > 0 && !(scales[i] > scales[i - 1])) fail("T list must be increasing");
  }
  const bool needs_scales = experiment == Experiment::IntensityConverge || experiment == Experiment::Fluctuations ||
                            experiment == Experiment::BidaskPrice;
  if (needs_scales && scales.empty()) fail("T list must be nonempty");
  if (!(reversion > 0.0)) fail("reversion must be > 0");
  if (!(endogeneity > 0.0 && endogeneity < 1.0)) fail("endogeneity must lie in (0, 1)");
  if (!(base_intensity > 0.0) || !(base_bid > 0.0) || !(base_ask > 0.0)) fail("base intensities must be > 0");
  if (!(renewal.step > 0.0) || !(renewal.horizon > renewal.step)) fail("renewal grid is degenerate");
  if (!(renewal.window > 0.0) || renewal.cells < 2) fail("renewal window is degenerate");
  if (!(limit.step > 0.0)) fail("limit step must be > 0");
  if (event_budget < 1) fail("event_budget must be >= 1");
  for (const auto& [name, value] : tolerances)
    if (!(value >= 0.0)) fail("tolerance '" + name + "' must be >= 0");

  try {
    marks.x.validate();
    marks.y.validate();
    for (const auto& s : streams) {
      s.x.validate();
      s.y.validate();
    }
  } catch (const ParameterError& e) {
    fail(std::string("invalid distribution: ") + e.what());
  }

  const bool two_sided = experiment == Experiment::BidaskPrice || experiment == Experiment::HestonCorrelation ||
                         (experiment == Experiment::LimitSde && system != LimitSystem::Scalar);
  if (waive_validation) return;
  const marks::ValidationReport report =
      two_sided ? marks::validate_assumption_BC({streams.begin(), streams.end()}) : marks::validate_assumption_A(marks);
  if (!report.pass) {
    std::ostringstream os;
    os << "mark laws fail validation:";
    for (const auto& r : report.reasons) os << ' ' << r << ';';
    fail(os.str());
  }
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) fail("config must be a JSON object");
  if (!j.contains("experiment") || !j["experiment"].is_string()) fail("config needs a string 'experiment'");
  ExperimentConfig c = default_config(parse_experiment(j["experiment"].get<std::string>()));
  const auto known_tolerances = c.tolerances;
  dispatch(
      j, "config",
      {
          {"experiment", [](const json&) {}},
          {"system", [&](const json& v) { c.system = parse_system(read<std::string>(v, "system")); }},
          {"seed", [&](const json& v) { c.seed = count(v, "seed"); }},
          {"paths", [&](const json& v) { c.paths = count(v, "paths"); }},
          {"workers", [&](const json& v) { c.workers = static_cast<unsigned>(count(v, "workers")); }},
          {"output", [&](const json& v) { c.output = read<std::string>(v, "output"); }},
          {"scales", [&](const json& v) { c.scales = read<std::vector<double>>(v, "scales"); }},
          {"reversion", [&](const json& v) { c.reversion = number(v, "reversion"); }},
          {"endogeneity", [&](const json& v) { c.endogeneity = number(v, "endogeneity"); }},
          {"base_intensity", [&](const json& v) { c.base_intensity = number(v, "base_intensity"); }},
          {"base_bid", [&](const json& v) { c.base_bid = number(v, "base_bid"); }},
          {"base_ask", [&](const json& v) { c.base_ask = number(v, "base_ask"); }},
          {"horizon", [&](const json& v) { c.horizon = number(v, "horizon"); }},
          {"grid", [&](const json& v) { c.grid = number(v, "grid"); }},
          {"checkpoints", [&](const json& v) { c.checkpoints = read<std::vector<double>>(v, "checkpoints"); }},
          {"marks", [&](const json& v) { c.marks = parse_pair(v, "marks"); }},
          {"streams",
           [&](const json& v) {
             if (v.is_object()) {
               const auto p = parse_pair(v, "streams");
               c.streams = {p, p, p, p};
             } else if (v.is_array() && v.size() == 4) {
               for (std::size_t i = 0; i < 4; ++i) c.streams[i] = parse_pair(v[i], "streams[" + std::to_string(i) + "]");
             } else {
               fail("'streams' must be one {x, y} object or an array of four");
             }
           }},
          {"renewal",
           [&](const json& v) {
             dispatch(v, "renewal",
                      {{"step", [&](const json& x) { c.renewal.step = number(x, "renewal.step"); }},
                       {"horizon", [&](const json& x) { c.renewal.horizon = number(x, "renewal.horizon"); }},
                       {"window", [&](const json& x) { c.renewal.window = number(x, "renewal.window"); }},
                       {"cells", [&](const json& x) { c.renewal.cells = count(x, "renewal.cells"); }}});
           }},
          {"limit",
           [&](const json& v) {
             dispatch(v, "limit",
                      {{"paths", [&](const json& x) { c.limit.paths = count(x, "limit.paths"); }},
                       {"step", [&](const json& x) { c.limit.step = number(x, "limit.step"); }},
                       {"scheme", [&](const json& x) {
                          const auto s = read<std::string>(x, "limit.scheme");
                          if (s == "markov")
                            c.limit.scheme = sde::Scheme::MarkovFullTruncation;
                          else if (s == "volterra")
                            c.limit.scheme = sde::Scheme::VolterraEuler;
                          else
                            fail("limit.scheme must be 'markov' or 'volterra'");
                        }}});
           }},
          {"event_budget", [&](const json& v) { c.event_budget = count(v, "event_budget"); }},
          {"waive_validation", [&](const json& v) { c.waive_validation = read<bool>(v, "waive_validation"); }},
          {"tolerances",
           [&](const json& v) {
             if (!v.is_object()) fail("'tolerances' must be an object");
             for (const auto& [name, value] : v.items()) {
               if (!known_tolerances.count(name)) fail("unknown tolerance '" + name + "'");
               c.tolerances[name] = number(value, "tolerances." + name);
             }
           }},
      });
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail("cannot read config file " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("config parse error in " + file.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json streams = json::array();
  for (const auto& s : c.streams) streams.push_back(pair_json(s));
  return {
      {"experiment", to_string(c.experiment)},
      {"system", to_string(c.system)},
      {"seed", c.seed},
      {"paths", c.paths},
      {"workers", c.workers},
      {"output", c.output},
      {"scales", c.scales},
      {"reversion", c.reversion},
      {"endogeneity", c.endogeneity},
      {"base_intensity", c.base_intensity},
      {"base_bid", c.base_bid},
      {"base_ask", c.base_ask},
      {"horizon", c.horizon},
      {"grid", c.grid},
      {"checkpoints", c.checkpoints},
      {"marks", pair_json(c.marks)},
      {"streams", streams},
      {"renewal",
       {{"step", c.renewal.step}, {"horizon", c.renewal.horizon}, {"window", c.renewal.window}, {"cells", c.renewal.cells}}},
      {"limit",
       {{"paths", c.limit.paths},
        {"step", c.limit.step},
        {"scheme", c.limit.scheme == sde::Scheme::MarkovFullTruncation ? "markov" : "volterra"}}},
      {"event_budget", c.event_budget},
      {"waive_validation", c.waive_validation},
      {"tolerances", c.tolerances},
  };
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("workers");
  j.erase("output");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace hawkeslab::experiments

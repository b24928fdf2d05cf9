#pragma once

#include <string>
#include <variant>
#include <vector>

#include "hawkeslab/rng.hpp"

namespace hawkeslab::marks {

struct Deterministic {
  double value = 1.0;
  friend bool operator==(const Deterministic&, const Deterministic&) = default;
};

struct Exponential {
  double rate = 1.0;
  friend bool operator==(const Exponential&, const Exponential&) = default;
};

struct Gamma {
  double shape = 1.0;
  double rate = 1.0;
  friend bool operator==(const Gamma&, const Gamma&) = default;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const Uniform&, const Uniform&) = default;
};

// Lomax law with survival (1 + z/scale)^-(2+index): the density is
// regularly varying with index -3-index.
struct ParetoTail {
  double index = 1.0;
  double scale = 2.0;
  friend bool operator==(const ParetoTail&, const ParetoTail&) = default;
};

// Nonnegative mark law.  Moments that diverge are returned as +infinity.
class MarkDistribution {
 public:
  using Law = std::variant<Deterministic, Exponential, Gamma, Uniform, ParetoTail>;

  MarkDistribution() : law_(Deterministic{1.0}) {}
  MarkDistribution(Law law) : law_(law) {}  // NOLINT(google-explicit-constructor)

  // Validating factories.
  static MarkDistribution deterministic(double value);
  static MarkDistribution exponential(double rate);
  static MarkDistribution gamma(double shape, double rate);
  static MarkDistribution uniform(double lo, double hi);
  static MarkDistribution pareto_tail(double index, double scale);

  // Throws ParameterError when a parameter is out of range.
  void validate() const;

  const Law& law() const { return law_; }
  std::string kind() const;
  std::string describe() const;

  double mean() const { return moment(1); }
  double second_moment() const { return moment(2); }
  double fourth_moment() const { return moment(4); }
  double variance() const;
  // E[Z^k]; +infinity when it diverges.
  double moment(int k) const;

  // P(Z > z).
  double survival(double z) const;
  // Integral of the survival function over [0, z], i.e. E[min(Z, z)].
  double integrated_survival(double z) const;
  // E[Z^k 1{Z <= cap}].
  double truncated_moment(int k, double cap) const;

  double sample(rng::Engine& engine) const;

  friend bool operator==(const MarkDistribution&, const MarkDistribution&) = default;

 private:
  Law law_;
};

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
};

Moments moments(const MarkDistribution& dist);
double sample(const MarkDistribution& dist, rng::Engine& engine);

struct MarkPairConfig {
  MarkDistribution x;
  MarkDistribution y;
  friend bool operator==(const MarkPairConfig&, const MarkPairConfig&) = default;
};

enum class TailStatus { RegularlyVarying, LighterAccepted };

struct ValidationReport {
  bool pass = true;
  std::vector<std::string> reasons;
  std::vector<TailStatus> tails;
  std::vector<std::string> notes;
};

// Mean-one X and Y with finite second moments.
ValidationReport validate_assumption_A(const MarkPairConfig& cfg);

// Four streams: equal X means, identical Y laws, finite variances.  The tail
// condition on Y is reported per stream, never rejected.
ValidationReport validate_assumption_BC(const std::vector<MarkPairConfig>& cfgs);

// m = integral of z P(Y > z) dz = E(Y^2)/2.
double kernel_scale(const MarkDistribution& y);

}  // namespace hawkeslab::marks

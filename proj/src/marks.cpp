#include "hawkeslab/marks.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "hawkeslab/errors.hpp"

namespace hawkeslab::marks {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
bool finite_pos(double v) { return std::isfinite(v) && v > 0.0; }

double factorial(int k) {
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

// Gamma(a + k) / Gamma(a) for integer k >= 0.
double rising(double a, int k) {
  double r = 1.0;
  for (int j = 0; j < k; ++j) r *= a + j;
  return r;
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

MarkDistribution MarkDistribution::deterministic(double value) {
  MarkDistribution d{Deterministic{value}};
  d.validate();
  return d;
}
MarkDistribution MarkDistribution::exponential(double rate) {
  MarkDistribution d{Exponential{rate}};
  d.validate();
  return d;
}
MarkDistribution MarkDistribution::gamma(double shape, double rate) {
  MarkDistribution d{Gamma{shape, rate}};
  d.validate();
  return d;
}
MarkDistribution MarkDistribution::uniform(double lo, double hi) {
  MarkDistribution d{Uniform{lo, hi}};
  d.validate();
  return d;
}
MarkDistribution MarkDistribution::pareto_tail(double index, double scale) {
  MarkDistribution d{ParetoTail{index, scale}};
  d.validate();
  return d;
}

void MarkDistribution::validate() const {
  std::visit(overloaded{
                 [](const Deterministic& d) {
                   if (!finite_nonneg(d.value)) throw ParameterError("deterministic mark must be a finite value >= 0");
                 },
                 [](const Exponential& d) {
                   if (!finite_pos(d.rate)) throw ParameterError("exponential rate must be > 0");
                 },
                 [](const Gamma& d) {
                   if (!finite_pos(d.shape)) throw ParameterError("gamma shape must be > 0");
                   if (!finite_pos(d.rate)) throw ParameterError("gamma rate must be > 0");
                 },
                 [](const Uniform& d) {
                   if (!finite_nonneg(d.lo) || !std::isfinite(d.hi) || d.hi < d.lo)
                     throw ParameterError("uniform bounds must satisfy 0 <= lo <= hi");
                 },
                 [](const ParetoTail& d) {
                   if (!finite_pos(d.index)) throw ParameterError("pareto tail index must be > 0");
                   if (!finite_pos(d.scale)) throw ParameterError("pareto tail scale must be > 0");
                 },
             },
             law_);
}

std::string MarkDistribution::kind() const {
  return std::visit(overloaded{
                        [](const Deterministic&) { return std::string("deterministic"); },
                        [](const Exponential&) { return std::string("exponential"); },
                        [](const Gamma&) { return std::string("gamma"); },
                        [](const Uniform&) { return std::string("uniform"); },
                        [](const ParetoTail&) { return std::string("pareto_tail"); },
                    },
                    law_);
}

std::string MarkDistribution::describe() const {
  return std::visit(
      overloaded{
          [](const Deterministic& d) { return "Deterministic(" + fmt_num(d.value) + ")"; },
          [](const Exponential& d) { return "Exponential(rate=" + fmt_num(d.rate) + ")"; },
          [](const Gamma& d) { return "Gamma(shape=" + fmt_num(d.shape) + ", rate=" + fmt_num(d.rate) + ")"; },
          [](const Uniform& d) { return "Uniform(" + fmt_num(d.lo) + ", " + fmt_num(d.hi) + ")"; },
          [](const ParetoTail& d) {
            return "ParetoTail(index=" + fmt_num(d.index) + ", scale=" + fmt_num(d.scale) + ")";
          },
      },
      law_);
}

double MarkDistribution::moment(int k) const {
  if (k < 0) throw ParameterError("moment order must be >= 0");
  validate();
  if (k == 0) return 1.0;
  return std::visit(overloaded{
                        [k](const Deterministic& d) { return std::pow(d.value, k); },
                        [k](const Exponential& d) { return factorial(k) / std::pow(d.rate, k); },
                        [k](const Gamma& d) { return rising(d.shape, k) / std::pow(d.rate, k); },
                        [k](const Uniform& d) {
                          if (d.hi == d.lo) return std::pow(d.lo, k);
                          return (std::pow(d.hi, k + 1) - std::pow(d.lo, k + 1)) / ((k + 1) * (d.hi - d.lo));
                        },
                        [k](const ParetoTail& d) {
                          const double alpha = 2.0 + d.index;
                          if (alpha <= k) return kInf;
                          double denom = 1.0;
                          for (int j = 1; j <= k; ++j) denom *= alpha - j;
                          return std::pow(d.scale, k) * factorial(k) / denom;
                        },
                    },
                    law_);
}

double MarkDistribution::variance() const {
  const double m1 = mean();
  return second_moment() - m1 * m1;
}

double MarkDistribution::survival(double z) const {
  if (z < 0.0) return 1.0;
  return std::visit(overloaded{
                        [z](const Deterministic& d) { return z < d.value ? 1.0 : 0.0; },
                        [z](const Exponential& d) { return std::exp(-d.rate * z); },
                        [z](const Gamma& d) { return boost::math::gamma_q(d.shape, d.rate * z); },
                        [z](const Uniform& d) {
                          if (z < d.lo) return 1.0;
                          if (z >= d.hi) return 0.0;
                          return (d.hi - z) / (d.hi - d.lo);
                        },
                        [z](const ParetoTail& d) { return std::pow(1.0 + z / d.scale, -(2.0 + d.index)); },
                    },
                    law_);
}

double MarkDistribution::integrated_survival(double z) const {
  if (z <= 0.0) return 0.0;
  return std::visit(
      overloaded{
          [z](const Deterministic& d) { return std::min(z, d.value); },
          [z](const Exponential& d) { return -std::expm1(-d.rate * z) / d.rate; },
          [z](const Gamma& d) {
            const double x = d.rate * z;
            return z * boost::math::gamma_q(d.shape, x) + d.shape / d.rate * boost::math::gamma_p(d.shape + 1.0, x);
          },
          [z](const Uniform& d) {
            if (z <= d.lo) return z;
            if (z >= d.hi) return 0.5 * (d.lo + d.hi);
            const double w = d.hi - d.lo;
            return d.lo + (w * w - (d.hi - z) * (d.hi - z)) / (2.0 * w);
          },
          [z](const ParetoTail& d) {
            const double alpha = 2.0 + d.index;
            return d.scale / (alpha - 1.0) * (1.0 - std::pow(1.0 + z / d.scale, 1.0 - alpha));
          },
      },
      law_);
}

double MarkDistribution::truncated_moment(int k, double cap) const {
  if (k < 0) throw ParameterError("moment order must be >= 0");
  validate();
  if (cap < 0.0) return 0.0;
  return std::visit(
      overloaded{
          [k, cap](const Deterministic& d) { return d.value <= cap ? std::pow(d.value, k) : 0.0; },
          [k, cap](const Exponential& d) {
            return factorial(k) / std::pow(d.rate, k) * boost::math::gamma_p(k + 1.0, d.rate * cap);
          },
          [k, cap](const Gamma& d) {
            return rising(d.shape, k) / std::pow(d.rate, k) * boost::math::gamma_p(d.shape + k, d.rate * cap);
          },
          [k, cap](const Uniform& d) {
            if (d.hi == d.lo) return d.lo <= cap ? std::pow(d.lo, k) : 0.0;
            if (cap <= d.lo) return 0.0;
            const double top = std::min(cap, d.hi);
            return (std::pow(top, k + 1) - std::pow(d.lo, k + 1)) / ((k + 1) * (d.hi - d.lo));
          },
          [k, cap](const ParetoTail& d) {
            const double alpha = 2.0 + d.index;
            const double u = cap / d.scale;
            if (alpha > k) {
              const double t = u / (1.0 + u);
              return std::pow(d.scale, k) * alpha * boost::math::beta(k + 1.0, alpha - k, t);
            }
            auto integrand = [k, alpha](double v) { return std::pow(v, k) * std::pow(1.0 + v, -alpha - 1.0); };
            const double integral =
                boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, u, 15, 1e-12);
            return std::pow(d.scale, k) * alpha * integral;
          },
      },
      law_);
}

double MarkDistribution::sample(rng::Engine& engine) const {
  return std::visit(overloaded{
                        [](const Deterministic& d) { return d.value; },
                        [&engine](const Exponential& d) { return engine.exponential() / d.rate; },
                        [&engine](const Gamma& d) {
                          std::gamma_distribution<double> g(d.shape, 1.0 / d.rate);
                          return g(engine);
                        },
                        [&engine](const Uniform& d) { return d.lo + (d.hi - d.lo) * engine.uniform(); },
                        [&engine](const ParetoTail& d) {
                          return d.scale * std::expm1(engine.exponential() / (2.0 + d.index));
                        },
                    },
                    law_);
}

Moments moments(const MarkDistribution& dist) {
  return Moments{dist.mean(), dist.second_moment(), dist.fourth_moment()};
}

double sample(const MarkDistribution& dist, rng::Engine& engine) { return dist.sample(engine); }

double kernel_scale(const MarkDistribution& y) { return 0.5 * y.second_moment(); }

namespace {

constexpr double kMeanTol = 1e-12;

TailStatus tail_status(const MarkDistribution& y) {
  return std::holds_alternative<ParetoTail>(y.law()) ? TailStatus::RegularlyVarying : TailStatus::LighterAccepted;
}

}  // namespace

ValidationReport validate_assumption_A(const MarkPairConfig& cfg) {
  ValidationReport report;
  auto check = [&](const MarkDistribution& d, const char* name) {
    try {
      d.validate();
    } catch (const ParameterError& e) {
      report.pass = false;
      report.reasons.push_back(std::string(name) + ": " + e.what());
      return;
    }
    const double m = d.mean();
    if (std::abs(m - 1.0) > kMeanTol) {
      report.pass = false;
      report.reasons.push_back("E(" + std::string(name) + ")=" + fmt_num(m) + "≠1");
    }
    if (!std::isfinite(d.second_moment())) {
      report.pass = false;
      report.reasons.push_back("E(" + std::string(name) + "^2) is infinite");
    }
  };
  check(cfg.x, "X");
  check(cfg.y, "Y");
  return report;
}

ValidationReport validate_assumption_BC(const std::vector<MarkPairConfig>& cfgs) {
  ValidationReport report;
  if (cfgs.size() != 4) {
    report.pass = false;
    report.reasons.push_back("expected four streams, got " + std::to_string(cfgs.size()));
    return report;
  }
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    for (const auto* d : {&cfgs[i].x, &cfgs[i].y}) {
      try {
        d->validate();
      } catch (const ParameterError& e) {
        report.pass = false;
        report.reasons.push_back("stream " + std::to_string(i + 1) + ": " + e.what());
        return report;
      }
    }
  }
  const double mx = cfgs[0].x.mean();
  for (std::size_t i = 1; i < 4; ++i) {
    const double mi = cfgs[i].x.mean();
    if (std::abs(mi - mx) > kMeanTol) {
      report.pass = false;
      report.reasons.push_back("E(X" + std::to_string(i + 1) + ")=" + fmt_num(mi) + " differs from E(X1)=" +
                               fmt_num(mx));
    }
  }
  for (std::size_t i = 1; i < 4; ++i) {
    if (!(cfgs[i].y == cfgs[0].y)) {
      report.pass = false;
      report.reasons.push_back("Y laws differ (stream " + std::to_string(i + 1) + ")");
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (!std::isfinite(cfgs[i].x.second_moment()) || !std::isfinite(cfgs[i].y.second_moment())) {
      report.pass = false;
      report.reasons.push_back("stream " + std::to_string(i + 1) + " has infinite variance");
    }
    const TailStatus t = tail_status(cfgs[i].y);
    report.tails.push_back(t);
    report.notes.push_back("stream " + std::to_string(i + 1) + " Y tail: " +
                           (t == TailStatus::RegularlyVarying ? "regularly varying, satisfied"
                                                              : "lighter than required, accepted"));
  }
  return report;
}

}  // namespace hawkeslab::marks

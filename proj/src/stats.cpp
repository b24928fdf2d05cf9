#include "hawkeslab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hawkeslab/errors.hpp"

namespace hawkeslab::stats {

void RunningMoments::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

void RunningMoments::merge(const RunningMoments& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
  const double d = o.mean_ - mean_;
  const double n = na + nb;
  mean_ += d * nb / n;
  m2_ += o.m2_ + d * d * na * nb / n;
  n_ += o.n_;
}

double RunningMoments::variance() const { return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1); }

double RunningMoments::std_error() const {
  return n_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

CheckpointSummary summarize_sample(double time, std::vector<double> sample, bool keep_sorted) {
  CheckpointSummary c;
  c.time = time;
  c.n = sample.size();
  RunningMoments m;
  for (double v : sample) m.add(v);
  c.mean = m.mean();
  c.variance = m.variance();
  c.std_error = m.std_error();
  if (c.n >= 2) {
    double m4 = 0.0;
    for (double v : sample) {
      const double d = v - c.mean;
      m4 += d * d * d * d;
    }
    m4 /= static_cast<double>(c.n);
    const double spread = std::max(0.0, m4 - c.variance * c.variance);
    c.variance_std_error = std::sqrt(spread / static_cast<double>(c.n));
  }
  if (keep_sorted) {
    std::sort(sample.begin(), sample.end());
    c.sorted = std::move(sample);
  }
  return c;
}

EnsembleSummary summarize(const std::vector<double>& times, const std::vector<std::vector<double>>& samples,
                          bool keep_sorted) {
  if (times.size() != samples.size()) throw ParameterError("one sample per checkpoint required");
  EnsembleSummary s;
  for (std::size_t c = 0; c < times.size(); ++c) {
    s.checkpoints.push_back(summarize_sample(times[c], samples[c], keep_sorted));
    s.n = samples[c].size();
  }
  return s;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ParameterError("KS distance needs two nonempty samples");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

std::vector<double> qv_estimate(std::span<const double> path, std::span<const std::size_t> checkpoints) {
  return covariation_estimate(path, path, checkpoints);
}

std::vector<double> covariation_estimate(std::span<const double> a, std::span<const double> b,
                                         std::span<const std::size_t> checkpoints) {
  if (a.size() != b.size()) throw ParameterError("paths must share a grid");
  std::vector<double> out;
  out.reserve(checkpoints.size());
  double acc = 0.0;
  std::size_t k = 0;
  for (std::size_t c : checkpoints) {
    if (c >= a.size() || c < k) throw ParameterError("checkpoints must be increasing grid indices");
    for (; k < c; ++k) acc += (a[k + 1] - a[k]) * (b[k + 1] - b[k]);
    out.push_back(acc);
  }
  return out;
}

Correlation corr_estimate(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ParameterError("correlation needs paired samples");
  if (x.size() < 30) throw ParameterError("correlation needs at least 30 pairs");
  RunningMoments mx, my;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx.add(x[i]);
    my.add(y[i]);
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx.mean(), dy = y[i] - my.mean();
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw ParameterError("correlation of a zero-variance sample is undefined");
  Correlation c;
  c.n = x.size();
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  c.std_error = (1.0 - c.r * c.r) / std::sqrt(static_cast<double>(c.n) - 3.0);
  return c;
}

namespace {

template <class Get>
std::optional<bool> strictly_decreasing(const std::vector<ConvergenceRow>& rows, Get get) {
  if (rows.size() < 2) return std::nullopt;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(get(rows[i]) < get(rows[i - 1]))) return false;
  return true;
}

}  // namespace

std::optional<bool> ConvergenceTable::ks_decreasing() const {
  return strictly_decreasing(rows, [](const ConvergenceRow& r) { return r.ks; });
}
std::optional<bool> ConvergenceTable::mean_error_decreasing() const {
  return strictly_decreasing(rows, [](const ConvergenceRow& r) { return r.mean_error; });
}
std::optional<bool> ConvergenceTable::variance_error_decreasing() const {
  return strictly_decreasing(rows, [](const ConvergenceRow& r) { return r.variance_error; });
}

ConvergenceTable build_convergence_table(const std::vector<double>& expected,
                                         const std::map<double, ConvergenceRow>& runs) {
  std::vector<double> missing;
  for (double t : expected)
    if (!runs.count(t)) missing.push_back(t);
  if (!missing.empty()) {
    std::ostringstream os;
    os << "missing runs for T =";
    for (double t : missing) os << ' ' << t;
    throw ConfigError(os.str());
  }
  ConvergenceTable table;
  for (const auto& [t, row] : runs) {
    ConvergenceRow r = row;
    r.scale = t;
    table.rows.push_back(r);
  }
  return table;
}

}  // namespace hawkeslab::stats

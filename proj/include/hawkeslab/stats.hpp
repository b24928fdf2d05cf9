#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace hawkeslab::stats {

// Mergeable mean/variance accumulator (Chan et al. pairwise update).
class RunningMoments {
 public:
  void add(double x);
  void merge(const RunningMoments& other);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  // Unbiased (n - 1 denominator); 0 for fewer than two samples.
  double variance() const;
  double std_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct CheckpointSummary {
  double time = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  double variance_std_error = 0.0;
  std::vector<double> sorted;  // kept only when requested
};

struct EnsembleSummary {
  std::size_t n = 0;
  std::vector<CheckpointSummary> checkpoints;
};

// samples[c] holds one value per path at checkpoint c.
EnsembleSummary summarize(const std::vector<double>& times, const std::vector<std::vector<double>>& samples,
                          bool keep_sorted = false);
CheckpointSummary summarize_sample(double time, std::vector<double> sample, bool keep_sorted = false);

// Two-sample Kolmogorov-Smirnov statistic of sorted samples.
double ks_distance(std::span<const double> sorted_a, std::span<const double> sorted_b);

// Realized quadratic variation sum (dx)^2 of a path sampled on a grid,
// reported at the requested grid indices.
std::vector<double> qv_estimate(std::span<const double> path, std::span<const std::size_t> checkpoints);
// Realized covariation sum dx dy.
std::vector<double> covariation_estimate(std::span<const double> a, std::span<const double> b,
                                         std::span<const std::size_t> checkpoints);

struct Correlation {
  double r = 0.0;
  double std_error = 0.0;  // delta-method SE from the Fisher z transform
  std::size_t n = 0;
};

Correlation corr_estimate(std::span<const double> x, std::span<const double> y);

struct ConvergenceRow {
  double scale = 0.0;
  std::size_t n = 0;
  double ks = 0.0;
  double mean_error = 0.0;
  double variance_error = 0.0;
  std::optional<double> qv_error;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;

  // Empty when the table has a single row.
  std::optional<bool> ks_decreasing() const;
  std::optional<bool> mean_error_decreasing() const;
  std::optional<bool> variance_error_decreasing() const;
};

// Rows in ascending T; throws ConfigError naming every T in `expected`
// without a completed run.
ConvergenceTable build_convergence_table(const std::vector<double>& expected,
                                         const std::map<double, ConvergenceRow>& runs);

}  // namespace hawkeslab::stats

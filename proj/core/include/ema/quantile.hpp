#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ema/errors.hpp"

namespace ema {

/// Ascending, finite sample. The invariants are checked on construction.
class SortedSample {
 public:
  /// Takes arbitrary finite values and sorts them.
  static SortedSample from_unsorted(std::vector<double> values);
  /// Values must already be ascending.
  static SortedSample from_sorted(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }

 private:
  explicit SortedSample(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

/// Three-point summary {q1, m, q3} of a sample of size n.
///
/// Under the index rule below, q1 <= q3 always holds, but the median can
/// exceed q3 for n in {6, 7} (the median index passes the q3 index), so only
/// q1 <= q3 is asserted here.
struct QuartileSummary {
  double q1 = 0.0;
  double m = 0.0;
  double q3 = 0.0;
  std::size_t n = 0;
};

/// Mixing coefficient between the quartile midpoint and the median.
class EstimatorWeight {
 public:
  explicit EstimatorWeight(double w);
  double value() const noexcept { return w_; }

 private:
  double w_;
};

/// Index convention used to extract q1/q3 from a sorted sample.
enum class QuartileRule {
  /// quar1 = floor(n/4); q1 = values[quar1 - 1], q3 = values[3*quar1 - 1]
  /// (0-based). The aggregation pipeline uses this rule.
  IndexFloor,
  /// Linear interpolation at positions 0.25*(n-1) and 0.75*(n-1); symmetric,
  /// kept behind the same operation for comparison runs.
  Interpolated,
};

/// Middle element for odd n, mean of the two middles for even n.
double median(const SortedSample& sample);

/// Quartile summary of a sorted sample; n >= 4 required (SampleTooSmall).
QuartileSummary quartiles(const SortedSample& sample, QuartileRule rule = QuartileRule::IndexFloor);

/// w = 0.70 + 0.39/n. Throws InvalidWeight when the result leaves (0, 1),
/// which happens only for n = 1.
EstimatorWeight estimator_weight(std::size_t n);

/// Three-point mean estimate: w*(q1+q3)/2 + (1-w)*m.
double estimated_mean(const QuartileSummary& summary, const EstimatorWeight& weight);

}  // namespace ema

#include "ema/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ema {

namespace {

void check_finite(const std::vector<double>& values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "sample contains NaN or Inf");
  }
}

}  // namespace

SortedSample SortedSample::from_unsorted(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::SampleTooSmall, "empty sample");
  check_finite(values);
  std::sort(values.begin(), values.end());
  return SortedSample(std::move(values));
}

SortedSample SortedSample::from_sorted(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::SampleTooSmall, "empty sample");
  check_finite(values);
  if (!std::is_sorted(values.begin(), values.end()))
    throw Error(ErrorCode::InvalidConfig, "values not ascending");
  return SortedSample(std::move(values));
}

EstimatorWeight::EstimatorWeight(double w) : w_(w) {
  if (!(w > 0.0 && w < 1.0))
    throw Error(ErrorCode::InvalidWeight, "weight " + std::to_string(w) + " outside (0, 1)");
}

double median(const SortedSample& sample) {
  const auto& v = sample.values();
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

QuartileSummary quartiles(const SortedSample& sample, QuartileRule rule) {
  const auto& v = sample.values();
  const std::size_t n = v.size();
  if (n < 4)
    throw Error(ErrorCode::SampleTooSmall,
                "quartiles need n >= 4, got n = " + std::to_string(n));

  QuartileSummary s;
  s.n = n;
  s.m = median(sample);
  switch (rule) {
    case QuartileRule::IndexFloor: {
      const std::size_t quar1 = n / 4;
      const std::size_t quar3 = 3 * quar1;
      s.q1 = v[quar1 - 1];
      s.q3 = v[quar3 - 1];
      break;
    }
    case QuartileRule::Interpolated: {
      auto at = [&](double pos) {
        const double idx = pos * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const double frac = idx - static_cast<double>(lo);
        if (lo + 1 >= n) return v[n - 1];
        return v[lo] + frac * (v[lo + 1] - v[lo]);
      };
      s.q1 = at(0.25);
      s.q3 = at(0.75);
      break;
    }
  }
  if (s.q1 > s.q3) throw Error(ErrorCode::InvalidConfig, "q1 > q3; sample not sorted?");
  return s;
}

EstimatorWeight estimator_weight(std::size_t n) {
  if (n < 1) throw Error(ErrorCode::SampleTooSmall, "n must be >= 1");
  return EstimatorWeight(0.70 + 0.39 / static_cast<double>(n));
}

double estimated_mean(const QuartileSummary& summary, const EstimatorWeight& weight) {
  const double w = weight.value();
  return w * (summary.q1 + summary.q3) / 2.0 + (1.0 - w) * summary.m;
}

}  // namespace ema

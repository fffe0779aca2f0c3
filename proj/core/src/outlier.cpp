#include "ema/outlier.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ema {

OutlierThresholds compute_thresholds(const SortedSample& sample, double k) {
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidConfig, "fence multiplier k must be > 0");
  const QuartileSummary q = quartiles(sample);
  OutlierThresholds t;
  t.k = k;
  t.iqr = q.q3 - q.q1;
  t.lower = q.q1 - k * t.iqr;
  t.upper = q.q3 + k * t.iqr;
  return t;
}

FilterReport filter_outliers(const SortedSample& sample, const OutlierThresholds& thresholds) {
  const auto& v = sample.values();
  // sorted input: the retained region is one contiguous run
  auto lo = std::lower_bound(v.begin(), v.end(), thresholds.lower);
  auto hi = std::upper_bound(v.begin(), v.end(), thresholds.upper);
  if (lo >= hi)
    throw Error(ErrorCode::AllFiltered, "no values inside [" + std::to_string(thresholds.lower) +
                                            ", " + std::to_string(thresholds.upper) + "]");
  std::vector<double> kept(lo, hi);
  const std::size_t retained = kept.size();
  FilterReport report{SortedSample::from_sorted(std::move(kept)), retained,
                      v.size() - retained,
                      static_cast<double>(v.size() - retained) / static_cast<double>(v.size()),
                      std::nullopt};
  const double range = v.back() - v.front();
  if (range > 0.0) report.trim_range_ratio = thresholds.k * thresholds.iqr / range;
  return report;
}

double normalized_trimmed_mean(const SortedSample& sample, double k) {
  const FilterReport report = filter_outliers(sample, compute_thresholds(sample, k));
  const auto& kept = report.retained.values();
  const double sum = std::accumulate(kept.begin(), kept.end(), 0.0);
  return sum / static_cast<double>(kept.size());
}

}  // namespace ema

#pragma once

#include <optional>

#include "ema/quantile.hpp"

namespace ema {

/// IQR fence: [q1 - k*iqr, q3 + k*iqr], bounds inclusive.
struct OutlierThresholds {
  double lower = 0.0;
  double upper = 0.0;
  double k = 0.0;
  double iqr = 0.0;
};

struct FilterReport {
  SortedSample retained;
  std::size_t retained_count = 0;
  std::size_t dropped_count = 0;
  /// dropped_count / n.
  double outlier_fraction = 0.0;
  /// k*iqr / (max - min), reported only when the sample has positive range.
  std::optional<double> trim_range_ratio;
};

/// Fence from the quartiles of the untrimmed sample; n >= 4, k > 0.
OutlierThresholds compute_thresholds(const SortedSample& sample, double k);

/// Keeps values inside the closed fence interval. Throws AllFiltered when
/// nothing survives (possible only with externally constructed thresholds).
FilterReport filter_outliers(const SortedSample& sample, const OutlierThresholds& thresholds);

/// Arithmetic mean of the fence-filtered sample.
double normalized_trimmed_mean(const SortedSample& sample, double k);

}  // namespace ema

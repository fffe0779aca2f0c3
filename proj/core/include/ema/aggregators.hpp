#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ema/gradient.hpp"

namespace ema {

enum class AggregationRule { EMA, Mean, Median, TrimmedMean, Krum, Zeno };

const char* rule_name(AggregationRule rule);
std::optional<AggregationRule> rule_from_name(const std::string& name);

struct AggregationConfig {
  AggregationRule rule = AggregationRule::EMA;
  /// IQR fence multiplier for EMA trimming.
  double k = 1.5;
  /// Count-trim fraction for TrimmedMean; must lie in [0, 0.5).
  double trim_fraction = 0.1;
  /// Assumed Byzantine count for Krum.
  std::uint32_t byzantine_count_f = 0;
  /// Zeno parameters; zeno_gamma <= 0 means "use the simulation step size".
  double zeno_rho = 5e-4;
  std::uint32_t zeno_remove_b = 0;
  double zeno_gamma = 0.0;

  void validate() const;
};

struct AggregationDiagnostics {
  /// Values that entered the final per-coordinate estimate (coordinate-wise
  /// rules only; n where no trimming applies).
  std::vector<std::uint32_t> retained_counts;
  /// Estimator weight used by EMA (0 for other rules).
  double mean_weight = 0.0;
  std::uint64_t median_fallback_count = 0;
  std::uint64_t all_filtered_count = 0;
  /// Krum: the chosen client.
  std::optional<std::uint32_t> selected_client;

  double retained_mean() const;
};

struct AggregationOutcome {
  GradientVector global_update;
  AggregationDiagnostics diagnostics;
};

/// Quartile-based estimated-mean rule, coordinate-wise:
/// sort, take the untrimmed median, trim by the IQR fence (multiplier k),
/// then estimate the mean from the trimmed array's quartiles and the
/// untrimmed median with weight w = 0.70 + 0.39/n. Coordinates whose trimmed
/// array has fewer than 4 values (or whole rounds with n < 4) fall back to
/// the untrimmed median.
AggregationOutcome aggregate_ema(const std::vector<CoordinateSample>& samples, double k = 1.5);

/// Coordinate-wise arithmetic mean (unprotected baseline).
AggregationOutcome aggregate_mean(const std::vector<CoordinateSample>& samples);

/// Coordinate-wise median.
AggregationOutcome aggregate_median(const std::vector<CoordinateSample>& samples);

/// Drops ceil(trim_fraction*n) smallest and largest values per coordinate,
/// averages the rest. Throws TrimTooAggressive when nothing remains.
AggregationOutcome aggregate_trimmed_mean(const std::vector<CoordinateSample>& samples,
                                          double trim_fraction);

/// Selects the update minimizing the summed squared distance to its n-f-2
/// nearest neighbours; ties broken by lowest client_id. Requires n >= f+3.
AggregationOutcome aggregate_krum(const std::vector<ClientUpdate>& updates, std::uint32_t f);

using ValidationOracle = std::function<double(const GradientVector& parameters)>;

/// Zeno: score_i = loss(current) - loss(current - gamma*g_i) - rho*||g_i||^2;
/// drops the b lowest-scoring updates and averages the rest. Requires n > b.
AggregationOutcome aggregate_zeno(const std::vector<ClientUpdate>& updates,
                                  const ValidationOracle& validation_oracle,
                                  const GradientVector& current, double rho, std::uint32_t b,
                                  double gamma);

struct ZenoContext {
  ValidationOracle oracle;
  GradientVector current;
};

/// Rule dispatch used by the simulator and CLI. Coordinate-wise rules
/// transpose the round first; Krum/Zeno consume whole updates. Zeno requires
/// a context.
AggregationOutcome aggregate(const std::vector<ClientUpdate>& updates,
                             const AggregationConfig& config,
                             const ZenoContext* zeno = nullptr);

}  // namespace ema

#include "ema/aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ema/outlier.hpp"
#include "ema/quantile.hpp"

namespace ema {

const char* rule_name(AggregationRule rule) {
  switch (rule) {
    case AggregationRule::EMA: return "ema";
    case AggregationRule::Mean: return "mean";
    case AggregationRule::Median: return "median";
    case AggregationRule::TrimmedMean: return "trimmed_mean";
    case AggregationRule::Krum: return "krum";
    case AggregationRule::Zeno: return "zeno";
  }
  return "?";
}

std::optional<AggregationRule> rule_from_name(const std::string& name) {
  if (name == "ema") return AggregationRule::EMA;
  if (name == "mean") return AggregationRule::Mean;
  if (name == "median") return AggregationRule::Median;
  if (name == "trimmed_mean" || name == "trim") return AggregationRule::TrimmedMean;
  if (name == "krum") return AggregationRule::Krum;
  if (name == "zeno") return AggregationRule::Zeno;
  return std::nullopt;
}

void AggregationConfig::validate() const {
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidConfig, "k must be > 0");
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5))
    throw Error(ErrorCode::InvalidConfig, "trim_fraction must lie in [0, 0.5)");
  if (zeno_rho < 0.0) throw Error(ErrorCode::InvalidConfig, "zeno_rho must be >= 0");
}

double AggregationDiagnostics::retained_mean() const {
  if (retained_counts.empty()) return 0.0;
  double sum = 0.0;
  for (auto c : retained_counts) sum += c;
  return sum / static_cast<double>(retained_counts.size());
}

namespace {

void check_samples(const std::vector<CoordinateSample>& samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyRound, "no coordinates");
  const std::size_t n = samples.front().values.size();
  if (n == 0) throw Error(ErrorCode::EmptyRound, "empty coordinate sample");
  for (const auto& s : samples) {
    if (s.values.size() != n) throw Error(ErrorCode::DimensionMismatch, "ragged samples");
  }
}

AggregationOutcome make_outcome(std::vector<double> values, AggregationDiagnostics diag) {
  return AggregationOutcome{GradientVector::flat(std::move(values)), std::move(diag)};
}

}  // namespace

AggregationOutcome aggregate_ema(const std::vector<CoordinateSample>& samples, double k) {
  check_samples(samples);
  const std::size_t n = samples.front().values.size();

  AggregationDiagnostics diag;
  diag.retained_counts.reserve(samples.size());
  double weight = 0.0;
  if (n >= 4) weight = estimator_weight(n).value();
  diag.mean_weight = weight;

  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const SortedSample sorted = SortedSample::from_unsorted(s.values);
    const double m = median(sorted);
    if (n < 4) {
      out.push_back(m);
      diag.retained_counts.push_back(static_cast<std::uint32_t>(n));
      ++diag.median_fallback_count;
      continue;
    }
    const OutlierThresholds fence = compute_thresholds(sorted, k);
    SortedSample trimmed = sorted;
    bool all_filtered = false;
    try {
      FilterReport report = filter_outliers(sorted, fence);
      trimmed = std::move(report.retained);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllFiltered) throw;
      all_filtered = true;
    }
    if (all_filtered) {
      out.push_back(m);
      diag.retained_counts.push_back(0);
      ++diag.all_filtered_count;
      continue;
    }
    diag.retained_counts.push_back(static_cast<std::uint32_t>(trimmed.size()));
    if (trimmed.size() < 4) {
      out.push_back(m);
      ++diag.median_fallback_count;
      continue;
    }
    const QuartileSummary q = quartiles(trimmed);
    // Eq-style blend: quartiles of the trimmed array, median of the raw one.
    out.push_back(weight * (q.q1 + q.q3) / 2.0 + (1.0 - weight) * m);
  }
  return make_outcome(std::move(out), std::move(diag));
}

AggregationOutcome aggregate_mean(const std::vector<CoordinateSample>& samples) {
  check_samples(samples);
  const std::size_t n = samples.front().values.size();
  AggregationDiagnostics diag;
  diag.retained_counts.assign(samples.size(), static_cast<std::uint32_t>(n));
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const double sum = std::accumulate(s.values.begin(), s.values.end(), 0.0);
    out.push_back(sum / static_cast<double>(n));
  }
  return make_outcome(std::move(out), std::move(diag));
}

AggregationOutcome aggregate_median(const std::vector<CoordinateSample>& samples) {
  check_samples(samples);
  const std::size_t n = samples.front().values.size();
  AggregationDiagnostics diag;
  diag.retained_counts.assign(samples.size(), static_cast<std::uint32_t>(n));
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(median(SortedSample::from_unsorted(s.values)));
  return make_outcome(std::move(out), std::move(diag));
}

AggregationOutcome aggregate_trimmed_mean(const std::vector<CoordinateSample>& samples,
                                          double trim_fraction) {
  check_samples(samples);
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5))
    throw Error(ErrorCode::InvalidConfig, "trim_fraction must lie in [0, 0.5)");
  const std::size_t n = samples.front().values.size();
  const std::size_t t =
      static_cast<std::size_t>(std::ceil(trim_fraction * static_cast<double>(n)));
  if (2 * t >= n)
    throw Error(ErrorCode::TrimTooAggressive,
                "trimming " + std::to_string(2 * t) + " of " + std::to_string(n) + " values");

  AggregationDiagnostics diag;
  diag.retained_counts.assign(samples.size(), static_cast<std::uint32_t>(n - 2 * t));
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    std::vector<double> v = s.values;
    std::sort(v.begin(), v.end());
    const double sum = std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(t),
                                       v.end() - static_cast<std::ptrdiff_t>(t), 0.0);
    out.push_back(sum / static_cast<double>(n - 2 * t));
  }
  return make_outcome(std::move(out), std::move(diag));
}

AggregationOutcome aggregate_krum(const std::vector<ClientUpdate>& updates, std::uint32_t f) {
  const std::size_t n = updates.size();
  if (n < static_cast<std::size_t>(f) + 3)
    throw Error(ErrorCode::TooFewClients,
                "krum needs n >= f + 3 (n = " + std::to_string(n) + ", f = " + std::to_string(f) + ")");
  const std::size_t d = updates.front().gradient.dim();
  for (const auto& u : updates) {
    if (u.gradient.dim() != d) throw Error(ErrorCode::DimensionMismatch, "ragged round");
  }
  const std::size_t neighbours = n - static_cast<std::size_t>(f) - 2;

  std::vector<std::vector<double>> dist2(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      const auto& a = updates[i].gradient.values;
      const auto& b = updates[j].gradient.values;
      for (std::size_t c = 0; c < d; ++c) {
        const double delta = a[c] - b[c];
        acc += delta * delta;
      }
      dist2[i][j] = dist2[j][i] = acc;
    }
  }

  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    row.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(dist2[i][j]);
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours - 1),
                     row.end());
    const double score = std::accumulate(row.begin(),
                                         row.begin() + static_cast<std::ptrdiff_t>(neighbours), 0.0);
    const bool better = score < best_score ||
                        (score == best_score && updates[i].client_id < updates[best].client_id);
    if (better) {
      best = i;
      best_score = score;
    }
  }

  AggregationDiagnostics diag;
  diag.selected_client = updates[best].client_id;
  diag.retained_counts.assign(d, 1);  // one client's update survives
  return AggregationOutcome{updates[best].gradient, std::move(diag)};
}

AggregationOutcome aggregate_zeno(const std::vector<ClientUpdate>& updates,
                                  const ValidationOracle& validation_oracle,
                                  const GradientVector& current, double rho, std::uint32_t b,
                                  double gamma) {
  const std::size_t n = updates.size();
  if (n == 0) throw Error(ErrorCode::EmptyRound, "no updates");
  if (n <= b)
    throw Error(ErrorCode::TooFewClients,
                "zeno needs n > b (n = " + std::to_string(n) + ", b = " + std::to_string(b) + ")");
  const std::size_t d = current.dim();
  for (const auto& u : updates) {
    if (u.gradient.dim() != d) throw Error(ErrorCode::DimensionMismatch, "ragged round");
  }

  const double loss_now = validation_oracle(current);
  if (!std::isfinite(loss_now)) throw Error(ErrorCode::OracleFailure, "non-finite baseline loss");

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = updates[i].gradient.values;
    std::vector<double> candidate(d);
    double norm2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      candidate[c] = current.values[c] - gamma * g[c];
      norm2 += g[c] * g[c];
    }
    const double loss_step = validation_oracle(GradientVector::flat(std::move(candidate)));
    if (!std::isfinite(loss_step))
      throw Error(ErrorCode::OracleFailure,
                  "non-finite loss for client " + std::to_string(updates[i].client_id));
    scores[i] = loss_now - loss_step - rho * norm2;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    if (scores[a] != scores[c]) return scores[a] < scores[c];
    return updates[a].client_id < updates[c].client_id;
  });

  std::vector<double> out(d, 0.0);
  const std::size_t keep = n - b;
  for (std::size_t r = b; r < n; ++r) {
    const auto& g = updates[order[r]].gradient.values;
    for (std::size_t c = 0; c < d; ++c) out[c] += g[c];
  }
  for (double& v : out) v /= static_cast<double>(keep);

  AggregationDiagnostics diag;
  diag.retained_counts.assign(d, static_cast<std::uint32_t>(keep));
  return make_outcome(std::move(out), std::move(diag));
}

AggregationOutcome aggregate(const std::vector<ClientUpdate>& updates,
                             const AggregationConfig& config, const ZenoContext* zeno) {
  config.validate();
  switch (config.rule) {
    case AggregationRule::EMA:
      return aggregate_ema(transpose_to_coordinates(updates), config.k);
    case AggregationRule::Mean:
      return aggregate_mean(transpose_to_coordinates(updates));
    case AggregationRule::Median:
      return aggregate_median(transpose_to_coordinates(updates));
    case AggregationRule::TrimmedMean:
      return aggregate_trimmed_mean(transpose_to_coordinates(updates), config.trim_fraction);
    case AggregationRule::Krum:
      return aggregate_krum(updates, config.byzantine_count_f);
    case AggregationRule::Zeno: {
      if (zeno == nullptr || !zeno->oracle)
        throw Error(ErrorCode::OracleFailure, "zeno requires a validation oracle");
      return aggregate_zeno(updates, zeno->oracle, zeno->current, config.zeno_rho,
                            config.zeno_remove_b, config.zeno_gamma);
    }
  }
  throw Error(ErrorCode::InvalidConfig, "unknown rule");
}

}  // namespace ema

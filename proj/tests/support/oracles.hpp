#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracles {

inline double sort_pick_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[(n - 1) / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline double count_trimmed_mean(std::vector<double> v, double beta) {
  std::sort(v.begin(), v.end());
  const auto t = static_cast<std::size_t>(std::ceil(beta * static_cast<double>(v.size())));
  double sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = t; i + t < v.size(); ++i) {
    sum += v[i];
    ++kept;
  }
  return sum / static_cast<double>(kept);
}

/// Straight-line re-implementation of the whole estimated-mean rule for one
/// coordinate: sort, median, IQR fence from the untrimmed sample, filter,
/// quartiles of the filtered array, weighted blend. Plain loops throughout.
inline double ema_reference(std::vector<double> values, std::size_t n_clients, double k) {
  std::sort(values.begin(), values.end());
  const std::size_t len = values.size();
  double m;
  if (len % 2 == 1)
    m = values[len / 2];
  else
    m = (values[len / 2 - 1] + values[len / 2]) / 2.0;
  if (len < 4) return m;

  const std::size_t quar1 = len / 4;
  const double q1 = values[quar1 - 1];
  const double q3 = values[3 * quar1 - 1];
  const double iqr = q3 - q1;
  const double lower = q1 - k * iqr;
  const double upper = q3 + k * iqr;

  std::vector<double> aggregated;
  for (double g : values) {
    if (g >= lower && g <= upper) aggregated.push_back(g);
  }
  if (aggregated.size() < 4) return m;

  const std::size_t tq = aggregated.size() / 4;
  const double aq1 = aggregated[tq - 1];
  const double aq3 = aggregated[3 * tq - 1];
  const double w = 0.70 + 0.39 / static_cast<double>(n_clients);
  return w * (aq1 + aq3) / 2.0 + (1.0 - w) * m;
}

/// Krum score by brute force: sum of squared distances to the n-f-2 closest
/// other updates.
inline std::size_t krum_select(const std::vector<std::vector<double>>& updates, std::size_t f) {
  const std::size_t n = updates.size();
  const std::size_t neighbours = n - f - 2;
  std::size_t best = 0;
  double best_score = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> d2;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double acc = 0.0;
      for (std::size_t c = 0; c < updates[i].size(); ++c) {
        const double d = updates[i][c] - updates[j][c];
        acc += d * d;
      }
      d2.push_back(acc);
    }
    std::sort(d2.begin(), d2.end());
    const double score = std::accumulate(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(neighbours), 0.0);
    if (first || score < best_score) {
      best = i;
      best_score = score;
      first = false;
    }
  }
  return best;
}

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / 2.5066282746310005024;
}

inline double normal_cdf_ref(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

/// E[X_(r:n)] for a standard normal parent via composite Simpson quadrature
/// of z * f_(r)(z) with f_(r)(z) = r*C(n,r)*phi(z)*Phi(z)^(r-1)*(1-Phi(z))^(n-r).
inline double normal_order_stat_mean(std::size_t r, std::size_t n) {
  const double log_coeff = std::lgamma(static_cast<double>(n) + 1.0) -
                           std::lgamma(static_cast<double>(r)) -
                           std::lgamma(static_cast<double>(n - r) + 1.0);
  auto integrand = [&](double z) {
    const double cdf = normal_cdf_ref(z);
    if (cdf <= 0.0 || cdf >= 1.0) return 0.0;
    const double log_density = log_coeff + std::log(normal_pdf(z)) +
                               (static_cast<double>(r) - 1.0) * std::log(cdf) +
                               static_cast<double>(n - r) * std::log1p(-cdf);
    return z * std::exp(log_density);
  };
  const double lo = -12.0, hi = 12.0;
  const std::size_t steps = 40000;  // even
  const double h = (hi - lo) / static_cast<double>(steps);
  double acc = integrand(lo) + integrand(hi);
  for (std::size_t i = 1; i < steps; ++i)
    acc += integrand(lo + h * static_cast<double>(i)) * ((i % 2 == 1) ? 4.0 : 2.0);
  return acc * h / 3.0;
}

/// Kolmogorov distance of a sample from Uniform(0,1).
inline double ks_distance_uniform(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double cdf = values[i];
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
  }
  return d;
}

}  // namespace oracles

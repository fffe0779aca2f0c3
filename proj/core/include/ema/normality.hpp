#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ema/gradient.hpp"
#include "ema/quantile.hpp"

namespace ema {

enum class NormalityTestKind { ShapiroWilk, AndersonDarling, Both };

const char* test_kind_name(NormalityTestKind kind);
std::optional<NormalityTestKind> test_kind_from_name(const std::string& name);

struct NormalityTestResult {
  /// W for Shapiro-Wilk, raw A^2 for Anderson-Darling.
  double statistic = 0.0;
  /// Shapiro-Wilk only.
  std::optional<double> p_value;
  /// Anderson-Darling only: A*^2 = A^2 * (1 + 0.75/n + 2.25/n^2) and the
  /// critical value it is compared against.
  std::optional<double> modified_statistic;
  std::optional<double> critical_value;
  double alpha = 0.05;
  bool is_normal = false;
};

/// Standard normal CDF and its inverse (Wichura's AS 241, double precision).
double normal_cdf(double z);
double normal_quantile(double p);

/// Royston's AS R94 approximation of the Shapiro-Wilk test.
/// Requires 3 <= n <= 5000 and a non-constant sample.
NormalityTestResult shapiro_wilk(const SortedSample& sample, double alpha);

/// Anderson-Darling with mean/variance estimated from the sample, compared
/// against the case-3 table via A*^2 = A^2*(1 + 0.75/n + 2.25/n^2).
/// Supported alphas: 0.10, 0.05, 0.025, 0.01. Requires n >= 8, non-constant.
NormalityTestResult anderson_darling(const SortedSample& sample, double alpha);

struct PretestReport {
  std::uint64_t total_tests = 0;
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
  /// Constant coordinates count as passing and are tallied here too.
  std::uint64_t constant_count = 0;
  /// Coordinates whose test raised (e.g. unsupported size); not passing.
  std::uint64_t error_count = 0;
  double rate = 0.0;
  double alpha = 0.05;
  NormalityTestKind kind = NormalityTestKind::ShapiroWilk;
};

/// Runs the chosen test over each coordinate's cross-client sample.
/// kind == Both passes a coordinate only when both tests accept.
PretestReport pretest_round(const std::vector<CoordinateSample>& samples, double alpha,
                            NormalityTestKind kind);

std::string pretest_report_to_json(const PretestReport& report);

}  // namespace ema

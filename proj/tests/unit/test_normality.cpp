#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ema/normality.hpp"
#include "ema/rng.hpp"
#include "support/oracles.hpp"

using namespace ema;

namespace {

SortedSample gaussian_sample(Rng& rng, std::size_t n, double mu = 0.0, double sigma = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(mu, sigma);
  return SortedSample::from_unsorted(std::move(v));
}

}  // namespace

// Golden fixtures: statistics computed with scipy.stats.shapiro /
// scipy.stats.anderson (scipy 1.x) on the literal samples below.
TEST_CASE("shapiro-wilk golden fixtures match the reference to 4 decimals") {
  const std::vector<double> n11{2.14, -0.73, 1.02, 0.44, -1.37, 0.28,
                                3.91, -0.16, 0.85, 1.66, -2.05};
  const auto r11 = shapiro_wilk(SortedSample::from_unsorted(n11), 0.05);
  CHECK(r11.statistic == doctest::Approx(0.9832938804818225).epsilon(5e-5));
  CHECK(*r11.p_value == doctest::Approx(0.9816876430934931).epsilon(5e-5));
  CHECK(r11.is_normal);

  const std::vector<double> n12{0.5, 1.1, -0.4, 2.2, 0.0, -1.3, 0.8, 1.9, -0.7, 0.3, 1.4, -2.1};
  const auto r12 = shapiro_wilk(SortedSample::from_unsorted(n12), 0.05);
  CHECK(r12.statistic == doctest::Approx(0.9821872905400773).epsilon(5e-5));
  CHECK(*r12.p_value == doctest::Approx(0.9908974806720248).epsilon(5e-5));
}

TEST_CASE("anderson-darling golden fixtures match the reference to 4 decimals") {
  const std::vector<double> n12{0.5, 1.1, -0.4, 2.2, 0.0, -1.3, 0.8, 1.9, -0.7, 0.3, 1.4, -2.1};
  const auto r = anderson_darling(SortedSample::from_unsorted(n12), 0.05);
  CHECK(r.statistic == doctest::Approx(0.1088934635140415).epsilon(5e-5));
  CHECK(*r.critical_value == 0.752);
  CHECK(r.is_normal);

  const std::vector<double> exp9{0.12, 0.35, 0.51, 0.77, 1.02, 1.45, 2.10, 3.3, 5.6};
  const auto re = anderson_darling(SortedSample::from_unsorted(exp9), 0.05);
  CHECK(re.statistic == doctest::Approx(0.6419358299310058).epsilon(5e-5));
}

TEST_CASE("a joint n=50 fixture matches W, p and A^2") {
  const std::vector<double> x50{
      1.1228,  0.2087,  1.0935, 0.6439,  -0.8707, -2.2122, 2.3274,  0.0469,  -2.4468, -1.7559,
      0.5541,  1.2847,  -0.2136, 3.4656, 0.1097,  -1.7983, 0.6947,  -1.6158, 0.6984,  2.5365,
      0.5151,  2.3238,  -0.3381, 1.8468, -0.3883, 3.0659,  1.7144,  -0.1276, -0.3651, 1.0578,
      1.8152,  -1.697,  0.1258, -1.7878, -0.5175, 2.5174,  0.8813,  1.8116,  -0.788,  -0.5957,
      2.7093,  -0.7034, 1.2878, 2.3573,  -1.2226, 2.2389,  3.6985,  1.3618,  2.6038,  -1.3215};
  const auto sample = SortedSample::from_unsorted(x50);
  const auto sw = shapiro_wilk(sample, 0.05);
  CHECK(sw.statistic == doctest::Approx(0.976527393591225).epsilon(5e-5));
  CHECK(*sw.p_value == doctest::Approx(0.41651644640190755).epsilon(5e-5));
  const auto ad = anderson_darling(sample, 0.05);
  CHECK(ad.statistic == doctest::Approx(0.3005931007844538).epsilon(5e-5));
  CHECK(*ad.modified_statistic ==
        doctest::Approx(0.3005931007844538 * (1.0 + 0.75 / 50 + 2.25 / 2500)).epsilon(1e-10));
}

TEST_CASE("preconditions: size ranges, constants, alphas") {
  CHECK_THROWS_AS((void)shapiro_wilk(SortedSample::from_sorted({1, 2}), 0.05), Error);
  CHECK_THROWS_AS((void)shapiro_wilk(SortedSample::from_sorted({3, 3, 3, 3}), 0.05), Error);
  CHECK_THROWS_AS((void)anderson_darling(SortedSample::from_sorted({1, 2, 3, 4, 5, 6, 7}), 0.05),
                  Error);
  CHECK_THROWS_AS(
      (void)anderson_darling(SortedSample::from_sorted({1, 2, 3, 4, 5, 6, 7, 9}), 0.03), Error);
  // supported alpha grid works
  for (double alpha : {0.10, 0.05, 0.025, 0.01})
    CHECK_NOTHROW((void)anderson_darling(SortedSample::from_sorted({1, 2, 3, 4, 5, 6, 7, 9}), alpha));
}

TEST_CASE("both tests are location-scale invariant") {
  Rng rng(17);
  const auto base = gaussian_sample(rng, 60);
  std::vector<double> moved;
  for (double x : base.values()) moved.push_back(2.5 * x - 7.0);
  const auto scaled = SortedSample::from_sorted(std::move(moved));

  CHECK(shapiro_wilk(scaled, 0.05).statistic ==
        doctest::Approx(shapiro_wilk(base, 0.05).statistic).epsilon(1e-10));
  CHECK(anderson_darling(scaled, 0.05).statistic ==
        doctest::Approx(anderson_darling(base, 0.05).statistic).epsilon(1e-10));
}

TEST_CASE("null calibration at n = 50") {
  Rng rng(2718);
  int sw_pass = 0, ad_pass = 0, uniform_reject = 0, exp_reject = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    const auto normal = gaussian_sample(rng, 50, 0.0, 1.0);
    if (shapiro_wilk(normal, 0.05).is_normal) ++sw_pass;
    if (anderson_darling(gaussian_sample(rng, 50, 5.0, 2.0), 0.05).is_normal) ++ad_pass;

    std::vector<double> u(50), e(50);
    for (auto& x : u) x = rng.uniform();
    for (auto& x : e) x = -std::log(rng.uniform());
    if (!shapiro_wilk(SortedSample::from_unsorted(u), 0.05).is_normal) ++uniform_reject;
    if (!anderson_darling(SortedSample::from_unsorted(e), 0.05).is_normal) ++exp_reject;
  }
  const double sw_rate = sw_pass / static_cast<double>(reps);
  const double ad_rate = ad_pass / static_cast<double>(reps);
  CHECK(sw_rate >= 0.93);
  CHECK(sw_rate <= 0.97);
  CHECK(ad_rate >= 0.93);
  CHECK(ad_rate <= 0.97);
  CHECK(uniform_reject / static_cast<double>(reps) >= 0.3);
  CHECK(exp_reject / static_cast<double>(reps) >= 0.8);
}

TEST_CASE("shapiro-wilk p-values are close to uniform under the null") {
  Rng rng(31415);
  std::vector<double> ps;
  for (int r = 0; r < 2000; ++r)
    ps.push_back(*shapiro_wilk(gaussian_sample(rng, 50), 0.05).p_value);
  CHECK(oracles::ks_distance_uniform(ps) < 0.05);
}

TEST_CASE("pretest over i.i.d. Gaussian coordinates sits near 1 - alpha") {
  Rng rng(64);
  std::vector<CoordinateSample> samples(10000);
  for (std::size_t j = 0; j < samples.size(); ++j) {
    samples[j].coordinate_index = j;
    samples[j].values.resize(50);
    for (auto& x : samples[j].values) x = rng.normal(0.0, 1.0);
  }
  const auto report = pretest_round(samples, 0.05, NormalityTestKind::ShapiroWilk);
  CHECK(report.total_tests == 10000);
  CHECK(report.rate >= 0.93);
  CHECK(report.rate <= 0.97);
  CHECK(report.passed + report.failed + report.error_count == report.total_tests);
}

TEST_CASE("constant coordinates pass and are tallied") {
  std::vector<CoordinateSample> samples(100);
  for (std::size_t j = 0; j < samples.size(); ++j) {
    samples[j].coordinate_index = j;
    samples[j].values.assign(50, 1.5);
  }
  const auto report = pretest_round(samples, 0.05, NormalityTestKind::Both);
  CHECK(report.rate == 1.0);
  CHECK(report.constant_count == 100);
}

TEST_CASE("a Gaussian/heavy-tail mixture lands strictly between the pure rates") {
  Rng rng(1900);
  auto build = [&](double heavy_fraction) {
    std::vector<CoordinateSample> samples(600);
    for (std::size_t j = 0; j < samples.size(); ++j) {
      samples[j].coordinate_index = j;
      samples[j].values.resize(50);
      const bool heavy = static_cast<double>(j) < heavy_fraction * 600.0;
      for (auto& x : samples[j].values) {
        if (heavy) {
          const double u = rng.normal(0.0, 1.0);
          x = u * u * u;  // strongly non-normal
        } else {
          x = rng.normal(0.0, 1.0);
        }
      }
    }
    return samples;
  };
  const double pure_gauss = pretest_round(build(0.0), 0.05, NormalityTestKind::Both).rate;
  const double pure_heavy = pretest_round(build(1.0), 0.05, NormalityTestKind::Both).rate;
  const double mixed = pretest_round(build(0.2), 0.05, NormalityTestKind::Both).rate;
  CHECK(mixed < pure_gauss);
  CHECK(mixed > pure_heavy);
}

TEST_CASE("pretest rate ignores coordinate order") {
  Rng rng(3);
  std::vector<CoordinateSample> samples(200);
  for (std::size_t j = 0; j < samples.size(); ++j) {
    samples[j].coordinate_index = j;
    samples[j].values.resize(40);
    for (auto& x : samples[j].values) x = rng.normal(0.0, 1.0) + (j % 7 == 0 ? rng.uniform() * 9 : 0.0);
  }
  auto reversed = samples;
  std::reverse(reversed.begin(), reversed.end());
  const auto a = pretest_round(samples, 0.05, NormalityTestKind::AndersonDarling);
  const auto b = pretest_round(reversed, 0.05, NormalityTestKind::AndersonDarling);
  CHECK(a.passed == b.passed);
  CHECK(a.rate == b.rate);
}

TEST_CASE("pretest report serializes the documented fields") {
  PretestReport report;
  report.total_tests = 10;
  report.passed = 8;
  report.failed = 2;
  report.rate = 0.8;
  report.alpha = 0.05;
  report.kind = NormalityTestKind::Both;
  const std::string json = pretest_report_to_json(report);
  CHECK(json.find("\"total\": 10") != std::string::npos);
  CHECK(json.find("\"rate\": 0.8") != std::string::npos);
  CHECK(json.find("\"kind\": \"both\"") != std::string::npos);
  CHECK(json.find("\"constant_count\": 0") != std::string::npos);
  CHECK(json.find("\"error_count\": 0") != std::string::npos);
}

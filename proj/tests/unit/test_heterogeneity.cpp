#include <doctest.h>

#include <cmath>

#include "ema/heterogeneity.hpp"
#include "ema/rng.hpp"

using namespace ema;

TEST_CASE("the 2.4 / 1.4 pair crosses a 0.25 threshold") {
  const auto report = detect_non_iid({{0, 2.4}, {1, 1.4}}, 0.25);
  // independent arithmetic: mu = 1.9, sigma = sqrt(((0.5)^2 + (0.5)^2)/2) = 0.5
  const double expected_cv = 0.5 / 1.9;
  CHECK(report.mu == doctest::Approx(1.9).epsilon(1e-15));
  CHECK(report.sigma == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(report.cv == doctest::Approx(expected_cv).epsilon(1e-15));
  CHECK(report.verdict == HeterogeneityVerdict::LikelyNonIID);
  CHECK(std::string(verdict_message(report.verdict)) == "The dataset is likely non-iid.");
}

TEST_CASE("equal losses are IID for any positive threshold") {
  for (double d : {0.01, 0.25, 5.0}) {
    const auto report = detect_non_iid({{0, 3.3}, {1, 3.3}, {2, 3.3}}, d);
    CHECK(report.cv <= 1e-12);  // only fp rounding of the mean away from 0
    CHECK(report.verdict == HeterogeneityVerdict::LikelyIID);
  }
}

TEST_CASE("all-zero losses are undefined, not infinite") {
  const auto report = detect_non_iid({{0, 0.0}, {1, 0.0}}, 0.25);
  CHECK(report.verdict == HeterogeneityVerdict::Undefined);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS((void)detect_non_iid({{0, 1.0}}, 0.25), Error);
  CHECK_THROWS_AS((void)detect_non_iid({{0, 1.0}, {1, 2.0}}, 0.0), Error);
  CHECK_THROWS_AS((void)detect_non_iid({{0, 1.0}, {1, -2.0}}, 0.25), Error);
}

TEST_CASE("cv is scale-invariant but not shift-invariant") {
  const std::vector<ClientLossRecord> base{{0, 2.4}, {1, 1.4}, {2, 1.9}};
  const auto ref = detect_non_iid(base, 0.25);
  for (double c : {0.01, 1.0, 100.0}) {
    std::vector<ClientLossRecord> scaled;
    for (const auto& r : base) scaled.push_back({r.client_id, c * r.loss});
    const auto report = detect_non_iid(scaled, 0.25);
    CHECK(report.cv == doctest::Approx(ref.cv).epsilon(1e-12));
    CHECK(report.verdict == ref.verdict);
  }
  for (double shift : {0.5, 2.0, 10.0}) {
    std::vector<ClientLossRecord> moved;
    for (const auto& r : base) moved.push_back({r.client_id, r.loss + shift});
    CHECK(detect_non_iid(moved, 0.25).cv < ref.cv);
  }
}

TEST_CASE("raising the threshold never flips IID to non-IID") {
  Rng rng(10);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<ClientLossRecord> losses;
    for (std::uint32_t i = 0; i < 10; ++i) losses.push_back({i, 0.5 + rng.uniform() * 3.0});
    HeterogeneityVerdict prev = detect_non_iid(losses, 0.05).verdict;
    for (double d : {0.1, 0.2, 0.4, 0.8, 1.6}) {
      const auto verdict = detect_non_iid(losses, d).verdict;
      if (prev == HeterogeneityVerdict::LikelyIID)
        CHECK(verdict == HeterogeneityVerdict::LikelyIID);
      prev = verdict;
    }
  }
}

TEST_CASE("mse evaluation: perfect fit, zero model, double-loop oracle") {
  EvalDataset data;
  data.n_classes = 4;
  data.features = {{1.0, 0.0}, {0.0, 1.0}, {2.0, 2.0}};
  data.labels = {0, 3, 1};

  const PredictFn perfect = [&](const std::vector<double>& x) {
    std::vector<double> out(4, 0.0);
    if (x == data.features[0]) out[0] = 1.0;
    if (x == data.features[1]) out[3] = 1.0;
    if (x == data.features[2]) out[1] = 1.0;
    return out;
  };
  CHECK(evaluate_model_on_client(perfect, data) == 0.0);

  const PredictFn zero = [](const std::vector<double>&) { return std::vector<double>(4, 0.0); };
  CHECK(evaluate_model_on_client(zero, data) == doctest::Approx(1.0 / 4.0).epsilon(1e-15));

  Rng rng(88);
  std::vector<std::vector<double>> outputs;
  EvalDataset fixture;
  fixture.n_classes = 3;
  for (int i = 0; i < 20; ++i) {
    fixture.features.push_back({static_cast<double>(i)});
    fixture.labels.push_back(static_cast<std::uint32_t>(rng.uniform_index(3)));
    outputs.push_back({rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1)});
  }
  const PredictFn table = [&](const std::vector<double>& x) {
    return outputs[static_cast<std::size_t>(x[0])];
  };
  double acc = 0.0;
  for (int i = 0; i < 20; ++i) {
    for (int c = 0; c < 3; ++c) {
      const double target = (static_cast<std::uint32_t>(c) == fixture.labels[i]) ? 1.0 : 0.0;
      acc += (outputs[i][c] - target) * (outputs[i][c] - target);
    }
  }
  acc /= 20.0 * 3.0;
  CHECK(evaluate_model_on_client(table, fixture) == doctest::Approx(acc).epsilon(1e-10));

  EvalDataset empty;
  empty.n_classes = 2;
  CHECK_THROWS_AS((void)evaluate_model_on_client(zero, empty), Error);
}

TEST_CASE("report serialization carries the verdict and rounded losses") {
  const auto report = detect_non_iid({{0, 2.40004}, {1, 1.4}}, 0.25);
  const std::string json = heterogeneity_report_to_json(report);
  CHECK(json.find("\"verdict\": \"LikelyNonIID\"") != std::string::npos);
  CHECK(json.find("The dataset is likely non-iid.") != std::string::npos);
  const std::string csv = heterogeneity_report_to_csv(report);
  CHECK(csv == "client_id,loss\n0,2.4000\n1,1.4000\n");
}

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ema/errors.hpp"

namespace ema {

struct ClientLossRecord {
  std::uint32_t client_id = 0;
  double loss = 0.0;
};

enum class HeterogeneityVerdict { LikelyNonIID, LikelyIID, Undefined };

const char* verdict_name(HeterogeneityVerdict verdict);
/// The exact sentence the detector prints for each verdict.
const char* verdict_message(HeterogeneityVerdict verdict);

struct HeterogeneityReport {
  std::vector<ClientLossRecord> losses;
  double mu = 0.0;
  /// Population (1/n) standard deviation.
  double sigma = 0.0;
  double cv = 0.0;
  double threshold_d = 0.25;
  HeterogeneityVerdict verdict = HeterogeneityVerdict::Undefined;
};

/// Labeled dataset view for per-client evaluation; targets are one-hot rows.
struct EvalDataset {
  /// Row-major feature matrix, one row per example.
  std::vector<std::vector<double>> features;
  std::vector<std::uint32_t> labels;
  std::size_t n_classes = 0;
};

/// Raw score vector (length n_classes) for one feature row.
using PredictFn = std::function<std::vector<double>(const std::vector<double>&)>;

/// Mean squared error between the model's raw outputs and one-hot targets,
/// averaged over every entry of the n x C output matrix.
double evaluate_model_on_client(const PredictFn& model, const EvalDataset& dataset);

/// CV-threshold check over per-client losses. Needs >= 2 records and d > 0;
/// mu below 1e-12 yields Undefined instead of dividing by ~zero.
HeterogeneityReport detect_non_iid(const std::vector<ClientLossRecord>& losses, double d);

std::string heterogeneity_report_to_json(const HeterogeneityReport& report);
/// One row per client: `client_id,loss` with losses display-rounded to four
/// decimal places.
std::string heterogeneity_report_to_csv(const HeterogeneityReport& report);

}  // namespace ema

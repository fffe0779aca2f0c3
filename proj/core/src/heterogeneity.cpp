#include "ema/heterogeneity.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ema {

const char* verdict_name(HeterogeneityVerdict verdict) {
  switch (verdict) {
    case HeterogeneityVerdict::LikelyNonIID: return "LikelyNonIID";
    case HeterogeneityVerdict::LikelyIID: return "LikelyIID";
    case HeterogeneityVerdict::Undefined: return "Undefined";
  }
  return "?";
}

const char* verdict_message(HeterogeneityVerdict verdict) {
  switch (verdict) {
    case HeterogeneityVerdict::LikelyNonIID: return "The dataset is likely non-iid.";
    case HeterogeneityVerdict::LikelyIID: return "The dataset is likely iid.";
    case HeterogeneityVerdict::Undefined: return "The dataset verdict is undefined (mean loss ~ 0).";
  }
  return "?";
}

double evaluate_model_on_client(const PredictFn& model, const EvalDataset& dataset) {
  if (dataset.features.empty()) throw Error(ErrorCode::EmptyDataset, "client has no examples");
  if (dataset.labels.size() != dataset.features.size())
    throw Error(ErrorCode::DimensionMismatch, "labels/features size mismatch");
  if (dataset.n_classes == 0) throw Error(ErrorCode::InvalidConfig, "n_classes must be > 0");

  double acc = 0.0;
  for (std::size_t i = 0; i < dataset.features.size(); ++i) {
    const std::vector<double> out = model(dataset.features[i]);
    if (out.size() != dataset.n_classes)
      throw Error(ErrorCode::DimensionMismatch, "model output width != n_classes");
    if (dataset.labels[i] >= dataset.n_classes)
      throw Error(ErrorCode::InvalidConfig, "label out of range");
    for (std::size_t c = 0; c < out.size(); ++c) {
      const double target = (c == dataset.labels[i]) ? 1.0 : 0.0;
      const double diff = out[c] - target;
      acc += diff * diff;
    }
  }
  return acc / (static_cast<double>(dataset.features.size()) *
                static_cast<double>(dataset.n_classes));
}

HeterogeneityReport detect_non_iid(const std::vector<ClientLossRecord>& losses, double d) {
  if (losses.size() < 2)
    throw Error(ErrorCode::TooFewClients, "need at least 2 loss records");
  if (!(d > 0.0)) throw Error(ErrorCode::InvalidConfig, "threshold d must be > 0");
  for (const auto& r : losses) {
    if (!std::isfinite(r.loss) || r.loss < 0.0)
      throw Error(ErrorCode::NonFiniteValue,
                  "loss for client " + std::to_string(r.client_id) + " invalid");
  }

  HeterogeneityReport report;
  report.losses = losses;
  report.threshold_d = d;

  const double n = static_cast<double>(losses.size());
  double sum = 0.0;
  for (const auto& r : losses) sum += r.loss;
  report.mu = sum / n;

  double ss = 0.0;
  for (const auto& r : losses) ss += (r.loss - report.mu) * (r.loss - report.mu);
  report.sigma = std::sqrt(ss / n);

  constexpr double kEpsilon = 1e-12;
  if (report.mu <= kEpsilon) {
    report.cv = 0.0;
    report.verdict = HeterogeneityVerdict::Undefined;
    return report;
  }
  report.cv = report.sigma / report.mu;
  report.verdict = report.cv > d ? HeterogeneityVerdict::LikelyNonIID
                                 : HeterogeneityVerdict::LikelyIID;
  return report;
}

std::string heterogeneity_report_to_json(const HeterogeneityReport& report) {
  nlohmann::json clients = nlohmann::json::array();
  for (const auto& r : report.losses)
    clients.push_back({{"client_id", r.client_id}, {"loss", r.loss}});
  nlohmann::json j{
      {"losses", clients},
      {"mu", report.mu},
      {"sigma", report.sigma},
      {"cv", report.cv},
      {"threshold_d", report.threshold_d},
      {"verdict", verdict_name(report.verdict)},
      {"message", verdict_message(report.verdict)},
  };
  return j.dump(2);
}

std::string heterogeneity_report_to_csv(const HeterogeneityReport& report) {
  std::ostringstream os;
  os << "client_id,loss\n";
  char buf[32];
  for (const auto& r : report.losses) {
    std::snprintf(buf, sizeof(buf), "%.4f", r.loss);
    os << r.client_id << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace ema

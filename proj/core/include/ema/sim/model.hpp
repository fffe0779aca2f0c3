#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ema/gradient.hpp"
#include "ema/heterogeneity.hpp"
#include "ema/rng.hpp"
#include "ema/sim/dataset.hpp"

namespace ema::sim {

enum class ModelKind { LogisticRegression, Mlp };
enum class LossKind { CrossEntropy, MseOneHot };

const char* model_kind_name(ModelKind kind);
const char* loss_kind_name(LossKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::LogisticRegression;
  std::size_t input_dim = 0;
  std::size_t n_classes = 0;
  std::size_t hidden_units = 16;
  LossKind loss = LossKind::CrossEntropy;

  std::size_t param_count() const;
};

/// Flat-parameter classifier. Logistic regression: scores = W x + b.
/// Mlp: one tanh hidden layer. Raw scores are what MSE evaluation sees;
/// CrossEntropy applies softmax on top of them.
class Model {
 public:
  /// Logistic regression starts at zero; the Mlp gets small seeded uniform
  /// weights to break hidden-unit symmetry.
  static Model initialized(const ModelSpec& spec, Rng& rng);

  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  void set_parameters(std::vector<double> params);

  /// Applies one gradient step: params -= lr * update.
  void apply_update(const GradientVector& update, double learning_rate);

  std::vector<double> raw_scores(const std::vector<double>& features) const;

  /// Exact analytic gradient of the configured loss, averaged over the batch.
  GradientVector gradient(const Dataset& data, std::span<const std::size_t> batch) const;

  double mean_loss(const Dataset& data) const;
  double accuracy(const Dataset& data) const;

  /// Adapter for the per-client MSE evaluation.
  PredictFn predictor() const;

 private:
  Model(ModelSpec spec, std::vector<double> params)
      : spec_(spec), params_(std::move(params)) {}

  ModelSpec spec_;
  std::vector<double> params_;
};

/// Loss of `spec`-shaped parameters on a dataset without constructing a
/// mutable model; used for validation oracles.
double loss_at(const ModelSpec& spec, const std::vector<double>& params, const Dataset& data);

}  // namespace ema::sim

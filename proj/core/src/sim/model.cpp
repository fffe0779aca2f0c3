#include "ema/sim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ema::sim {

namespace {

constexpr std::uint64_t kStreamModelInit = 0x696e6974ULL;  // "init"

void softmax_inplace(std::vector<double>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

struct MlpLayout {
  std::size_t w1, b1, w2, b2;  // offsets
};

MlpLayout mlp_layout(const ModelSpec& s) {
  MlpLayout l;
  l.w1 = 0;
  l.b1 = l.w1 + s.hidden_units * s.input_dim;
  l.w2 = l.b1 + s.hidden_units;
  l.b2 = l.w2 + s.n_classes * s.hidden_units;
  return l;
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::LogisticRegression: return "logistic_regression";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::CrossEntropy: return "cross_entropy";
    case LossKind::MseOneHot: return "mse_one_hot";
  }
  return "?";
}

std::size_t ModelSpec::param_count() const {
  if (input_dim == 0 || n_classes == 0)
    throw Error(ErrorCode::InvalidConfig, "model dimensions unset");
  switch (kind) {
    case ModelKind::LogisticRegression: return n_classes * input_dim + n_classes;
    case ModelKind::Mlp:
      return hidden_units * input_dim + hidden_units + n_classes * hidden_units + n_classes;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown model kind");
}

Model Model::initialized(const ModelSpec& spec, Rng& rng) {
  std::vector<double> params(spec.param_count(), 0.0);
  if (spec.kind == ModelKind::Mlp) {
    for (double& p : params) p = 0.2 * (rng.uniform() - 0.5);
  }
  return Model(spec, std::move(params));
}

void Model::set_parameters(std::vector<double> params) {
  if (params.size() != spec_.param_count())
    throw Error(ErrorCode::DimensionMismatch, "parameter count mismatch");
  params_ = std::move(params);
}

void Model::apply_update(const GradientVector& update, double learning_rate) {
  if (update.dim() != params_.size())
    throw Error(ErrorCode::DimensionMismatch, "update dimension != parameter count");
  for (std::size_t i = 0; i < params_.size(); ++i)
    params_[i] -= learning_rate * update.values[i];
}

std::vector<double> Model::raw_scores(const std::vector<double>& features) const {
  if (features.size() != spec_.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "feature width != input_dim");
  const std::size_t c_count = spec_.n_classes;
  std::vector<double> scores(c_count, 0.0);
  switch (spec_.kind) {
    case ModelKind::LogisticRegression: {
      const double* w = params_.data();
      const double* b = params_.data() + c_count * spec_.input_dim;
      for (std::size_t c = 0; c < c_count; ++c) {
        double acc = b[c];
        const double* row = w + c * spec_.input_dim;
        for (std::size_t j = 0; j < spec_.input_dim; ++j) acc += row[j] * features[j];
        scores[c] = acc;
      }
      break;
    }
    case ModelKind::Mlp: {
      const MlpLayout l = mlp_layout(spec_);
      std::vector<double> hidden(spec_.hidden_units);
      for (std::size_t h = 0; h < spec_.hidden_units; ++h) {
        double acc = params_[l.b1 + h];
        const double* row = params_.data() + l.w1 + h * spec_.input_dim;
        for (std::size_t j = 0; j < spec_.input_dim; ++j) acc += row[j] * features[j];
        hidden[h] = std::tanh(acc);
      }
      for (std::size_t c = 0; c < c_count; ++c) {
        double acc = params_[l.b2 + c];
        const double* row = params_.data() + l.w2 + c * spec_.hidden_units;
        for (std::size_t h = 0; h < spec_.hidden_units; ++h) acc += row[h] * hidden[h];
        scores[c] = acc;
      }
      break;
    }
  }
  return scores;
}

GradientVector Model::gradient(const Dataset& data, std::span<const std::size_t> batch) const {
  if (batch.empty()) throw Error(ErrorCode::EmptyDataset, "empty batch");
  const std::size_t c_count = spec_.n_classes;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> grad(params_.size(), 0.0);

  // dL/dscore per example, shared by both architectures:
  //  CrossEntropy: softmax(scores) - onehot
  //  MseOneHot:    2*(scores - onehot)/C   (loss averaged over all entries)
  auto score_grad = [&](std::vector<double> scores, std::uint32_t label) {
    if (spec_.loss == LossKind::CrossEntropy) {
      softmax_inplace(scores);
      scores[label] -= 1.0;
    } else {
      for (std::size_t c = 0; c < scores.size(); ++c) {
        const double target = (c == label) ? 1.0 : 0.0;
        scores[c] = 2.0 * (scores[c] - target) / static_cast<double>(c_count);
      }
    }
    return scores;
  };

  switch (spec_.kind) {
    case ModelKind::LogisticRegression: {
      for (std::size_t idx : batch) {
        const auto& x = data.features[idx];
        const std::vector<double> dz = score_grad(raw_scores(x), data.labels[idx]);
        for (std::size_t c = 0; c < c_count; ++c) {
          double* wrow = grad.data() + c * spec_.input_dim;
          for (std::size_t j = 0; j < spec_.input_dim; ++j) wrow[j] += dz[c] * x[j] * inv_b;
          grad[c_count * spec_.input_dim + c] += dz[c] * inv_b;
        }
      }
      break;
    }
    case ModelKind::Mlp: {
      const MlpLayout l = mlp_layout(spec_);
      std::vector<double> hidden(spec_.hidden_units), pre(spec_.hidden_units);
      for (std::size_t idx : batch) {
        const auto& x = data.features[idx];
        for (std::size_t h = 0; h < spec_.hidden_units; ++h) {
          double acc = params_[l.b1 + h];
          const double* row = params_.data() + l.w1 + h * spec_.input_dim;
          for (std::size_t j = 0; j < spec_.input_dim; ++j) acc += row[j] * x[j];
          pre[h] = acc;
          hidden[h] = std::tanh(acc);
        }
        std::vector<double> scores(c_count);
        for (std::size_t c = 0; c < c_count; ++c) {
          double acc = params_[l.b2 + c];
          const double* row = params_.data() + l.w2 + c * spec_.hidden_units;
          for (std::size_t h = 0; h < spec_.hidden_units; ++h) acc += row[h] * hidden[h];
          scores[c] = acc;
        }
        const std::vector<double> dz = score_grad(std::move(scores), data.labels[idx]);
        std::vector<double> dh(spec_.hidden_units, 0.0);
        for (std::size_t c = 0; c < c_count; ++c) {
          double* wrow = grad.data() + l.w2 + c * spec_.hidden_units;
          const double* w2row = params_.data() + l.w2 + c * spec_.hidden_units;
          for (std::size_t h = 0; h < spec_.hidden_units; ++h) {
            wrow[h] += dz[c] * hidden[h] * inv_b;
            dh[h] += dz[c] * w2row[h];
          }
          grad[l.b2 + c] += dz[c] * inv_b;
        }
        for (std::size_t h = 0; h < spec_.hidden_units; ++h) {
          const double t = std::tanh(pre[h]);
          const double dpre = dh[h] * (1.0 - t * t);
          double* wrow = grad.data() + l.w1 + h * spec_.input_dim;
          for (std::size_t j = 0; j < spec_.input_dim; ++j) wrow[j] += dpre * x[j] * inv_b;
          grad[l.b1 + h] += dpre * inv_b;
        }
      }
      break;
    }
  }
  return GradientVector::flat(std::move(grad));
}

double Model::mean_loss(const Dataset& data) const {
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "empty dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> scores = raw_scores(data.features[i]);
    if (spec_.loss == LossKind::CrossEntropy) {
      softmax_inplace(scores);
      total += -std::log(std::max(scores[data.labels[i]], 1e-300));
    } else {
      double acc = 0.0;
      for (std::size_t c = 0; c < scores.size(); ++c) {
        const double target = (c == data.labels[i]) ? 1.0 : 0.0;
        acc += (scores[c] - target) * (scores[c] - target);
      }
      total += acc / static_cast<double>(scores.size());
    }
  }
  return total / static_cast<double>(data.size());
}

double Model::accuracy(const Dataset& data) const {
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::vector<double> scores = raw_scores(data.features[i]);
    const auto best = static_cast<std::uint32_t>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
    if (best == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

PredictFn Model::predictor() const {
  // copies the parameters so the closure stays valid after further training
  Model snapshot = *this;
  return [snapshot](const std::vector<double>& features) {
    return snapshot.raw_scores(features);
  };
}

double loss_at(const ModelSpec& spec, const std::vector<double>& params, const Dataset& data) {
  Rng rng = Rng::keyed(0, kStreamModelInit);
  Model m = Model::initialized(spec, rng);
  m.set_parameters(params);
  return m.mean_loss(data);
}

}  // namespace ema::sim

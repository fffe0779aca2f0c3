#include "ema/sim/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ema::sim {

namespace {

constexpr std::uint64_t kStreamData = 0x64617461ULL;   // "data"
constexpr std::uint64_t kStreamSplit = 0x73706c74ULL;  // "splt"
constexpr std::uint64_t kStreamInit = 0x696e6974ULL;   // "init"
constexpr std::uint64_t kStreamBatch = 0x62617463ULL;  // "batc"
constexpr std::uint64_t kStreamValid = 0x76616c64ULL;  // "vald"

}  // namespace

void SimConfig::validate() const {
  if (n_clients < 1) throw Error(ErrorCode::InvalidConfig, "n_clients must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw Error(ErrorCode::InvalidConfig, "learning_rate must be positive and finite");
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (!(attack.fraction >= 0.0 && attack.fraction < 1.0))
    throw Error(ErrorCode::InvalidConfig, "attack.fraction must lie in [0, 1)");
  if (exclude.enabled && !(exclude.loss_quantile > 0.0 && exclude.loss_quantile <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "exclude.loss_quantile must lie in (0, 1]");
  rule.validate();
}

// The initializer below may assign train_/test_/validation_/client_indices_;
// they are declared before model_, so they are already constructed here.
Simulation::Simulation(SimConfig config) : config_(std::move(config)), model_([&] {
  config_.validate();
  Rng data_rng = Rng::keyed(config_.seed, kStreamData);
  Dataset full = build_dataset(config_.dataset, data_rng);
  Rng split_rng = Rng::keyed(config_.seed, kStreamSplit);
  auto [train, test] = split_train_test(full, config_.dataset.test_fraction, split_rng);
  train_ = std::move(train);
  test_ = std::move(test);
  if (test_.size() == 0) test_ = train_;

  client_indices_ = partition_data(train_, config_.partition, config_.n_clients, config_.seed);

  // server-held validation batch for Zeno: 64 test examples
  Rng valid_rng = Rng::keyed(config_.seed, kStreamValid);
  validation_.n_classes = test_.n_classes;
  const std::size_t n_valid = std::min<std::size_t>(64, test_.size());
  for (std::size_t i = 0; i < n_valid; ++i) {
    const std::size_t idx = static_cast<std::size_t>(valid_rng.uniform_index(test_.size()));
    validation_.features.push_back(test_.features[idx]);
    validation_.labels.push_back(test_.labels[idx]);
  }

  ModelSpec spec = config_.model;
  spec.input_dim = train_.dim();
  spec.n_classes = train_.n_classes;
  config_.model = spec;
  Rng init_rng = Rng::keyed(config_.seed, kStreamInit);
  return Model::initialized(spec, init_rng);
}()) {}

EvalDataset Simulation::client_eval_view(std::size_t client) const {
  EvalDataset view;
  view.n_classes = train_.n_classes;
  for (std::size_t idx : client_indices_[client]) {
    view.features.push_back(train_.features[idx]);
    view.labels.push_back(train_.labels[idx]);
  }
  return view;
}

std::vector<ClientUpdate> Simulation::collect_round_updates() {
  std::vector<ClientUpdate> updates;
  updates.reserve(config_.n_clients);
  for (std::size_t i = 0; i < config_.n_clients; ++i) {
    const auto& local = client_indices_[i];
    std::vector<std::size_t> batch;
    if (local.size() <= config_.batch_size) {
      batch = local;
    } else {
      // seeded sample without replacement: partial Fisher-Yates
      std::vector<std::size_t> pool = local;
      Rng rng = Rng::keyed(config_.seed, kStreamBatch, static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(round_));
      for (std::size_t k = 0; k < config_.batch_size; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.uniform_index(pool.size() - k));
        std::swap(pool[k], pool[j]);
      }
      batch.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(config_.batch_size));
    }
    GradientVector grad = model_.gradient(train_, batch);
    grad = apply_attack(grad, config_.attack, static_cast<std::uint32_t>(i), round_, config_.seed,
                        config_.n_clients);
    updates.push_back(ClientUpdate{static_cast<std::uint32_t>(i), round_, std::move(grad),
                                   config_.auth_token});
  }

  if (config_.exclude.enabled && updates.size() > 1) {
    const std::vector<ClientLossRecord> losses = client_mse_losses();
    std::vector<double> values;
    values.reserve(losses.size());
    for (const auto& r : losses) values.push_back(r.loss);
    std::sort(values.begin(), values.end());
    const std::size_t idx = std::min(
        values.size() - 1, static_cast<std::size_t>(config_.exclude.loss_quantile *
                                                    static_cast<double>(values.size() - 1)));
    const double cutoff = values[idx];
    std::vector<ClientUpdate> kept;
    for (std::size_t i = 0; i < updates.size(); ++i) {
      if (losses[i].loss <= cutoff) kept.push_back(std::move(updates[i]));
    }
    if (!kept.empty()) updates = std::move(kept);
  }
  return updates;
}

std::vector<ClientLossRecord> Simulation::client_mse_losses() const {
  std::vector<ClientLossRecord> losses;
  losses.reserve(config_.n_clients);
  const PredictFn predict = model_.predictor();
  for (std::size_t i = 0; i < config_.n_clients; ++i) {
    const double loss = evaluate_model_on_client(predict, client_eval_view(i));
    losses.push_back({static_cast<std::uint32_t>(i), loss});
  }
  return losses;
}

PretestReport Simulation::pretest(double alpha, NormalityTestKind kind) {
  const std::vector<ClientUpdate> updates = collect_round_updates();
  const ValidatedRound valid =
      validate_round(updates, config_.auth_token, model_.parameters().size());
  return pretest_round(transpose_to_coordinates(valid.accepted), alpha, kind);
}

RoundMetrics Simulation::run_round() {
  const auto start = std::chrono::steady_clock::now();

  std::vector<ClientUpdate> updates = collect_round_updates();
  const ValidatedRound valid =
      validate_round(updates, config_.auth_token, model_.parameters().size());

  AggregationOutcome outcome = [&] {
    if (config_.rule.rule == AggregationRule::Zeno) {
      AggregationConfig rule = config_.rule;
      if (!(rule.zeno_gamma > 0.0)) rule.zeno_gamma = config_.learning_rate;
      const ModelSpec spec = config_.model;
      const Dataset& batch = validation_;
      ZenoContext ctx{[&spec, &batch](const GradientVector& params) {
                        return loss_at(spec, params.values, batch);
                      },
                      GradientVector::flat(model_.parameters())};
      return aggregate(valid.accepted, rule, &ctx);
    }
    return aggregate(valid.accepted, config_.rule);
  }();

  model_.apply_update(outcome.global_update, config_.learning_rate);

  RoundMetrics metrics;
  metrics.round = round_;
  metrics.test_accuracy = model_.accuracy(test_);
  metrics.test_loss = model_.mean_loss(test_);
  metrics.ema_fallback_count =
      outcome.diagnostics.median_fallback_count + outcome.diagnostics.all_filtered_count;
  metrics.retained_mean = outcome.diagnostics.retained_counts.empty()
                              ? static_cast<double>(valid.accepted.size())
                              : outcome.diagnostics.retained_mean();
  metrics.mean_weight = outcome.diagnostics.mean_weight;
  metrics.wall_time = std::chrono::steady_clock::now() - start;
  ++round_;
  return metrics;
}

std::vector<RoundMetrics> Simulation::run() {
  std::vector<RoundMetrics> all;
  all.reserve(config_.rounds);
  for (std::size_t r = 0; r < config_.rounds; ++r) all.push_back(run_round());
  return all;
}

std::vector<RoundMetrics> run_simulation(const SimConfig& config) {
  Simulation sim(config);
  return sim.run();
}

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string metrics_to_csv(const SimConfig& config, const std::vector<RoundMetrics>& metrics) {
  std::ostringstream os;
  os << "round,rule,attack_kind,attack_fraction,seed,test_accuracy,test_loss,"
        "ema_fallback_count,retained_mean\n";
  for (const auto& m : metrics) {
    os << m.round << ',' << rule_name(config.rule.rule) << ',' << attack_name(config.attack.kind)
       << ',' << format_double(config.attack.fraction) << ',' << config.seed << ','
       << format_double(m.test_accuracy) << ',' << format_double(m.test_loss) << ','
       << m.ema_fallback_count << ',' << format_double(m.retained_mean) << '\n';
  }
  return os.str();
}

}  // namespace ema::sim

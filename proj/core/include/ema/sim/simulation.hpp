#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "ema/aggregators.hpp"
#include "ema/heterogeneity.hpp"
#include "ema/normality.hpp"
#include "ema/sim/attack.hpp"
#include "ema/sim/dataset.hpp"
#include "ema/sim/model.hpp"

namespace ema::sim {

struct SimConfig {
  std::size_t n_clients = 50;
  std::size_t rounds = 1;
  double learning_rate = 0.01;
  std::size_t batch_size = 128;
  std::uint64_t seed = 1;
  PartitionSpec partition;
  AttackSpec attack;
  AggregationConfig rule;
  ModelSpec model;
  DatasetSpec dataset;
  /// Optional server-side exclusion: drop clients whose per-client MSE loss
  /// exceeds the given quantile of this round's losses. Off by default.
  struct Exclude {
    bool enabled = false;
    double loss_quantile = 0.9;
  } exclude;
  std::string auth_token = "ema-shared-token";

  void validate() const;
};

struct RoundMetrics {
  std::uint32_t round = 0;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  std::uint64_t ema_fallback_count = 0;
  double retained_mean = 0.0;
  double mean_weight = 0.0;
  std::chrono::duration<double> wall_time{0.0};
};

/// Synchronous FedSGD loop: broadcast parameters, collect one-batch client
/// gradients, corrupt the malicious ones, validate, aggregate with the
/// configured rule, step, evaluate. Fully deterministic given the config.
class Simulation {
 public:
  explicit Simulation(SimConfig config);

  RoundMetrics run_round();
  std::vector<RoundMetrics> run();

  const Model& model() const noexcept { return model_; }
  const Dataset& test_data() const noexcept { return test_; }
  std::size_t current_round() const noexcept { return round_; }

  /// One gradient collection pass at the current parameters (post-attack,
  /// validated) without stepping; used by the dump tooling.
  std::vector<ClientUpdate> collect_round_updates();

  /// Per-client MSE loss of the current model on each client's local data.
  std::vector<ClientLossRecord> client_mse_losses() const;

  /// Pre-training normality check over one collected round.
  PretestReport pretest(double alpha, NormalityTestKind kind);

 private:
  EvalDataset client_eval_view(std::size_t client) const;

  SimConfig config_;
  Dataset train_;
  Dataset test_;
  Dataset validation_;  // server-held batch for Zeno
  std::vector<std::vector<std::size_t>> client_indices_;
  Model model_;
  std::uint32_t round_ = 0;
};

std::vector<RoundMetrics> run_simulation(const SimConfig& config);

/// Metrics CSV with the pinned header
/// round,rule,attack_kind,attack_fraction,seed,test_accuracy,test_loss,ema_fallback_count,retained_mean
std::string metrics_to_csv(const SimConfig& config, const std::vector<RoundMetrics>& metrics);

/// Shortest round-trip decimal formatting used in every CSV the tool writes.
std::string format_double(double value);

}  // namespace ema::sim

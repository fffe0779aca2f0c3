#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ema/errors.hpp"
#include "ema/rng.hpp"

namespace ema::sim {

struct Dataset {
  std::vector<std::vector<double>> features;
  std::vector<std::uint32_t> labels;
  std::size_t n_classes = 0;

  std::size_t size() const noexcept { return features.size(); }
  std::size_t dim() const noexcept { return features.empty() ? 0 : features.front().size(); }
};

/// Two-scale Gaussian blobs. Class c is displaced by `separation` along its
/// own unit-variance axis (axis 1+c) and spread along a shared high-variance
/// axis 0 (noise std 2.5*separation, class spread 4*separation). The shared
/// axis is a quickly-learned weak cue; the per-class axes carry the accurate
/// signal, so training accuracy keeps improving over many rounds instead of
/// saturating immediately. feature_scale multiplies every feature and sets
/// how fast a fixed learning rate moves on the task.
struct BlobsSpec {
  std::size_t n_classes = 5;
  std::size_t dim = 6;  // must be >= n_classes + 1
  double separation = 4.0;
  double feature_scale = 1.0;
  std::size_t n_samples = 16000;
};

/// MNIST-format IDX pair; pixels scaled to [0,1]. subsample == 0 keeps all.
struct IdxSpec {
  std::string images_path;
  std::string labels_path;
  std::size_t subsample = 0;
};

enum class DatasetKind { SyntheticGaussianBlobs, FromIDXFiles };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::SyntheticGaussianBlobs;
  BlobsSpec blobs;
  IdxSpec idx;
  double test_fraction = 0.2;
};

Dataset generate_blobs(const BlobsSpec& spec, Rng& rng);
Dataset load_idx_dataset(const IdxSpec& spec);
Dataset build_dataset(const DatasetSpec& spec, Rng& rng);

/// Seeded shuffle-split into (train, test).
std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, double test_fraction,
                                             Rng& rng);

enum class PartitionKind { IID, LabelShard, Dirichlet };

const char* partition_name(PartitionKind kind);

struct PartitionSpec {
  PartitionKind kind = PartitionKind::IID;
  std::size_t shards_per_client = 1;
  double dirichlet_alpha = 0.5;
};

/// Deals example indices to clients. IID: uniform split of a shuffled
/// permutation; LabelShard: label-sorted contiguous shards dealt at
/// shards_per_client each; Dirichlet: per-class client proportions drawn from
/// Dir(alpha). Deterministic given seed; every client receives >= 1 sample.
std::vector<std::vector<std::size_t>> partition_data(const Dataset& dataset,
                                                     const PartitionSpec& spec,
                                                     std::size_t n_clients, std::uint64_t seed);

}  // namespace ema::sim

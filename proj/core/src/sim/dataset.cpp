#include "ema/sim/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace ema::sim {

namespace {

constexpr std::uint64_t kStreamPartition = 0x70617274ULL;  // "part"

std::uint32_t read_be_u32(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  if (!is) throw Error(ErrorCode::IoError, "truncated IDX file");
  return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

}  // namespace

Dataset generate_blobs(const BlobsSpec& spec, Rng& rng) {
  if (spec.n_classes < 2) throw Error(ErrorCode::InvalidConfig, "blobs need >= 2 classes");
  if (spec.dim < spec.n_classes + 1)
    throw Error(ErrorCode::InvalidConfig, "blobs need dim >= n_classes + 1");
  if (!(spec.separation > 0.0) || !(spec.feature_scale > 0.0))
    throw Error(ErrorCode::InvalidConfig, "separation and feature_scale must be > 0");
  if (spec.n_samples == 0) throw Error(ErrorCode::TooFewSamples, "n_samples must be > 0");

  const std::size_t c_count = spec.n_classes;
  std::vector<std::vector<double>> means(c_count, std::vector<double>(spec.dim, 0.0));
  std::vector<double> stds(spec.dim, 1.0);
  stds[0] = 2.5 * spec.separation;
  for (std::size_t c = 0; c < c_count; ++c) {
    means[c][0] = 4.0 * spec.separation *
                  (static_cast<double>(c) / static_cast<double>(c_count - 1) - 0.5);
    means[c][1 + c] = spec.separation;
  }

  Dataset data;
  data.n_classes = c_count;
  data.features.resize(spec.n_samples);
  data.labels.resize(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const auto label = static_cast<std::uint32_t>(rng.uniform_index(c_count));
    data.labels[i] = label;
    std::vector<double> row(spec.dim);
    for (std::size_t j = 0; j < spec.dim; ++j)
      row[j] = spec.feature_scale * (rng.normal() * stds[j] + means[label][j]);
    data.features[i] = std::move(row);
  }
  return data;
}

Dataset load_idx_dataset(const IdxSpec& spec) {
  std::ifstream images(spec.images_path, std::ios::binary);
  if (!images) throw Error(ErrorCode::IoError, "cannot open " + spec.images_path);
  std::ifstream labels(spec.labels_path, std::ios::binary);
  if (!labels) throw Error(ErrorCode::IoError, "cannot open " + spec.labels_path);

  if (read_be_u32(images) != 0x00000803u)
    throw Error(ErrorCode::IoError, "bad image magic in " + spec.images_path);
  const std::size_t image_count = read_be_u32(images);
  const std::size_t rows = read_be_u32(images);
  const std::size_t cols = read_be_u32(images);

  if (read_be_u32(labels) != 0x00000801u)
    throw Error(ErrorCode::IoError, "bad label magic in " + spec.labels_path);
  const std::size_t label_count = read_be_u32(labels);
  if (label_count != image_count)
    throw Error(ErrorCode::IoError, "image/label count mismatch");

  std::size_t keep = image_count;
  if (spec.subsample > 0) keep = std::min(keep, spec.subsample);
  if (keep == 0) throw Error(ErrorCode::EmptyDataset, "no examples in IDX files");

  const std::size_t pixels = rows * cols;
  Dataset data;
  data.features.resize(keep);
  data.labels.resize(keep);
  std::vector<unsigned char> buf(pixels);
  std::uint32_t max_label = 0;
  for (std::size_t i = 0; i < keep; ++i) {
    images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!images) throw Error(ErrorCode::IoError, "truncated image data");
    std::vector<double> row(pixels);
    for (std::size_t p = 0; p < pixels; ++p) row[p] = static_cast<double>(buf[p]) / 255.0;
    data.features[i] = std::move(row);
    char lb;
    labels.read(&lb, 1);
    if (!labels) throw Error(ErrorCode::IoError, "truncated label data");
    data.labels[i] = static_cast<unsigned char>(lb);
    max_label = std::max(max_label, data.labels[i]);
  }
  data.n_classes = max_label + 1;
  return data;
}

Dataset build_dataset(const DatasetSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case DatasetKind::SyntheticGaussianBlobs: return generate_blobs(spec.blobs, rng);
    case DatasetKind::FromIDXFiles: return load_idx_dataset(spec.idx);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown dataset kind");
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, double test_fraction,
                                             Rng& rng) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw Error(ErrorCode::InvalidConfig, "test_fraction must lie in [0, 1)");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const auto n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(order.size()));

  Dataset train, test;
  train.n_classes = test.n_classes = dataset.n_classes;
  for (std::size_t i = 0; i < order.size(); ++i) {
    Dataset& dst = (i < n_test) ? test : train;
    dst.features.push_back(dataset.features[order[i]]);
    dst.labels.push_back(dataset.labels[order[i]]);
  }
  if (train.size() == 0) throw Error(ErrorCode::TooFewSamples, "empty training split");
  return {std::move(train), std::move(test)};
}

const char* partition_name(PartitionKind kind) {
  switch (kind) {
    case PartitionKind::IID: return "iid";
    case PartitionKind::LabelShard: return "label_shard";
    case PartitionKind::Dirichlet: return "dirichlet";
  }
  return "?";
}

std::vector<std::vector<std::size_t>> partition_data(const Dataset& dataset,
                                                     const PartitionSpec& spec,
                                                     std::size_t n_clients, std::uint64_t seed) {
  if (n_clients == 0) throw Error(ErrorCode::InvalidConfig, "n_clients must be >= 1");
  if (dataset.size() < n_clients)
    throw Error(ErrorCode::TooFewSamples, "fewer samples than clients");

  Rng rng = Rng::keyed(seed, kStreamPartition);
  std::vector<std::vector<std::size_t>> clients(n_clients);

  switch (spec.kind) {
    case PartitionKind::IID: {
      std::vector<std::size_t> order(dataset.size());
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order);
      const std::size_t base = order.size() / n_clients;
      const std::size_t rem = order.size() % n_clients;
      std::size_t pos = 0;
      for (std::size_t i = 0; i < n_clients; ++i) {
        const std::size_t take = base + (i < rem ? 1 : 0);
        clients[i].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                          order.begin() + static_cast<std::ptrdiff_t>(pos + take));
        pos += take;
      }
      break;
    }
    case PartitionKind::LabelShard: {
      if (spec.shards_per_client == 0)
        throw Error(ErrorCode::InvalidConfig, "shards_per_client must be >= 1");
      std::vector<std::size_t> order(dataset.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dataset.labels[a] < dataset.labels[b];
      });
      const std::size_t n_shards = n_clients * spec.shards_per_client;
      if (dataset.size() < n_shards)
        throw Error(ErrorCode::TooFewSamples, "fewer samples than shards");
      std::vector<std::size_t> shard_ids(n_shards);
      std::iota(shard_ids.begin(), shard_ids.end(), 0);
      rng.shuffle(shard_ids);
      const std::size_t base = order.size() / n_shards;
      const std::size_t rem = order.size() % n_shards;
      // shard s covers a contiguous run of the label-sorted order
      std::vector<std::size_t> shard_begin(n_shards + 1, 0);
      for (std::size_t s = 0; s < n_shards; ++s)
        shard_begin[s + 1] = shard_begin[s] + base + (s < rem ? 1 : 0);
      for (std::size_t i = 0; i < n_clients; ++i) {
        for (std::size_t k = 0; k < spec.shards_per_client; ++k) {
          const std::size_t s = shard_ids[i * spec.shards_per_client + k];
          clients[i].insert(clients[i].end(),
                            order.begin() + static_cast<std::ptrdiff_t>(shard_begin[s]),
                            order.begin() + static_cast<std::ptrdiff_t>(shard_begin[s + 1]));
        }
      }
      break;
    }
    case PartitionKind::Dirichlet: {
      if (!(spec.dirichlet_alpha > 0.0))
        throw Error(ErrorCode::InvalidConfig, "dirichlet_alpha must be > 0");
      std::vector<std::vector<std::size_t>> by_class(dataset.n_classes);
      for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset.labels[i]].push_back(i);
      for (auto& idx : by_class) rng.shuffle(idx);

      for (std::size_t c = 0; c < by_class.size(); ++c) {
        const std::size_t nc = by_class[c].size();
        if (nc == 0) continue;
        std::vector<double> props(n_clients);
        double total = 0.0;
        for (auto& p : props) {
          p = rng.gamma(spec.dirichlet_alpha);
          total += p;
        }
        // largest-remainder rounding keeps the class total exact
        std::vector<std::size_t> counts(n_clients, 0);
        std::vector<std::pair<double, std::size_t>> remainders(n_clients);
        std::size_t assigned = 0;
        for (std::size_t i = 0; i < n_clients; ++i) {
          const double exact = static_cast<double>(nc) * props[i] / total;
          counts[i] = static_cast<std::size_t>(exact);
          remainders[i] = {exact - static_cast<double>(counts[i]), i};
          assigned += counts[i];
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first > b.first;
          return a.second < b.second;
        });
        for (std::size_t r = 0; assigned < nc; ++r, ++assigned) counts[remainders[r].second]++;

        std::size_t pos = 0;
        for (std::size_t i = 0; i < n_clients; ++i) {
          clients[i].insert(clients[i].end(),
                            by_class[c].begin() + static_cast<std::ptrdiff_t>(pos),
                            by_class[c].begin() + static_cast<std::ptrdiff_t>(pos + counts[i]));
          pos += counts[i];
        }
      }
      break;
    }
  }

  // every client must end up with at least one sample; steal from the richest
  for (std::size_t i = 0; i < n_clients; ++i) {
    if (!clients[i].empty()) continue;
    auto richest = std::max_element(clients.begin(), clients.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
    if (richest->size() <= 1) throw Error(ErrorCode::TooFewSamples, "cannot give every client a sample");
    clients[i].push_back(richest->back());
    richest->pop_back();
  }
  return clients;
}

}  // namespace ema::sim

#include "ema/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace ema {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::optional<double> try_parse_double(const std::string& s) {
  double d = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return d;
}

std::string normalize_value(const std::string& raw) {
  if (auto d = try_parse_double(raw)) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), *d);
    return std::string(buf, ptr);
  }
  return raw;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig config;
  std::istringstream is(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": bad section");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": empty section");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": empty key");
    config.entries_[section.empty() ? key : section + "." + key] = value;
  }
  return config;
}

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_string(ss.str());
}

void KeyValueConfig::set(const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) throw Error(ErrorCode::InvalidConfig, "empty override key");
  entries_[dotted_key] = trim(value);
}

std::optional<std::string> KeyValueConfig::get(const std::string& dotted_key) const {
  const auto it = entries_.find(dotted_key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const auto d = try_parse_double(*v);
  if (!d) throw Error(ErrorCode::InvalidConfig, key + ": expected a number, got '" + *v + "'");
  return *d;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::uint64_t u = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), u);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw Error(ErrorCode::InvalidConfig, key + ": expected a non-negative integer, got '" + *v + "'");
  return u;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw Error(ErrorCode::InvalidConfig, key + ": expected a boolean, got '" + *v + "'");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::string KeyValueConfig::canonical() const {
  std::ostringstream os;  // std::map iterates in sorted key order
  for (const auto& [key, value] : entries_) os << key << '=' << normalize_value(value) << '\n';
  return os.str();
}

std::string KeyValueConfig::hash_hex() const {
  const std::string text = canonical();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

sim::SimConfig sim_config_from(const KeyValueConfig& config) {
  static const std::set<std::string> known = {
      "simulation.n_clients", "simulation.rounds", "simulation.learning_rate",
      "simulation.batch_size", "simulation.seed", "simulation.auth_token",
      "dataset.kind", "dataset.n_classes", "dataset.dim", "dataset.separation",
      "dataset.feature_scale", "dataset.n_samples", "dataset.test_fraction",
      "dataset.images_path", "dataset.labels_path", "dataset.subsample",
      "partition.kind", "partition.shards_per_client", "partition.dirichlet_alpha",
      "attack.kind", "attack.fraction", "attack.noise_sigma", "attack.scale_factor",
      "rule.name", "rule.k", "rule.trim_fraction", "rule.byzantine_count_f",
      "rule.zeno_rho", "rule.zeno_remove_b", "rule.zeno_gamma",
      "model.kind", "model.hidden_units", "model.loss",
      "exclude.enabled", "exclude.loss_quantile",
  };
  for (const auto& [key, value] : config.entries()) {
    if (!known.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key: " + key);
  }

  sim::SimConfig c;
  c.n_clients = config.get_uint("simulation.n_clients", 50);
  c.rounds = config.get_uint("simulation.rounds", 1);
  c.learning_rate = config.get_double("simulation.learning_rate", 0.01);
  c.batch_size = config.get_uint("simulation.batch_size", 128);
  c.seed = config.get_uint("simulation.seed", 1);
  c.auth_token = config.get_string("simulation.auth_token", c.auth_token);

  const std::string dataset_kind = config.get_string("dataset.kind", "blobs");
  if (dataset_kind == "blobs") {
    c.dataset.kind = sim::DatasetKind::SyntheticGaussianBlobs;
  } else if (dataset_kind == "idx") {
    c.dataset.kind = sim::DatasetKind::FromIDXFiles;
  } else {
    throw Error(ErrorCode::InvalidConfig, "dataset.kind must be blobs or idx");
  }
  c.dataset.blobs.n_classes = config.get_uint("dataset.n_classes", 5);
  c.dataset.blobs.dim = config.get_uint("dataset.dim", 6);
  c.dataset.blobs.separation = config.get_double("dataset.separation", 4.0);
  c.dataset.blobs.feature_scale = config.get_double("dataset.feature_scale", 1.0);
  c.dataset.blobs.n_samples = config.get_uint("dataset.n_samples", 16000);
  c.dataset.test_fraction = config.get_double("dataset.test_fraction", 0.2);
  c.dataset.idx.images_path = config.get_string("dataset.images_path", "");
  c.dataset.idx.labels_path = config.get_string("dataset.labels_path", "");
  c.dataset.idx.subsample = config.get_uint("dataset.subsample", 0);

  const std::string partition_kind = config.get_string("partition.kind", "iid");
  if (partition_kind == "iid") {
    c.partition.kind = sim::PartitionKind::IID;
  } else if (partition_kind == "label_shard") {
    c.partition.kind = sim::PartitionKind::LabelShard;
  } else if (partition_kind == "dirichlet") {
    c.partition.kind = sim::PartitionKind::Dirichlet;
  } else {
    throw Error(ErrorCode::InvalidConfig, "partition.kind must be iid, label_shard or dirichlet");
  }
  c.partition.shards_per_client = config.get_uint("partition.shards_per_client", 1);
  c.partition.dirichlet_alpha = config.get_double("partition.dirichlet_alpha", 0.5);

  const std::string attack_kind = config.get_string("attack.kind", "none");
  const auto attack = sim::attack_from_name(attack_kind);
  if (!attack) throw Error(ErrorCode::InvalidConfig, "unknown attack.kind: " + attack_kind);
  c.attack.kind = *attack;
  c.attack.fraction = config.get_double("attack.fraction", 0.0);
  c.attack.noise_sigma = config.get_double("attack.noise_sigma", 1.0);
  c.attack.scale_factor = config.get_double("attack.scale_factor", 10.0);

  const std::string rule = config.get_string("rule.name", "ema");
  const auto parsed_rule = rule_from_name(rule);
  if (!parsed_rule) throw Error(ErrorCode::InvalidConfig, "unknown rule.name: " + rule);
  c.rule.rule = *parsed_rule;
  c.rule.k = config.get_double("rule.k", 1.5);
  c.rule.trim_fraction = config.get_double("rule.trim_fraction", 0.1);
  c.rule.byzantine_count_f =
      static_cast<std::uint32_t>(config.get_uint("rule.byzantine_count_f", 0));
  c.rule.zeno_rho = config.get_double("rule.zeno_rho", 5e-4);
  c.rule.zeno_remove_b = static_cast<std::uint32_t>(config.get_uint("rule.zeno_remove_b", 0));
  c.rule.zeno_gamma = config.get_double("rule.zeno_gamma", 0.0);

  const std::string model_kind = config.get_string("model.kind", "logistic_regression");
  if (model_kind == "logistic_regression") {
    c.model.kind = sim::ModelKind::LogisticRegression;
  } else if (model_kind == "mlp") {
    c.model.kind = sim::ModelKind::Mlp;
  } else {
    throw Error(ErrorCode::InvalidConfig, "model.kind must be logistic_regression or mlp");
  }
  c.model.hidden_units = config.get_uint("model.hidden_units", 16);
  const std::string loss = config.get_string("model.loss", "cross_entropy");
  if (loss == "cross_entropy") {
    c.model.loss = sim::LossKind::CrossEntropy;
  } else if (loss == "mse_one_hot") {
    c.model.loss = sim::LossKind::MseOneHot;
  } else {
    throw Error(ErrorCode::InvalidConfig, "model.loss must be cross_entropy or mse_one_hot");
  }

  c.exclude.enabled = config.get_bool("exclude.enabled", false);
  c.exclude.loss_quantile = config.get_double("exclude.loss_quantile", 0.9);

  c.validate();
  return c;
}

}  // namespace ema

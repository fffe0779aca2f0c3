#include "ema/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace ema {

namespace {

void check_finite(const std::vector<double>& values) {
  for (double v : values) {
    if (!std::isfinite(v))
      throw Error(ErrorCode::NonFiniteValue, "gradient contains NaN or Inf");
  }
}

// Token comparison that does not short-circuit on the first mismatch.
bool tokens_equal(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  unsigned char acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc |= static_cast<unsigned char>(a[i]) ^ static_cast<unsigned char>(b[i]);
  return acc == 0;
}

}  // namespace

GradientVector GradientVector::flat(std::vector<double> values) {
  check_finite(values);
  const std::size_t d = values.size();
  return GradientVector{std::move(values), {d}};
}

GradientVector GradientVector::shaped(std::vector<double> values, std::vector<std::size_t> shape) {
  check_finite(values);
  std::size_t product = 1;
  for (std::size_t s : shape) {
    if (s == 0) throw Error(ErrorCode::InvalidConfig, "zero extent in shape");
    product *= s;
  }
  if (product != values.size())
    throw Error(ErrorCode::DimensionMismatch, "product(shape) != values.size()");
  return GradientVector{std::move(values), std::move(shape)};
}

ValidatedRound validate_round(const std::vector<ClientUpdate>& updates,
                              const std::string& expected_token, std::size_t expected_dim) {
  if (updates.empty()) throw Error(ErrorCode::EmptyRound, "no updates collected");

  std::unordered_set<std::uint32_t> seen;
  for (const auto& u : updates) {
    if (!seen.insert(u.client_id).second)
      throw Error(ErrorCode::DuplicateClient,
                  "client " + std::to_string(u.client_id) + " appears twice in one round");
  }

  ValidatedRound out;
  for (const auto& u : updates) {
    if (!tokens_equal(u.auth_token, expected_token)) {
      out.rejections.push_back({u.client_id, ErrorCode::InvalidConfig});
      continue;
    }
    if (u.gradient.dim() != expected_dim) {
      out.rejections.push_back({u.client_id, ErrorCode::DimensionMismatch});
      continue;
    }
    out.accepted.push_back(u);
  }
  if (out.accepted.empty()) throw Error(ErrorCode::EmptyRound, "no updates survived validation");
  return out;
}

std::vector<CoordinateSample> transpose_to_coordinates(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw Error(ErrorCode::EmptyRound, "no updates to transpose");
  const std::size_t d = updates.front().gradient.dim();
  for (const auto& u : updates) {
    if (u.gradient.dim() != d)
      throw Error(ErrorCode::DimensionMismatch, "updates disagree on dimension");
  }

  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return updates[a].client_id < updates[b].client_id;
  });

  std::vector<CoordinateSample> samples(d);
  for (std::size_t j = 0; j < d; ++j) {
    samples[j].coordinate_index = j;
    samples[j].values.resize(updates.size());
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& g = updates[order[i]].gradient.values;
    for (std::size_t j = 0; j < d; ++j) samples[j].values[i] = g[j];
  }
  return samples;
}

std::vector<std::vector<double>> coordinates_to_matrix(const std::vector<CoordinateSample>& samples) {
  if (samples.empty()) return {};
  const std::size_t n = samples.front().values.size();
  std::vector<std::vector<double>> rows(n, std::vector<double>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (samples[j].values.size() != n)
      throw Error(ErrorCode::DimensionMismatch, "ragged coordinate samples");
    for (std::size_t i = 0; i < n; ++i) rows[i][j] = samples[j].values[i];
  }
  return rows;
}

}  // namespace ema

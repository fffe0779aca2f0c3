#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ema/errors.hpp"

namespace ema {

/// Flat gradient (or parameter) array with shape metadata.
/// Values are finite by construction; product(shape) == values.size().
struct GradientVector {
  std::vector<double> values;
  std::vector<std::size_t> shape;

  static GradientVector flat(std::vector<double> values);
  static GradientVector shaped(std::vector<double> values, std::vector<std::size_t> shape);

  std::size_t dim() const noexcept { return values.size(); }
};

struct ClientUpdate {
  std::uint32_t client_id = 0;
  std::uint32_t round = 0;
  GradientVector gradient;
  std::string auth_token;
};

/// Cross-client sample of one model coordinate, in ascending client_id order.
struct CoordinateSample {
  std::size_t coordinate_index = 0;
  std::vector<double> values;
};

struct RoundRejection {
  std::uint32_t client_id = 0;
  ErrorCode reason = ErrorCode::DimensionMismatch;
};

struct ValidatedRound {
  std::vector<ClientUpdate> accepted;
  std::vector<RoundRejection> rejections;
};

/// Keeps updates whose token matches (constant-time compare) and whose
/// dimension equals expected_dim, preserving input order. Throws
/// DuplicateClient on a repeated client_id and EmptyRound when nothing
/// survives.
ValidatedRound validate_round(const std::vector<ClientUpdate>& updates,
                              const std::string& expected_token, std::size_t expected_dim);

/// Re-layout: n updates of dimension D -> D per-coordinate samples, each in
/// ascending client_id order. Pure and lossless.
std::vector<CoordinateSample> transpose_to_coordinates(const std::vector<ClientUpdate>& updates);

/// Inverse of transpose_to_coordinates (testing/reconstruction aid): returns
/// the n x D row-major matrix, row i being the i-th client in ascending id
/// order.
std::vector<std::vector<double>> coordinates_to_matrix(const std::vector<CoordinateSample>& samples);

}  // namespace ema

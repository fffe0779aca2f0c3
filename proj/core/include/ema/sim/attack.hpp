#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ema/gradient.hpp"

namespace ema::sim {

enum class AttackKind { None, SignFlip, GaussianNoise, ScaleUp, Zero };

const char* attack_name(AttackKind kind);
std::optional<AttackKind> attack_from_name(const std::string& name);

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  /// Fraction of malicious clients; the floor(fraction*n) lowest client_ids
  /// are malicious, deterministically.
  double fraction = 0.0;
  double noise_sigma = 1.0;   // GaussianNoise
  double scale_factor = 10.0; // ScaleUp

  std::size_t malicious_count(std::size_t n_clients) const;
  bool is_malicious(std::uint32_t client_id, std::size_t n_clients) const;
};

/// Applies the configured corruption to a malicious client's update; honest
/// clients pass through untouched. GaussianNoise draws from a stream keyed by
/// (seed, client_id, round).
GradientVector apply_attack(const GradientVector& update, const AttackSpec& spec,
                            std::uint32_t client_id, std::uint32_t round, std::uint64_t seed,
                            std::size_t n_clients);

}  // namespace ema::sim

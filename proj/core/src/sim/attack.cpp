#include "ema/sim/attack.hpp"

#include <cmath>

#include "ema/rng.hpp"

namespace ema::sim {

namespace {
constexpr std::uint64_t kStreamAttack = 0x6174746bULL;  // "attk"
}

const char* attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::SignFlip: return "sign_flip";
    case AttackKind::GaussianNoise: return "gaussian_noise";
    case AttackKind::ScaleUp: return "scale_up";
    case AttackKind::Zero: return "zero";
  }
  return "?";
}

std::optional<AttackKind> attack_from_name(const std::string& name) {
  if (name == "none") return AttackKind::None;
  if (name == "sign_flip") return AttackKind::SignFlip;
  if (name == "gaussian_noise") return AttackKind::GaussianNoise;
  if (name == "scale_up") return AttackKind::ScaleUp;
  if (name == "zero") return AttackKind::Zero;
  return std::nullopt;
}

std::size_t AttackSpec::malicious_count(std::size_t n_clients) const {
  return static_cast<std::size_t>(fraction * static_cast<double>(n_clients));
}

bool AttackSpec::is_malicious(std::uint32_t client_id, std::size_t n_clients) const {
  if (kind == AttackKind::None) return false;
  return client_id < malicious_count(n_clients);
}

GradientVector apply_attack(const GradientVector& update, const AttackSpec& spec,
                            std::uint32_t client_id, std::uint32_t round, std::uint64_t seed,
                            std::size_t n_clients) {
  if (!spec.is_malicious(client_id, n_clients)) return update;

  GradientVector out = update;
  switch (spec.kind) {
    case AttackKind::None:
      break;
    case AttackKind::SignFlip:
      for (double& v : out.values) v = -v;
      break;
    case AttackKind::GaussianNoise: {
      Rng rng = Rng::keyed(seed, kStreamAttack, client_id, round);
      for (double& v : out.values) v += rng.normal(0.0, spec.noise_sigma);
      break;
    }
    case AttackKind::ScaleUp:
      for (double& v : out.values) v *= spec.scale_factor;
      break;
    case AttackKind::Zero:
      for (double& v : out.values) v = 0.0;
      break;
  }
  return out;
}

}  // namespace ema::sim

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "ema/sim/simulation.hpp"

namespace ema {

/// Sectioned key/value configuration:
///
///   [attack]
///   kind = sign_flip
///   fraction = 0.2
///
/// Keys flatten to "section.key". `set()` applies a dotted override.
/// canonical() emits sorted "key=value" lines with numeric values normalized
/// to their shortest round-trip form, so equivalent configs hash identically.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::filesystem::path& path);
  static KeyValueConfig parse_string(const std::string& text);

  void set(const std::string& dotted_key, const std::string& value);
  std::optional<std::string> get(const std::string& dotted_key) const;

  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  std::string canonical() const;
  /// FNV-1a 64-bit hex digest of canonical().
  std::string hash_hex() const;

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

/// Builds a simulation config, rejecting unknown keys.
sim::SimConfig sim_config_from(const KeyValueConfig& config);

}  // namespace ema

#pragma once

#include <filesystem>

#include "ema/gradient.hpp"

namespace ema {

// Round dump formats for fixtures and the CLI.
//
// Binary ("EMAG"): magic bytes "EMAG", u16 version (= 1), u64 D, u32 n, then
// n*D row-major IEEE-754 doubles; all integers and doubles little-endian.
// Client ids are implicit row indices.
//
// CSV: header `client_id,coord_0,...,coord_{D-1}`, one row per client;
// doubles use shortest round-trip formatting.

void save_round_binary(const std::filesystem::path& path, const std::vector<ClientUpdate>& updates);
std::vector<ClientUpdate> load_round_binary(const std::filesystem::path& path);

void save_round_csv(const std::filesystem::path& path, const std::vector<ClientUpdate>& updates);
std::vector<ClientUpdate> load_round_csv(const std::filesystem::path& path);

/// Loads either format, sniffing the EMAG magic.
std::vector<ClientUpdate> load_round(const std::filesystem::path& path);

}  // namespace ema

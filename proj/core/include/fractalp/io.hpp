#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace fractalp {

// CSV with a header row; every numeric field is written with %.17g so files
// are bit-reproducible across runs
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_g17(double x);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// 64-bit FNV-1a over the canonical (sorted-key, no-whitespace) dump
std::uint64_t config_hash(const nlohmann::json& config);

// run manifest written beside every output set: configuration hash, seed,
// and component versions — nothing time-dependent
nlohmann::json make_manifest(const nlohmann::json& config, std::uint64_t seed);

}  // namespace fractalp

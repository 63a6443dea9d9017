#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rtphase/config.hpp"

namespace rtphase {

inline constexpr auto k_tool_version = "1.0.0";

// Provenance record written as manifest.json next to every command's outputs.
struct Run_manifest {
  std::string command;
  std::vector<std::string> arguments;  // argv without the program name
  Json resolved_config;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> input_digests;  // path -> sha256 hex
  std::vector<std::string> artifacts;
  std::string started_utc;
  double wall_seconds = 0.0;
  std::string version = k_tool_version;
};

auto sha256_file(const std::filesystem::path& path) -> std::string;
auto utc_timestamp() -> std::string;

auto manifest_to_json(const Run_manifest& manifest) -> Json;
auto manifest_from_json(const Json& j) -> Run_manifest;
auto write_manifest(const std::filesystem::path& dir, const Run_manifest& manifest) -> void;
auto read_manifest(const std::filesystem::path& path) -> Run_manifest;

}  // namespace rtphase

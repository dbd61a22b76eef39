#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhogap/experiment.hpp"

namespace rhogap::app {

// Malformed or inconsistent configuration; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RhoMapSettings {
  std::size_t grid = 50;
  double half_width = 2.0;
  double t = 0.0;
};

struct AppConfig {
  nlohmann::json effective;  // defaults merged with the file and overrides
  std::uint64_t hash = 0;
  ExperimentSettings experiment;
  SelectionMethod method = SelectionMethod::kRhoGap;
  std::size_t rollout_index = 0;
  RhoMapSettings rho_map;
  std::filesystem::path output_dir;
};

nlohmann::json default_config();

// Merges `overlay` into `base`. Keys absent from `base` are rejected.
void merge_config(nlohmann::json& base, const nlohmann::json& overlay, const std::string& path = "");

// Applies "a.b.c=value"; value is parsed as JSON, or taken as a string when
// it is not valid JSON.
void apply_override(nlohmann::json& config, const std::string& assignment);

AppConfig make_config(const nlohmann::json& effective);

AppConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

// 64-bit FNV-1a over the compact dump (keys sorted). The output section is
// excluded so relocating results keeps the hash.
std::uint64_t config_hash(const nlohmann::json& config);
std::string hash_hex(std::uint64_t hash);

}  // namespace rhogap::app

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qdiscrim/montecarlo.hpp"

namespace qdiscrim {

/// A validated experiment together with the fully resolved JSON it came from.
struct LoadedConfig {
  nlohmann::json resolved;
  ExperimentConfig experiment;
  std::vector<std::string> overrides;
};

/// Configuration for the two-candidate Rabi-frequency example
/// (omega 1 vs 2, delta 1.43, kappa 1, eta 0.5, z0 = 1).
nlohmann::json default_config_json();

/// Parses a JSON config, fills defaults, applies `section.key=value` overrides and
/// validates. Unknown keys are rejected. A top-level "_manifest" object is ignored
/// so manifest echoes can be fed back in.
LoadedConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});

LoadedConfig load_config(const std::filesystem::path& path,
                         const std::vector<std::string>& overrides = {});

/// Built-in defaults plus overrides.
LoadedConfig default_config(const std::vector<std::string>& overrides = {});

/// Resolved config plus a "_manifest" section (version, command, seed, overrides).
nlohmann::json manifest_echo(const LoadedConfig& cfg, const std::string& command);

}  // namespace qdiscrim

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ips/env.hpp"

namespace ips {

nlohmann::json to_json(const EpisodeConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
EpisodeConfig episode_config_from_json(const nlohmann::json& j);

EpisodeConfig load_config(const std::string& path);
void save_config(const std::string& path, const EpisodeConfig& cfg);

/// FNV-1a (64 bit) of the canonical (sorted-key, compact) JSON form, as 16 hex digits.
std::string config_digest(const EpisodeConfig& cfg);

/// Named experiment presets: "active", "active-large", "interactive", "smoke".
EpisodeConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace ips

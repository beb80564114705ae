#pragma once

// DetectorConfig as key = value text. SI units, '#' starts a comment.
// Doubles are written with 17 significant digits so a write/read cycle is
// exact.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blindsim/circuit_model.hpp"

namespace blindsim {

std::string serialize_config(const DetectorConfig& cfg);

/// Throws UsageError on syntax errors, unknown or duplicate keys and missing
/// mandatory keys; ParameterError if the resulting config is invalid.
DetectorConfig parse_config(std::istream& in, std::string_view source = "<config>");
DetectorConfig parse_config_text(std::string_view text, std::string_view source = "<config>");

/// Preset name or path to a config file.
DetectorConfig load_config(const std::string& name_or_path);
void save_config(const std::string& path, const DetectorConfig& cfg);

/// Keys that may be omitted from a config file.
const std::vector<std::string>& optional_config_keys();

const std::vector<std::string>& preset_names();
std::optional<DetectorConfig> find_preset(std::string_view name);

/// Reference circuit at the fitted gain law, without r_bias or L chosen.
DetectorConfig calibrated_base();

}  // namespace blindsim

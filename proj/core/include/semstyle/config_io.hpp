#pragma once

#include <iosfwd>
#include <string>

#include "semstyle/types.hpp"

namespace semstyle {

/// Flat key-value config format: one `key = value` pair per line, dotted key
/// names matching the TrainRunConfig fields (e.g. sampler.n_patches). Blank
/// lines and lines starting with '#' are ignored. Unknown keys are an error.
TrainRunConfig parse_config_text(const std::string& text, const TrainRunConfig& base);
TrainRunConfig load_config_file(const std::string& path, const TrainRunConfig& base);

std::string config_to_text(const TrainRunConfig& config);
void save_config_file(const std::string& path, const TrainRunConfig& config);

/// Applies one `key = value` assignment onto config. Throws on unknown key
/// or unparsable value.
void apply_config_entry(TrainRunConfig& config, const std::string& key, const std::string& value);

}  // namespace semstyle

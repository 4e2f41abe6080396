// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "eccl/curriculum.hpp"

namespace eccl {

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat sectioned "key = value" text with sections [game] [agent] [lossnet]
/// [gen] [evo] [schedule] [experiment]; '#' starts a comment. Keys left out
/// keep their defaults. Unknown sections/keys, bad values and failed
/// validation throw ConfigError naming the field.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every field, in a form parse_config reads back to an equal config.
std::string format_config(const ExperimentConfig& cfg);

}  // namespace eccl

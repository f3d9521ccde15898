// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ztt/model/config.hpp"
#include "ztt/train/plan.hpp"

namespace ztt::cli {

// Flat key=value run description. Blank lines and lines starting with '#'
// are ignored. Every key except corpus_path has a default.
struct RunConfig {
    model::ModelConfig model;
    train::TrainPlan plan;
    double exit_threshold = 1.0;
    std::optional<std::string> corpus_path;

    // corpus_path, or ConfigError naming the key.
    const std::string& corpus() const;
};

// Throws ConfigError for unknown or repeated keys, malformed lines and
// values that do not parse; `source` prefixes the messages.
RunConfig parse_run_config(std::string_view text, std::string_view source = "config");
RunConfig load_run_config(const std::string& path);

// Canonical text: every key in a fixed order, doubles printed so they parse
// back to the same value.
std::string to_text(const RunConfig& config);

}  // namespace ztt::cli

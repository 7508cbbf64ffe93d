#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "evtrack/simulator.hpp"
#include "evtrack/tracker.hpp"

namespace evtrack {

struct TrainConfig {
    int epochs = 50;
    double lr_start = 1e-2;
    double lr_end = 1e-5;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int pairs_per_sequence = 8;
    TimeUs max_gap_us = 2000000;  ///< latest search window end after the exemplar segment
    double label_radius = 3.0;
    double split = 0.8;           ///< fraction of sequences used for training
    double width = 1.0;           ///< channel multiplier of the feature extractor
    bool use_init = true;         ///< exemplar from the initialization segment, else the first window
};

struct RunConfig {
    TrackerConfig tracker;  ///< also carries the embedding configuration
    TrainConfig train;
    SimConfig sim;
    std::uint64_t seed = 0;
    std::string dataset;  ///< default dataset directory
    std::string weights;  ///< default weights file

    const EmbeddingConfig& embedding() const { return tracker.embedding; }
    void validate() const;
};

/// Parses `key = value` lines. Blank lines and `#` comments are ignored; unknown keys and
/// malformed values raise ParseError with the line number. Unset keys keep their defaults.
RunConfig parse_config(std::string_view text, const std::string& source_name = "<config>");
RunConfig load_config(const std::filesystem::path& path);
/// Applies one `key = value` assignment.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Every key in documented order, one `key = value` line each. Parsing the result reproduces
/// the same configuration.
std::string format_config(const RunConfig& config);

}  // namespace evtrack

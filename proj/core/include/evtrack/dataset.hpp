#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evtrack/events.hpp"
#include "evtrack/region.hpp"
#include "evtrack/simulator.hpp"

namespace evtrack {

/// Layout of a sequence directory. `manifest.txt` holds `key = value` lines naming the other
/// files; groundtruth.txt has one `cx,cy,w,h` line per timestamps.txt line.
struct SequenceManifest {
    std::string name;
    std::string description;
    SensorGeometry geometry;
    TimeUs start_us = 0;
    TimeUs end_us = 0;
    std::string events_file = "events.bin";
    std::string groundtruth_file = "groundtruth.txt";
    std::string timestamps_file = "timestamps.txt";
    std::string init_events_file;  ///< empty when there is no initialization segment
    TimeUs init_start_us = 0;
    TimeUs init_end_us = 0;
};

std::string format_manifest(const SequenceManifest& manifest);
SequenceManifest parse_manifest(std::string_view text, const std::string& source_name = "<manifest>");

struct Sequence {
    SequenceManifest manifest;
    std::vector<Event> events;
    std::vector<TimeUs> gt_times;
    std::vector<BoundingBox> groundtruth;
    std::optional<EventWindow> init;

    /// Ground truth interpolated at time t.
    BoundingBox groundtruth_at(TimeUs t) const;
    /// Consecutive windows [start + k W, start + (k+1) W) that end no later than end_us.
    std::vector<std::pair<TimeUs, TimeUs>> windows(TimeUs window_us) const;
    EventWindow window(TimeUs t_start, TimeUs t_end) const;
};

std::string format_groundtruth(const std::vector<BoundingBox>& boxes);
std::vector<BoundingBox> parse_groundtruth(std::string_view text, const std::string& source_name = "<groundtruth>");
std::string format_timestamps(const std::vector<TimeUs>& times);
std::vector<TimeUs> parse_timestamps(std::string_view text, const std::string& source_name = "<timestamps>");

std::string read_text_file(const std::filesystem::path& path);

/// Writes every file of the sequence atomically into `dir` (created if missing).
void save_sequence(const std::filesystem::path& dir, const Sequence& sequence);
/// Loads and cross-checks a sequence directory. Throws ParseError on malformed or
/// inconsistent files.
Sequence load_sequence(const std::filesystem::path& dir);
/// Sorted subdirectories of `dataset` that contain a manifest. `dataset` itself counts when
/// it holds a manifest.
std::vector<std::filesystem::path> list_sequences(const std::filesystem::path& dataset);

/// Seed-driven shuffle of sequence names into (train, test); the train part holds
/// max(1, round(fraction * n)) names. Both parts keep the input order.
std::pair<std::vector<std::string>, std::vector<std::string>> split_sequences(const std::vector<std::string>& names,
                                                                             double fraction, std::uint64_t seed);

struct SyntheticDatasetOptions {
    SimConfig sim;
    TimeUs gt_interval_us = 40000;
    InitMotionConfig init_motion;
    bool with_init = true;
};

/// Renders, simulates and annotates a synthetic sequence. Ground truth is sampled every
/// gt_interval_us from 0 to the duration inclusive.
Sequence generate_synthetic(const std::string& name, const SyntheticSpec& spec, const SyntheticDatasetOptions& options = {});

struct RandomSpecOptions {
    SensorGeometry geometry{346, 260};
    TimeUs duration_us = 4000000;
    TimeUs window_us = 40000;
    double speed = 2.0;  ///< pixels per window
    double min_size = 24.0;
    double max_size = 40.0;
    bool textured = true;
    std::optional<ShapeKind> shape;  ///< random when unset
};

/// Random shape bouncing inside the sensor at constant speed, waypoints once per window.
SyntheticSpec random_synthetic_spec(std::uint64_t seed, const RandomSpecOptions& options = {});

}  // namespace evtrack

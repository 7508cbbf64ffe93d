#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "evtrack/embedding.hpp"
#include "evtrack/events.hpp"
#include "evtrack/net/inference.hpp"
#include "evtrack/net/siamese.hpp"
#include "evtrack/region.hpp"
#include "evtrack/tensor.hpp"

namespace evtrack {

enum class ExemplarPolicy {
    Fixed,    ///< keep the exemplar formed by init_target
    Sliding,  ///< re-embed each tracked window around the new box as the next exemplar
};

std::string_view to_string(ExemplarPolicy policy);
ExemplarPolicy parse_exemplar_policy(std::string_view text);

struct TrackerConfig {
    double window_influence = 0.176;
    int upsample = 16;
    double edge_ratio = 0.05;
    TimeUs window_us = 40000;
    ExemplarPolicy exemplar_policy = ExemplarPolicy::Fixed;
    /// Search region extent relative to the target-centered region. 255/127 keeps the same
    /// pixels-per-input ratio in both branches.
    double search_scale = 255.0 / 127.0;
    /// Scale pyramid; {1} disables scale search.
    std::vector<double> scales = {1.0};
    double scale_penalty = 0.9745;
    double scale_damping = 0.59;
    EmbeddingConfig embedding;

    /// Throws InvalidArgument on out-of-range values.
    void validate() const;
};

struct EdgeDecision {
    enum class Kind { Skip, Continue };
    Kind kind = Kind::Skip;
    std::size_t count = 0;  ///< events inside the target-centered region
    double threshold = 0.0;
    bool skip() const { return kind == Kind::Skip; }
};

/// Skip iff the number of events inside the target-centered region of `box` is at most
/// ratio * region area.
EdgeDecision edge_detector(const EventWindow& window, const BoundingBox& box, double ratio = 0.05);

/// Outer product of Hann profiles normalized to a peak of 1. A size-1 axis is constant 1.
Grid2<double> make_cosine_window(int height, int width);

/// Crops `window` to `region`, embeds it and resizes it to size x size.
EventTensor make_branch_input(const EventWindow& window, const RegionGeometry& region,
                              const EmbeddingConfig& embedding, int size);

struct TrackerState {
    bool initialized = false;
    BoundingBox box;
    Tensor3<float> exemplar;  ///< exemplar features
    bool paused = false;
    std::uint64_t steps = 0;
    std::uint64_t network_evaluations = 0;  ///< backbone forward passes
    TimeUs window_us = 0;
};

struct StepResult {
    BoundingBox box;
    bool skipped = false;
    EdgeDecision decision;
    double peak_row = 0.0;  ///< argmax in upsampled response coordinates (search steps only)
    double peak_col = 0.0;
};

/// Online tracker over a read-only shared network.
class Tracker {
public:
    Tracker(std::shared_ptr<const net::SiameseModel<float>> model, TrackerConfig config);

    const TrackerConfig& config() const { return config_; }
    const net::SiameseModel<float>& model() const { return *model_; }

    /// Forms the exemplar from the events of `initialization` inside the target-centered
    /// region of `box`. Throws InitializationError when that region holds no events.
    TrackerState init_target(const EventWindow& initialization, const BoundingBox& box) const;

    /// Advances the state by one event window. Skipped windows leave the box untouched and
    /// run no network evaluation. Throws StateError for an uninitialized state.
    StepResult step(TrackerState& state, const EventWindow& window) const;

    /// Upsamples, min-max normalizes and blends a score map with the cosine window.
    Grid2<double> blended_response(const Grid2<float>& scores) const;

private:
    std::shared_ptr<const net::SiameseModel<float>> model_;
    std::shared_ptr<const net::InferenceEngine> engine_;
    TrackerConfig config_;
    Grid2<double> cosine_;
};

/// Row-major first occurrence of the maximum.
std::pair<int, int> argmax(const Grid2<double>& grid);

struct TrackRecord {
    TimeUs t_start = 0;
    TimeUs t_end = 0;
    BoundingBox box;
    bool skipped = false;
};

/// `t_start_us,t_end_us,cx,cy,w,h,skipped` lines, no header.
std::string format_track_csv(const std::vector<TrackRecord>& records);
std::vector<TrackRecord> parse_track_csv(std::string_view text, const std::string& source_name = "<track>");

}  // namespace evtrack

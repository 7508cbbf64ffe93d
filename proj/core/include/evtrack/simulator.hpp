#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "evtrack/events.hpp"
#include "evtrack/region.hpp"
#include "evtrack/tensor.hpp"

namespace evtrack {

/// Grayscale intensity frame with values in [0, 1].
using Frame = Grid2<float>;

struct FrameSequence {
    std::vector<Frame> frames;
    std::vector<TimeUs> timestamps;

    SensorGeometry geometry() const;
    /// Throws InvalidArgument unless there are >= 2 equally sized frames with strictly
    /// increasing timestamps.
    void validate() const;
};

struct SimConfig {
    double positive_threshold = 0.15;
    double negative_threshold = 0.15;
    double log_epsilon = 1e-3;
    /// Per-event Gaussian jitter of the threshold; 0 disables it.
    double threshold_sigma = 0.0;
    /// Minimum spacing between two events of one pixel; 0 disables it.
    TimeUs refractory_us = 0;
    std::uint64_t noise_seed = 0;
};

/// Frame-driven event synthesis. Each pixel keeps a reference level in log intensity
/// ln(I + eps), initialized from the first frame. Between frames the log intensity is
/// interpolated linearly; every crossing of reference +/- threshold emits an event at the
/// interpolated time (rounded to the nearest microsecond) and moves the reference to the
/// crossed level. Output is sorted by (t, y, x, p).
std::vector<Event> simulate_events(const FrameSequence& sequence, const SimConfig& config = {});

/// Incremental form of simulate_events: frames are fed one at a time so long sequences need
/// not be held in memory. finish() returns the accumulated events in canonical order.
class EventSimulator {
public:
    EventSimulator(const Frame& first, TimeUs t0, const SimConfig& config = {});
    void advance(const Frame& frame, TimeUs t);
    std::vector<Event> finish();
    SensorGeometry geometry() const { return geometry_; }

private:
    std::vector<double> log_frame(const Frame& frame) const;

    SimConfig config_;
    SensorGeometry geometry_;
    TimeUs time_ = 0;
    std::mt19937_64 rng_;
    std::vector<double> previous_;
    std::vector<double> reference_;
    std::vector<TimeUs> last_event_;
    std::vector<bool> has_event_;
    std::vector<Event> events_;
};

/// Bilinear sub-pixel shift: out(x, y) = in(x - dx, y - dy), sampling clamped to the border.
Frame render_translated(const Frame& frame, double dx, double dy);

struct InitMotionConfig {
    TimeUs start_us = 0;
    TimeUs duration_us = 40000;
    double displacement_ratio = 0.01;  ///< displacement = ratio * (w + h)
};

/// Displacement used by make_init_sequence for a target box.
double init_displacement(const BoundingBox& box, const InitMotionConfig& config = {});

/// Camera micro-motion over a still frame: translations (0,0) (+d,0) (-d,0) (0,0) (0,+d)
/// (0,-d) (0,0) at uniform spacing over the configured duration.
FrameSequence make_init_sequence(const Frame& frame, const BoundingBox& box, const InitMotionConfig& config = {});

/// Events of make_init_sequence wrapped in a window that includes the final timestamp.
EventWindow make_init_window(const Frame& frame, const BoundingBox& box, const SimConfig& sim = {},
                             const InitMotionConfig& motion = {});

// Desk-scale synthetic tracking sequences.

enum class ShapeKind { Square, Disc, Bar };

std::string_view to_string(ShapeKind kind);
ShapeKind parse_shape_kind(std::string_view text);

struct Waypoint {
    TimeUs t = 0;
    double cx = 0.0;
    double cy = 0.0;
};

struct SyntheticSpec {
    ShapeKind shape = ShapeKind::Square;
    double size = 30.0;           ///< side (square), diameter (disc), length (bar)
    double bar_thickness = 0.35;  ///< bar height as a fraction of its length
    float foreground = 0.8f;
    float background = 0.2f;
    bool textured_background = false;
    std::uint64_t texture_seed = 0;
    SensorGeometry geometry{160, 120};
    double fps = 250.0;
    TimeUs duration_us = 1000000;
    /// Piecewise-linear center trajectory; held constant before the first and after the last
    /// waypoint.
    std::vector<Waypoint> trajectory;
};

struct SyntheticSequence {
    FrameSequence frames;
    std::vector<BoundingBox> boxes;  ///< ground truth per frame
};

/// Extent of the shape's box (independent of time).
std::pair<double, double> synthetic_box_extent(const SyntheticSpec& spec);
/// Exact ground-truth box at time t.
BoundingBox synthetic_box_at(const SyntheticSpec& spec, TimeUs t);
/// Renders a single frame at time t.
Frame render_synthetic_frame(const SyntheticSpec& spec, TimeUs t);
/// Throws InvalidArgument when the trajectory lets the shape come within 1 px of the border.
void validate_synthetic_spec(const SyntheticSpec& spec);
/// Frame timestamps 0, 1/fps, ... up to duration_us.
std::vector<TimeUs> synthetic_frame_times(const SyntheticSpec& spec);
/// Renders every frame of the spec (validated first).
SyntheticSequence make_synthetic_sequence(const SyntheticSpec& spec);

}  // namespace evtrack

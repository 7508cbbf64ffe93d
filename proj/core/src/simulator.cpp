#include "evtrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "evtrack/error.hpp"

namespace evtrack {

SensorGeometry FrameSequence::geometry() const {
    if (frames.empty()) return {};
    return {frames.front().width(), frames.front().height()};
}

void FrameSequence::validate() const {
    if (frames.size() < 2) throw InvalidArgument("frame sequence needs at least two frames");
    if (timestamps.size() != frames.size()) throw InvalidArgument("frame and timestamp counts differ");
    const SensorGeometry g = geometry();
    if (g.width < 1 || g.height < 1) throw InvalidArgument("frames must be non-empty");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].width() != g.width || frames[i].height() != g.height) {
            throw InvalidArgument("frame " + std::to_string(i) + " has a different size");
        }
        if (i > 0 && timestamps[i] <= timestamps[i - 1]) {
            throw InvalidArgument("frame timestamps must be strictly increasing (frame " + std::to_string(i) + ")");
        }
    }
}

namespace {

constexpr double kTolerance = 1e-9;
constexpr double kMinThreshold = 0.01;

}  // namespace

EventSimulator::EventSimulator(const Frame& first, TimeUs t0, const SimConfig& config)
    : config_(config), geometry_{first.width(), first.height()}, time_(t0), rng_(config.noise_seed) {
    if (!(config.positive_threshold > 0.0) || !(config.negative_threshold > 0.0)) {
        throw InvalidArgument("contrast thresholds must be positive");
    }
    if (!(config.log_epsilon > 0.0)) throw InvalidArgument("log epsilon must be positive");
    if (geometry_.width < 1 || geometry_.height < 1) throw InvalidArgument("frames must be non-empty");
    previous_ = log_frame(first);
    reference_ = previous_;
    last_event_.assign(previous_.size(), 0);
    has_event_.assign(previous_.size(), false);
}

std::vector<double> EventSimulator::log_frame(const Frame& frame) const {
    std::vector<double> out(frame.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(static_cast<double>(frame.values()[i]) + config_.log_epsilon);
    return out;
}

void EventSimulator::advance(const Frame& frame, TimeUs t) {
    if (frame.width() != geometry_.width || frame.height() != geometry_.height) {
        throw InvalidArgument("frame size changed during simulation");
    }
    if (t <= time_) throw InvalidArgument("frame timestamps must be strictly increasing (t=" + std::to_string(t) + ")");
    std::normal_distribution<double> noise(0.0, 1.0);
    const bool noisy = config_.threshold_sigma > 0.0;
    const std::vector<double> current = log_frame(frame);
    const TimeUs t0 = time_;
    const double dt = static_cast<double>(t - t0);
    for (std::size_t i = 0; i < current.size(); ++i) {
        const double l0 = previous_[i];
        const double l1 = current[i];
        if (std::abs(l1 - l0) <= kTolerance) continue;
        const int polarity = l1 > l0 ? 1 : -1;
        while (true) {
            double threshold = polarity > 0 ? config_.positive_threshold : config_.negative_threshold;
            if (noisy) threshold = std::max(kMinThreshold, threshold + config_.threshold_sigma * noise(rng_));
            const double cross = reference_[i] + polarity * threshold;
            const bool crossed = polarity > 0 ? (cross > l0 - kTolerance && cross <= l1 + kTolerance)
                                              : (cross < l0 + kTolerance && cross >= l1 - kTolerance);
            if (!crossed) break;
            const double frac = std::clamp((cross - l0) / (l1 - l0), 0.0, 1.0);
            const TimeUs te = t0 + static_cast<TimeUs>(std::llround(frac * dt));
            reference_[i] = cross;
            if (config_.refractory_us > 0 && has_event_[i] && te - last_event_[i] < config_.refractory_us) continue;
            has_event_[i] = true;
            last_event_[i] = te;
            Event e;
            e.t = te;
            e.x = static_cast<std::uint16_t>(i % static_cast<std::size_t>(geometry_.width));
            e.y = static_cast<std::uint16_t>(i / static_cast<std::size_t>(geometry_.width));
            e.p = static_cast<std::int8_t>(polarity);
            events_.push_back(e);
        }
    }
    previous_ = current;
    time_ = t;
}

std::vector<Event> EventSimulator::finish() {
    std::vector<Event> out = std::move(events_);
    events_.clear();
    std::sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.y != b.y) return a.y < b.y;
        if (a.x != b.x) return a.x < b.x;
        return a.p < b.p;
    });
    return out;
}

std::vector<Event> simulate_events(const FrameSequence& sequence, const SimConfig& config) {
    sequence.validate();
    EventSimulator sim(sequence.frames.front(), sequence.timestamps.front(), config);
    for (std::size_t k = 1; k < sequence.frames.size(); ++k) sim.advance(sequence.frames[k], sequence.timestamps[k]);
    return sim.finish();
}

Frame render_translated(const Frame& frame, double dx, double dy) {
    const int w = frame.width();
    const int h = frame.height();
    Frame out(h, w);
    for (int y = 0; y < h; ++y) {
        const double sy = std::clamp(y - dy, 0.0, static_cast<double>(h - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, h - 1);
        const double fy = sy - y0;
        for (int x = 0; x < w; ++x) {
            const double sx = std::clamp(x - dx, 0.0, static_cast<double>(w - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, w - 1);
            const double fx = sx - x0;
            const double top = frame(y0, x0) + (frame(y0, x1) - static_cast<double>(frame(y0, x0))) * fx;
            const double bottom = frame(y1, x0) + (frame(y1, x1) - static_cast<double>(frame(y1, x0))) * fx;
            out(y, x) = static_cast<float>(top + (bottom - top) * fy);
        }
    }
    return out;
}

double init_displacement(const BoundingBox& box, const InitMotionConfig& config) {
    return config.displacement_ratio * (box.w + box.h);
}

FrameSequence make_init_sequence(const Frame& frame, const BoundingBox& box, const InitMotionConfig& config) {
    if (!box.valid()) throw InvalidArgument("init sequence requires a valid box");
    if (frame.width() < 1 || frame.height() < 1) throw InvalidArgument("init sequence requires a non-empty frame");
    const double d = init_displacement(box, config);
    const std::pair<double, double> offsets[] = {{0, 0}, {d, 0}, {-d, 0}, {0, 0}, {0, d}, {0, -d}, {0, 0}};
    constexpr std::size_t n = std::size(offsets);
    if (config.duration_us < n - 1) throw InvalidArgument("init motion duration too short");
    FrameSequence seq;
    for (std::size_t i = 0; i < n; ++i) {
        seq.frames.push_back(render_translated(frame, offsets[i].first, offsets[i].second));
        seq.timestamps.push_back(config.start_us + config.duration_us * i / (n - 1));
    }
    return seq;
}

EventWindow make_init_window(const Frame& frame, const BoundingBox& box, const SimConfig& sim,
                             const InitMotionConfig& motion) {
    FrameSequence seq = make_init_sequence(frame, box, motion);
    std::vector<Event> events = simulate_events(seq, sim);
    return EventWindow(std::move(events), motion.start_us, motion.start_us + motion.duration_us + 1, seq.geometry());
}

std::string_view to_string(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Square: return "square";
        case ShapeKind::Disc: return "disc";
        case ShapeKind::Bar: return "bar";
    }
    return "unknown";
}

ShapeKind parse_shape_kind(std::string_view text) {
    for (auto k : {ShapeKind::Square, ShapeKind::Disc, ShapeKind::Bar}) {
        if (text == to_string(k)) return k;
    }
    throw InvalidArgument("unknown shape '" + std::string(text) + "'");
}

std::pair<double, double> synthetic_box_extent(const SyntheticSpec& spec) {
    switch (spec.shape) {
        case ShapeKind::Square:
        case ShapeKind::Disc: return {spec.size, spec.size};
        case ShapeKind::Bar: return {spec.size, spec.size * spec.bar_thickness};
    }
    return {spec.size, spec.size};
}

BoundingBox synthetic_box_at(const SyntheticSpec& spec, TimeUs t) {
    if (spec.trajectory.empty()) throw InvalidArgument("synthetic trajectory is empty");
    const auto [w, h] = synthetic_box_extent(spec);
    const auto& tr = spec.trajectory;
    if (t <= tr.front().t) return {tr.front().cx, tr.front().cy, w, h};
    for (std::size_t i = 1; i < tr.size(); ++i) {
        if (t <= tr[i].t) {
            const double span = static_cast<double>(tr[i].t - tr[i - 1].t);
            const double f = span > 0 ? static_cast<double>(t - tr[i - 1].t) / span : 1.0;
            return {tr[i - 1].cx + (tr[i].cx - tr[i - 1].cx) * f, tr[i - 1].cy + (tr[i].cy - tr[i - 1].cy) * f, w, h};
        }
    }
    return {tr.back().cx, tr.back().cy, w, h};
}

namespace {

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

struct Texture {
    double ax[3], ay[3], phase[3], amp[3];
};

Texture make_texture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto u = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    Texture t{};
    for (int i = 0; i < 3; ++i) {
        t.ax[i] = (0.02 + 0.08 * u()) * (u() < 0.5 ? -1 : 1);
        t.ay[i] = (0.02 + 0.08 * u()) * (u() < 0.5 ? -1 : 1);
        t.phase[i] = 2.0 * std::numbers::pi * u();
        t.amp[i] = 0.05 + 0.07 * u();
    }
    return t;
}

}  // namespace

Frame render_synthetic_frame(const SyntheticSpec& spec, TimeUs t) {
    const SensorGeometry g = spec.geometry;
    const BoundingBox box = synthetic_box_at(spec, t);
    Frame frame(g.height, g.width, spec.background);
    if (spec.textured_background) {
        const Texture tex = make_texture(spec.texture_seed);
        for (int y = 0; y < g.height; ++y) {
            for (int x = 0; x < g.width; ++x) {
                double v = spec.background;
                for (int i = 0; i < 3; ++i) {
                    v += tex.amp[i] * std::sin(2.0 * std::numbers::pi * (tex.ax[i] * x + tex.ay[i] * y) + tex.phase[i]);
                }
                frame(y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    const int x_lo = std::max(0, static_cast<int>(std::floor(box.left())) - 1);
    const int x_hi = std::min(g.width - 1, static_cast<int>(std::ceil(box.right())) + 1);
    const int y_lo = std::max(0, static_cast<int>(std::floor(box.top())) - 1);
    const int y_hi = std::min(g.height - 1, static_cast<int>(std::ceil(box.bottom())) + 1);
    constexpr int kSuper = 8;
    const double radius = box.w / 2.0;
    for (int y = y_lo; y <= y_hi; ++y) {
        for (int x = x_lo; x <= x_hi; ++x) {
            double coverage = 0.0;
            if (spec.shape == ShapeKind::Disc) {
                const double dx = x - box.cx;
                const double dy = y - box.cy;
                const double dist = std::sqrt(dx * dx + dy * dy);
                if (dist <= radius - 0.75) {
                    coverage = 1.0;
                } else if (dist < radius + 0.75) {
                    int inside = 0;
                    for (int sy = 0; sy < kSuper; ++sy) {
                        for (int sx = 0; sx < kSuper; ++sx) {
                            const double px = x - 0.5 + (sx + 0.5) / kSuper - box.cx;
                            const double py = y - 0.5 + (sy + 0.5) / kSuper - box.cy;
                            inside += px * px + py * py <= radius * radius ? 1 : 0;
                        }
                    }
                    coverage = static_cast<double>(inside) / (kSuper * kSuper);
                }
            } else {
                coverage = overlap(x - 0.5, x + 0.5, box.left(), box.right()) *
                           overlap(y - 0.5, y + 0.5, box.top(), box.bottom());
            }
            if (coverage > 0.0) {
                frame(y, x) = static_cast<float>(frame(y, x) * (1.0 - coverage) + spec.foreground * coverage);
            }
        }
    }
    return frame;
}

void validate_synthetic_spec(const SyntheticSpec& spec) {
    if (spec.trajectory.empty()) throw InvalidArgument("synthetic trajectory is empty");
    if (spec.geometry.width < 1 || spec.geometry.height < 1) throw InvalidArgument("invalid sensor geometry");
    if (!(spec.size > 0.0) || !(spec.fps > 0.0)) throw InvalidArgument("shape size and frame rate must be positive");
    for (std::size_t i = 1; i < spec.trajectory.size(); ++i) {
        if (spec.trajectory[i].t < spec.trajectory[i - 1].t) throw InvalidArgument("trajectory times must not decrease");
    }
    const auto [w, h] = synthetic_box_extent(spec);
    // Piecewise-linear motion is extremal at the waypoints.
    for (const Waypoint& wp : spec.trajectory) {
        if (wp.cx - w / 2 < 1.0 || wp.cy - h / 2 < 1.0 || wp.cx + w / 2 > spec.geometry.width - 1.0 ||
            wp.cy + h / 2 > spec.geometry.height - 1.0) {
            throw InvalidArgument("trajectory moves the shape outside the sensor at t=" + std::to_string(wp.t));
        }
    }
}

std::vector<TimeUs> synthetic_frame_times(const SyntheticSpec& spec) {
    validate_synthetic_spec(spec);
    const TimeUs interval = static_cast<TimeUs>(std::llround(1e6 / spec.fps));
    if (interval == 0) throw InvalidArgument("frame rate too high");
    std::vector<TimeUs> times;
    for (TimeUs t = 0; t <= spec.duration_us; t += interval) times.push_back(t);
    if (times.size() < 2) throw InvalidArgument("synthetic sequence shorter than two frames");
    return times;
}

SyntheticSequence make_synthetic_sequence(const SyntheticSpec& spec) {
    SyntheticSequence seq;
    for (TimeUs t : synthetic_frame_times(spec)) {
        seq.frames.frames.push_back(render_synthetic_frame(spec, t));
        seq.frames.timestamps.push_back(t);
        seq.boxes.push_back(synthetic_box_at(spec, t));
    }
    return seq;
}

}  // namespace evtrack

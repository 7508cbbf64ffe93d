#include "evtrack/tracker.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "evtrack/error.hpp"

namespace evtrack {

std::string_view to_string(ExemplarPolicy policy) {
    return policy == ExemplarPolicy::Fixed ? "fixed" : "sliding";
}

ExemplarPolicy parse_exemplar_policy(std::string_view text) {
    if (text == "fixed") return ExemplarPolicy::Fixed;
    if (text == "sliding") return ExemplarPolicy::Sliding;
    throw InvalidArgument("unknown exemplar policy '" + std::string(text) + "' (expected fixed or sliding)");
}

void TrackerConfig::validate() const {
    if (!(window_influence >= 0.0 && window_influence <= 1.0)) throw InvalidArgument("window influence must lie in [0, 1]");
    if (upsample < 1) throw InvalidArgument("response upsample factor must be at least 1");
    if (!(edge_ratio >= 0.0)) throw InvalidArgument("edge ratio must be non-negative");
    if (window_us == 0) throw InvalidArgument("window duration must be positive");
    if (!(search_scale > 0.0)) throw InvalidArgument("search scale must be positive");
    if (scales.empty()) throw InvalidArgument("scale set must not be empty");
    for (double s : scales) {
        if (!(s > 0.0)) throw InvalidArgument("scales must be positive");
    }
    if (!(scale_penalty > 0.0 && scale_penalty <= 1.0)) throw InvalidArgument("scale penalty must lie in (0, 1]");
    if (!(scale_damping >= 0.0 && scale_damping <= 1.0)) throw InvalidArgument("scale damping must lie in [0, 1]");
    if (embedding.bins < 1) throw InvalidArgument("embedding bins must be at least 1");
}

EdgeDecision edge_detector(const EventWindow& window, const BoundingBox& box, double ratio) {
    const RegionGeometry region = target_region(box);
    EdgeDecision d;
    d.count = count_in_region(window, region);
    d.threshold = ratio * region.width * region.height;
    d.kind = static_cast<double>(d.count) <= d.threshold ? EdgeDecision::Kind::Skip : EdgeDecision::Kind::Continue;
    return d;
}

Grid2<double> make_cosine_window(int height, int width) {
    if (height < 1 || width < 1) throw InvalidArgument("cosine window needs positive dimensions");
    auto hann = [](int n) {
        std::vector<double> v(static_cast<std::size_t>(n), 1.0);
        if (n == 1) return v;
        // Evaluated on the first half and mirrored so the profile is exactly symmetric.
        for (int i = 0; 2 * i <= n - 1; ++i) {
            const double value = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
            v[static_cast<std::size_t>(i)] = value;
            v[static_cast<std::size_t>(n - 1 - i)] = value;
        }
        return v;
    };
    const std::vector<double> vy = hann(height);
    const std::vector<double> vx = hann(width);
    Grid2<double> out(height, width);
    double peak = 0.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            out(y, x) = vy[static_cast<std::size_t>(y)] * vx[static_cast<std::size_t>(x)];
            peak = std::max(peak, out(y, x));
        }
    }
    // Even sizes have no sample at the exact peak.
    if (peak > 0.0) {
        for (double& v : out.storage()) v /= peak;
    }
    return out;
}

EventTensor make_branch_input(const EventWindow& window, const RegionGeometry& region,
                              const EmbeddingConfig& embedding, int size) {
    return resize_bilinear(embed(crop_events(window, region), embedding), size, size);
}

std::pair<int, int> argmax(const Grid2<double>& grid) {
    if (grid.size() == 0) throw InvalidArgument("argmax of an empty grid");
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid.storage()[i] > grid.storage()[best]) best = i;
    }
    return {static_cast<int>(best / static_cast<std::size_t>(grid.width())),
            static_cast<int>(best % static_cast<std::size_t>(grid.width()))};
}

Tracker::Tracker(std::shared_ptr<const net::SiameseModel<float>> model, TrackerConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
    if (!model_) throw InvalidArgument("tracker requires a network");
    config_.validate();
    if (model_->backbone.architecture().input_channels() != config_.embedding.channels()) {
        throw InvalidArgument("network expects " + std::to_string(model_->backbone.architecture().input_channels()) +
                              " input planes but the embedding produces " + std::to_string(config_.embedding.channels()));
    }
    engine_ = std::make_shared<const net::InferenceEngine>(model_->backbone, net::kSearchSize);
    const auto& arch = model_->backbone.architecture();
    const int exemplar_extent = arch.output_extent(net::kExemplarSize);
    const int search_extent = arch.output_extent(net::kSearchSize);
    if (exemplar_extent < 1 || search_extent < exemplar_extent) throw ShapeError("network does not fit the branch sizes");
    const int score = search_extent - exemplar_extent + 1;
    const int up = (score - 1) * config_.upsample + 1;
    cosine_ = make_cosine_window(up, up);
}

TrackerState Tracker::init_target(const EventWindow& initialization, const BoundingBox& box) const {
    if (!box.valid()) throw InvalidArgument("initial box is invalid");
    const RegionGeometry region = target_region(box);
    if (count_in_region(initialization, region) == 0) {
        throw InitializationError("initialization window has no events inside the target region");
    }
    TrackerState state;
    state.box = box;
    state.exemplar = engine_->forward(make_branch_input(initialization, region, config_.embedding, net::kExemplarSize));
    state.network_evaluations = 1;
    state.window_us = config_.window_us;
    state.initialized = true;
    return state;
}

Grid2<double> Tracker::blended_response(const Grid2<float>& scores) const {
    EventTensor plane(1, scores.height(), scores.width());
    std::copy(scores.storage().begin(), scores.storage().end(), plane.storage().begin());
    const int up_h = (scores.height() - 1) * config_.upsample + 1;
    const int up_w = (scores.width() - 1) * config_.upsample + 1;
    const EventTensor up = resize_bilinear(plane, up_h, up_w);

    const auto [lo_it, hi_it] = std::minmax_element(up.storage().begin(), up.storage().end());
    const double lo = *lo_it;
    const double range = static_cast<double>(*hi_it) - lo;
    Grid2<double> cosine = (cosine_.height() == up_h && cosine_.width() == up_w) ? cosine_ : make_cosine_window(up_h, up_w);
    const double gamma = config_.window_influence;
    Grid2<double> out(up_h, up_w);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double normalized = range > 0.0 ? (up.storage()[i] - lo) / range : 0.0;
        out.storage()[i] = (1.0 - gamma) * normalized + gamma * cosine.storage()[i];
    }
    return out;
}

StepResult Tracker::step(TrackerState& state, const EventWindow& window) const {
    if (!state.initialized) throw StateError("tracker state is not initialized");
    ++state.steps;
    StepResult result;
    result.decision = edge_detector(window, state.box, config_.edge_ratio);
    if (result.decision.skip()) {
        state.paused = true;
        result.box = state.box;
        result.skipped = true;
        return result;
    }
    state.paused = false;

    double best_peak = -std::numeric_limits<double>::infinity();
    double best_scale = 1.0;
    Grid2<float> best_scores;
    RegionGeometry best_region;
    for (double s : config_.scales) {
        const RegionGeometry region = target_region(state.box, config_.search_scale * s);
        const Tensor3<float> features =
            engine_->forward(make_branch_input(window, region, config_.embedding, net::kSearchSize));
        ++state.network_evaluations;
        Grid2<float> scores = model_->score(state.exemplar, features);
        double peak = *std::max_element(scores.storage().begin(), scores.storage().end());
        if (s != 1.0) peak -= (1.0 - config_.scale_penalty) * std::abs(peak);
        if (peak > best_peak) {
            best_peak = peak;
            best_scale = s;
            best_scores = std::move(scores);
            best_region = region;
        }
    }

    const Grid2<double> response = blended_response(best_scores);
    const auto [row, col] = argmax(response);
    result.peak_row = row;
    result.peak_col = col;
    const double center_row = (response.height() - 1) / 2.0;
    const double center_col = (response.width() - 1) / 2.0;
    // Upsampled response cell -> search input pixel -> region grid pixel.
    const double input_per_cell = static_cast<double>(net::kTotalStride) / config_.upsample;
    const double grid_per_input_x = (best_region.grid_width - 1) / static_cast<double>(net::kSearchSize - 1);
    const double grid_per_input_y = (best_region.grid_height - 1) / static_cast<double>(net::kSearchSize - 1);
    BoundingBox next = state.box;
    next.cx += (col - center_col) * input_per_cell * grid_per_input_x;
    next.cy += (row - center_row) * input_per_cell * grid_per_input_y;
    const double scale_factor = (1.0 - config_.scale_damping) + config_.scale_damping * best_scale;
    next.w *= scale_factor;
    next.h *= scale_factor;
    state.box = next;

    if (config_.exemplar_policy == ExemplarPolicy::Sliding) {
        const RegionGeometry region = target_region(next);
        if (count_in_region(window, region) > 0) {
            state.exemplar = engine_->forward(make_branch_input(window, region, config_.embedding, net::kExemplarSize));
            ++state.network_evaluations;
        }
    }
    result.box = next;
    return result;
}

std::string format_track_csv(const std::vector<TrackRecord>& records) {
    std::string out;
    char buf[256];
    for (const TrackRecord& r : records) {
        std::snprintf(buf, sizeof buf, "%llu,%llu,%.6f,%.6f,%.6f,%.6f,%d\n", static_cast<unsigned long long>(r.t_start),
                      static_cast<unsigned long long>(r.t_end), r.box.cx, r.box.cy, r.box.w, r.box.h, r.skipped ? 1 : 0);
        out += buf;
    }
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<TrackRecord> parse_track_csv(std::string_view text, const std::string& source_name) {
    std::vector<TrackRecord> records;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto f = split_fields(line);
        auto fail = [&](const std::string& why) {
            return ParseError(source_name + ":" + std::to_string(line_no) + ": " + why);
        };
        if (f.size() != 7) throw fail("expected 7 fields, found " + std::to_string(f.size()));
        TrackRecord r;
        unsigned long long ts = 0, te = 0;
        int skipped = 0;
        if (!parse_number(f[0], ts) || !parse_number(f[1], te)) throw fail("bad timestamp");
        if (!parse_number(f[2], r.box.cx) || !parse_number(f[3], r.box.cy) || !parse_number(f[4], r.box.w) ||
            !parse_number(f[5], r.box.h)) {
            throw fail("bad box value");
        }
        if (!parse_number(f[6], skipped) || (skipped != 0 && skipped != 1)) throw fail("skipped flag must be 0 or 1");
        if (!r.box.valid()) throw fail("box must have positive width and height");
        r.t_start = ts;
        r.t_end = te;
        r.skipped = skipped == 1;
        records.push_back(r);
    }
    return records;
}

}  // namespace evtrack

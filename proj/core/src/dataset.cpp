#include "evtrack/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "evtrack/atomic_file.hpp"
#include "evtrack/error.hpp"
#include "evtrack/evaluation.hpp"
#include "evtrack/event_io.hpp"

namespace fs = std::filesystem;

namespace evtrack {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    return ec == std::errc() && ptr == end;
}

// Calls fn(line_no, line) for every non-empty line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (!line.empty()) fn(line_no, line);
    }
}

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::string format_manifest(const SequenceManifest& m) {
    std::ostringstream out;
    out << "name = " << m.name << "\n"
        << "description = " << m.description << "\n"
        << "width = " << m.geometry.width << "\n"
        << "height = " << m.geometry.height << "\n"
        << "start_us = " << m.start_us << "\n"
        << "end_us = " << m.end_us << "\n"
        << "events = " << m.events_file << "\n"
        << "groundtruth = " << m.groundtruth_file << "\n"
        << "timestamps = " << m.timestamps_file << "\n";
    if (!m.init_events_file.empty()) {
        out << "init_events = " << m.init_events_file << "\n"
            << "init_start_us = " << m.init_start_us << "\n"
            << "init_end_us = " << m.init_end_us << "\n";
    }
    return out.str();
}

SequenceManifest parse_manifest(std::string_view text, const std::string& source_name) {
    SequenceManifest m;
    bool has_width = false, has_height = false, has_end = false;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (line.front() == '#') return;
        const std::string where = source_name + ":" + std::to_string(line_no) + ": ";
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(where + "expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        auto integer = [&](auto& out) {
            if (!parse_number(value, out)) throw ParseError(where + "invalid value for " + std::string(key));
        };
        if (key == "name") m.name = value;
        else if (key == "description") m.description = value;
        else if (key == "width") { integer(m.geometry.width); has_width = true; }
        else if (key == "height") { integer(m.geometry.height); has_height = true; }
        else if (key == "start_us") integer(m.start_us);
        else if (key == "end_us") { integer(m.end_us); has_end = true; }
        else if (key == "events") m.events_file = value;
        else if (key == "groundtruth") m.groundtruth_file = value;
        else if (key == "timestamps") m.timestamps_file = value;
        else if (key == "init_events") m.init_events_file = value;
        else if (key == "init_start_us") integer(m.init_start_us);
        else if (key == "init_end_us") integer(m.init_end_us);
        else throw ParseError(where + "unknown manifest key '" + std::string(key) + "'");
    });
    if (!has_width || !has_height || m.geometry.width < 1 || m.geometry.height < 1) {
        throw ParseError(source_name + ": manifest needs positive width and height");
    }
    if (!has_end || m.end_us <= m.start_us) throw ParseError(source_name + ": manifest needs end_us > start_us");
    if (!m.init_events_file.empty() && m.init_end_us <= m.init_start_us) {
        throw ParseError(source_name + ": manifest needs init_end_us > init_start_us");
    }
    return m;
}

BoundingBox Sequence::groundtruth_at(TimeUs t) const { return align_groundtruth(gt_times, groundtruth, {t}).front(); }

std::vector<std::pair<TimeUs, TimeUs>> Sequence::windows(TimeUs window_us) const {
    if (window_us == 0) throw InvalidArgument("window duration must be positive");
    std::vector<std::pair<TimeUs, TimeUs>> out;
    for (TimeUs t = manifest.start_us; t + window_us <= manifest.end_us; t += window_us) out.emplace_back(t, t + window_us);
    return out;
}

EventWindow Sequence::window(TimeUs t_start, TimeUs t_end) const {
    return slice_window(events, t_start, t_end, manifest.geometry);
}

std::string format_groundtruth(const std::vector<BoundingBox>& boxes) {
    std::string out;
    char buf[160];
    for (const BoundingBox& b : boxes) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f\n", b.cx, b.cy, b.w, b.h);
        out += buf;
    }
    return out;
}

std::vector<BoundingBox> parse_groundtruth(std::string_view text, const std::string& source_name) {
    std::vector<BoundingBox> boxes;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        double v[4];
        std::size_t start = 0;
        for (int i = 0; i < 4; ++i) {
            const std::size_t comma = line.find(',', start);
            if ((i < 3) == (comma == std::string_view::npos) ||
                !parse_number(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)), v[i])) {
                throw ParseError(source_name + ":" + std::to_string(line_no) + ": expected cx,cy,w,h");
            }
            start = comma + 1;
        }
        BoundingBox b{v[0], v[1], v[2], v[3]};
        if (!b.valid()) throw ParseError(source_name + ":" + std::to_string(line_no) + ": box needs positive width and height");
        boxes.push_back(b);
    });
    return boxes;
}

std::string format_timestamps(const std::vector<TimeUs>& times) {
    std::string out;
    for (TimeUs t : times) out += std::to_string(t) + "\n";
    return out;
}

std::vector<TimeUs> parse_timestamps(std::string_view text, const std::string& source_name) {
    std::vector<TimeUs> times;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        TimeUs t = 0;
        if (!parse_number(line, t)) throw ParseError(source_name + ":" + std::to_string(line_no) + ": invalid timestamp");
        if (!times.empty() && t <= times.back()) {
            throw ParseError(source_name + ":" + std::to_string(line_no) + ": timestamps must be strictly increasing");
        }
        times.push_back(t);
    });
    return times;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void save_sequence(const fs::path& dir, const Sequence& sequence) {
    if (sequence.gt_times.size() != sequence.groundtruth.size()) {
        throw InvalidArgument("sequence has " + std::to_string(sequence.groundtruth.size()) + " boxes for " +
                              std::to_string(sequence.gt_times.size()) + " timestamps");
    }
    fs::create_directories(dir);
    const SequenceManifest& m = sequence.manifest;
    save_events(dir / m.events_file, EventStream{m.geometry, sequence.events});
    write_text_atomic(dir / m.groundtruth_file, format_groundtruth(sequence.groundtruth));
    write_text_atomic(dir / m.timestamps_file, format_timestamps(sequence.gt_times));
    if (!m.init_events_file.empty()) {
        if (!sequence.init) throw InvalidArgument("manifest names init events but the sequence has none");
        save_events(dir / m.init_events_file, EventStream{sequence.init->geometry(), sequence.init->events()});
    }
    write_text_atomic(dir / "manifest.txt", format_manifest(m));
}

Sequence load_sequence(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.txt";
    Sequence seq;
    seq.manifest = parse_manifest(read_text_file(manifest_path), manifest_path.string());
    const SequenceManifest& m = seq.manifest;
    EventStream stream = load_events(dir / m.events_file);
    if (!(stream.geometry == m.geometry)) {
        throw ParseError((dir / m.events_file).string() + ": sensor geometry differs from the manifest");
    }
    if (!is_time_sorted(stream.events)) throw ParseError((dir / m.events_file).string() + ": events are not time-sorted");
    seq.events = std::move(stream.events);
    const fs::path gt_path = dir / m.groundtruth_file;
    const fs::path ts_path = dir / m.timestamps_file;
    seq.groundtruth = parse_groundtruth(read_text_file(gt_path), gt_path.string());
    seq.gt_times = parse_timestamps(read_text_file(ts_path), ts_path.string());
    if (seq.groundtruth.size() != seq.gt_times.size()) {
        throw ParseError(gt_path.string() + ": " + std::to_string(seq.groundtruth.size()) + " boxes for " +
                         std::to_string(seq.gt_times.size()) + " timestamps");
    }
    if (seq.groundtruth.empty()) throw ParseError(gt_path.string() + ": no ground truth");
    if (!m.init_events_file.empty()) {
        const fs::path init_path = dir / m.init_events_file;
        EventStream init = load_events(init_path);
        try {
            seq.init = EventWindow(std::move(init.events), m.init_start_us, m.init_end_us, init.geometry);
        } catch (const InvalidArgument& e) {
            throw ParseError(init_path.string() + ": " + e.what());
        }
    }
    return seq;
}

std::vector<fs::path> list_sequences(const fs::path& dataset) {
    if (!fs::is_directory(dataset)) throw ParseError("dataset directory " + dataset.string() + " does not exist");
    if (fs::exists(dataset / "manifest.txt")) return {dataset};
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dataset)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.txt")) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_sequences(const std::vector<std::string>& names,
                                                                             double fraction, std::uint64_t seed) {
    if (names.empty()) return {};
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("split fraction must lie in (0, 1]");
    std::vector<std::size_t> order(names.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    const std::size_t n_train =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(names.size()))), 1, names.size());
    std::vector<bool> is_train(names.size(), false);
    for (std::size_t i = 0; i < n_train; ++i) is_train[order[i]] = true;
    std::pair<std::vector<std::string>, std::vector<std::string>> out;
    for (std::size_t i = 0; i < names.size(); ++i) (is_train[i] ? out.first : out.second).push_back(names[i]);
    return out;
}

Sequence generate_synthetic(const std::string& name, const SyntheticSpec& spec, const SyntheticDatasetOptions& options) {
    if (options.gt_interval_us == 0) throw InvalidArgument("ground-truth interval must be positive");
    const std::vector<TimeUs> times = synthetic_frame_times(spec);
    Sequence seq;
    SequenceManifest& m = seq.manifest;
    m.name = name;
    m.description = "synthetic " + std::string(to_string(spec.shape));
    m.geometry = spec.geometry;
    m.start_us = 0;
    m.end_us = times.back();

    const Frame first = render_synthetic_frame(spec, times.front());
    EventSimulator sim(first, times.front(), options.sim);
    for (std::size_t k = 1; k < times.size(); ++k) sim.advance(render_synthetic_frame(spec, times[k]), times[k]);
    seq.events = sim.finish();

    for (TimeUs t = 0; t <= m.end_us; t += options.gt_interval_us) {
        seq.gt_times.push_back(t);
        seq.groundtruth.push_back(synthetic_box_at(spec, t));
    }
    if (options.with_init) {
        seq.init = make_init_window(first, seq.groundtruth.front(), options.sim, options.init_motion);
        m.init_events_file = "init_events.bin";
        m.init_start_us = seq.init->t_start();
        m.init_end_us = seq.init->t_end();
    }
    return seq;
}

SyntheticSpec random_synthetic_spec(std::uint64_t seed, const RandomSpecOptions& options) {
    if (options.window_us == 0 || options.duration_us == 0) throw InvalidArgument("durations must be positive");
    std::mt19937_64 rng(seed);
    SyntheticSpec spec;
    spec.geometry = options.geometry;
    spec.duration_us = options.duration_us;
    spec.textured_background = options.textured;
    spec.texture_seed = rng();
    if (options.shape) {
        spec.shape = *options.shape;
    } else {
        const ShapeKind kinds[] = {ShapeKind::Square, ShapeKind::Disc, ShapeKind::Bar};
        spec.shape = kinds[rng() % 3];
    }
    spec.size = options.min_size + (options.max_size - options.min_size) * uniform(rng);
    const bool dark_on_light = uniform(rng) < 0.5;
    spec.foreground = dark_on_light ? 0.15f : 0.85f;
    spec.background = dark_on_light ? 0.7f : 0.3f;

    const auto [w, h] = synthetic_box_extent(spec);
    const double lo_x = w / 2 + 2.0, hi_x = spec.geometry.width - w / 2 - 2.0;
    const double lo_y = h / 2 + 2.0, hi_y = spec.geometry.height - h / 2 - 2.0;
    if (!(lo_x < hi_x && lo_y < hi_y)) throw InvalidArgument("sensor too small for the shape");
    double x = lo_x + (hi_x - lo_x) * uniform(rng);
    double y = lo_y + (hi_y - lo_y) * uniform(rng);
    const double angle = 2.0 * std::numbers::pi * uniform(rng);
    double vx = options.speed * std::cos(angle);
    double vy = options.speed * std::sin(angle);
    // Straight segments between reflections, sampled once per window.
    for (TimeUs t = 0;; t += options.window_us) {
        spec.trajectory.push_back({t, x, y});
        if (t >= options.duration_us) break;
        x += vx;
        y += vy;
        if (x < lo_x) { x = 2 * lo_x - x; vx = -vx; }
        if (x > hi_x) { x = 2 * hi_x - x; vx = -vx; }
        if (y < lo_y) { y = 2 * lo_y - y; vy = -vy; }
        if (y > hi_y) { y = 2 * hi_y - y; vy = -vy; }
    }
    return spec;
}

}  // namespace evtrack

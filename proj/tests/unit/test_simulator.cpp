#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "doctest.h"
#include "evtrack/error.hpp"
#include "evtrack/simulator.hpp"

using namespace evtrack;

namespace {

constexpr double kEps = 1e-3;

float intensity_for_log(double log_value) { return static_cast<float>(std::exp(log_value) - kEps); }

double log_of(float v) { return std::log(static_cast<double>(v) + kEps); }

/// Two single-pixel frames whose log intensities differ by at least |to_log - from_log| after
/// float rounding.
FrameSequence ramp(double from_log, double to_log, TimeUs duration) {
    const float start = intensity_for_log(from_log);
    float end = intensity_for_log(to_log);
    const double target = std::abs(to_log - from_log);
    const float away = to_log > from_log ? std::numeric_limits<float>::max() : 0.0f;
    while (std::abs(log_of(end) - log_of(start)) < target) end = std::nextafter(end, away);
    FrameSequence s;
    s.frames = {Frame(1, 1, start), Frame(1, 1, end)};
    s.timestamps = {0, duration};
    return s;
}

}  // namespace

TEST_CASE("log ramp produces events at the analytic crossing times") {
    const double base = std::log(0.2 + kEps);
    auto up = simulate_events(ramp(base, base + 0.45, 90000));
    REQUIRE(up.size() == 3);
    const TimeUs expected[] = {30000, 60000, 90000};
    for (int i = 0; i < 3; ++i) {
        CHECK(up[i].p == 1);
        CHECK(std::llabs(static_cast<long long>(up[i].t) - static_cast<long long>(expected[i])) <= 1);
    }
    auto down = simulate_events(ramp(base + 0.45, base, 90000));
    REQUIRE(down.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(down[i].p == -1);
        CHECK(std::llabs(static_cast<long long>(down[i].t) - static_cast<long long>(up[i].t)) <= 1);
    }
}

TEST_CASE("constant sequences produce no events") {
    FrameSequence s;
    s.frames = {Frame(4, 5, 0.3f), Frame(4, 5, 0.3f), Frame(4, 5, 0.3f)};
    s.timestamps = {0, 1000, 2000};
    CHECK(simulate_events(s).empty());
}

TEST_CASE("sequence validation") {
    FrameSequence one;
    one.frames = {Frame(2, 2)};
    one.timestamps = {0};
    CHECK_THROWS_AS(simulate_events(one), InvalidArgument);
    FrameSequence backwards;
    backwards.frames = {Frame(2, 2), Frame(2, 2)};
    backwards.timestamps = {10, 10};
    CHECK_THROWS_AS(simulate_events(backwards), InvalidArgument);
    FrameSequence mismatched;
    mismatched.frames = {Frame(2, 2), Frame(3, 2)};
    mismatched.timestamps = {0, 10};
    CHECK_THROWS_AS(simulate_events(mismatched), InvalidArgument);
    SimConfig bad;
    bad.positive_threshold = 0;
    CHECK_THROWS_AS(simulate_events(ramp(0, 1, 10), bad), InvalidArgument);
}

TEST_CASE("per-pixel event counts follow the threshold arithmetic") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    FrameSequence s;
    s.frames = {Frame(12, 9), Frame(12, 9)};
    for (float& v : s.frames[0].storage()) v = u(rng);
    for (float& v : s.frames[1].storage()) v = u(rng);
    s.timestamps = {0, 40000};
    auto events = simulate_events(s);
    std::map<std::pair<int, int>, int> counts;
    for (const Event& e : events) ++counts[{e.y, e.x}];
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 9; ++x) {
            double delta = std::abs(log_of(s.frames[1](y, x)) - log_of(s.frames[0](y, x)));
            int expected = static_cast<int>(std::floor(delta / 0.15 + 1e-9));
            CHECK(counts[{y, x}] == expected);
        }
}

TEST_CASE("output is sorted, in bounds and monotone in the threshold") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    FrameSequence s;
    for (int f = 0; f < 5; ++f) {
        Frame frame(10, 14);
        for (float& v : frame.storage()) v = u(rng);
        s.frames.push_back(frame);
        s.timestamps.push_back(f * 4000);
    }
    auto events = simulate_events(s);
    for (std::size_t i = 1; i < events.size(); ++i) {
        const Event &a = events[i - 1], &b = events[i];
        CHECK(std::tie(a.t, a.y, a.x, a.p) <= std::tie(b.t, b.y, b.x, b.p));
    }
    for (const Event& e : events) CHECK(s.geometry().contains(e.x, e.y));

    SimConfig doubled;
    doubled.positive_threshold = doubled.negative_threshold = 0.3;
    auto coarse = simulate_events(s, doubled);
    std::map<std::pair<int, int>, int> fine_counts, coarse_counts;
    for (const Event& e : events) ++fine_counts[{e.y, e.x}];
    for (const Event& e : coarse) ++coarse_counts[{e.y, e.x}];
    for (auto& [pixel, n] : coarse_counts) CHECK(n <= fine_counts[pixel]);
}

TEST_CASE("inverting log intensity swaps polarities") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3.0, 0.0);
    FrameSequence s, inverted;
    for (int f = 0; f < 4; ++f) {
        Frame a(6, 7), b(6, 7);
        for (std::size_t i = 0; i < a.size(); ++i) {
            double l = u(rng);
            a.storage()[i] = intensity_for_log(l);
            b.storage()[i] = intensity_for_log(-3.0 - l);
        }
        s.frames.push_back(a);
        inverted.frames.push_back(b);
        s.timestamps.push_back(f * 10000);
    }
    inverted.timestamps = s.timestamps;
    auto e1 = simulate_events(s), e2 = simulate_events(inverted);
    REQUIRE(e1.size() == e2.size());
    std::multimap<std::tuple<int, int, int>, TimeUs> lookup;
    for (const Event& e : e2) lookup.insert({{e.y, e.x, e.p}, e.t});
    for (const Event& e : e1) {
        auto [lo, hi] = lookup.equal_range({e.y, e.x, -e.p});
        bool found = false;
        for (auto it = lo; it != hi; ++it) found |= std::llabs(static_cast<long long>(it->second - e.t)) <= 1;
        CHECK(found);
    }
}

TEST_CASE("incremental simulator equals the batch form") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    FrameSequence s;
    for (int f = 0; f < 6; ++f) {
        Frame frame(8, 8);
        for (float& v : frame.storage()) v = u(rng);
        s.frames.push_back(frame);
        s.timestamps.push_back(f * 1000 + 7);
    }
    EventSimulator sim(s.frames[0], s.timestamps[0]);
    for (std::size_t i = 1; i < s.frames.size(); ++i) sim.advance(s.frames[i], s.timestamps[i]);
    CHECK(sim.finish() == simulate_events(s));
}

TEST_CASE("render_translated") {
    Frame impulse(9, 9, 0.0f);
    impulse(4, 3) = 1.0f;
    CHECK(render_translated(impulse, 0, 0) == impulse);
    Frame moved = render_translated(impulse, 2, -1);
    CHECK(moved(3, 5) == 1.0f);
    float sum = 0;
    for (float v : moved.values()) sum += v;
    CHECK(sum == 1.0f);

    Frame step(4, 10, 0.0f);
    for (int y = 0; y < 4; ++y)
        for (int x = 5; x < 10; ++x) step(y, x) = 1.0f;
    Frame half = render_translated(step, 0.5, 0);
    for (int y = 0; y < 4; ++y) {
        CHECK(half(y, 4) == 0.0f);
        CHECK(half(y, 5) == doctest::Approx(0.5));
        CHECK(half(y, 6) == 1.0f);
        CHECK(half(y, 0) == 0.0f);
    }
}

TEST_CASE("initialization displacement and sequence") {
    CHECK(init_displacement(BoundingBox{0, 0, 20, 10}) == doctest::Approx(0.3));
    CHECK(init_displacement(BoundingBox{0, 0, 50, 50}) == doctest::Approx(1.0));
    Frame frame(60, 80, 0.2f);
    for (int y = 20; y < 40; ++y)
        for (int x = 30; x < 50; ++x) frame(y, x) = 0.8f;
    BoundingBox box{40, 30, 20, 20};
    FrameSequence seq = make_init_sequence(frame, box);
    CHECK(seq.frames.size() == 7);
    CHECK(seq.timestamps.front() == 0);
    CHECK(seq.timestamps.back() == 40000);
    CHECK(seq.frames[0] == frame);
    CHECK(seq.frames[3] == frame);
    EventWindow w = make_init_window(frame, box);
    CHECK_FALSE(w.empty());
    CHECK(w.t_end() > 40000);
    for (const Event& e : w.events()) CHECK((e.x >= 28 && e.x <= 51 && e.y >= 18 && e.y <= 41));
    CHECK(make_init_window(Frame(60, 80, 0.5f), box).empty());
}

TEST_CASE("synthetic sequences") {
    SyntheticSpec still;
    still.duration_us = 100000;
    still.trajectory = {{0, 80, 60}};
    SyntheticSequence s = make_synthetic_sequence(still);
    REQUIRE(s.boxes.size() == s.frames.frames.size());
    for (const auto& b : s.boxes) CHECK(b == s.boxes.front());
    CHECK(simulate_events(s.frames).empty());

    SyntheticSpec disc = still;
    disc.shape = ShapeKind::Disc;
    disc.size = 20;
    for (TimeUs t : {0, 40000, 100000}) {
        BoundingBox b = synthetic_box_at(disc, t);
        CHECK(b.w == 20.0);
        CHECK(b.h == 20.0);
    }

    SyntheticSpec moving = still;
    moving.fps = 250;
    moving.trajectory = {{0, 40, 60}, {100000, 65, 60}};
    auto times = synthetic_frame_times(moving);
    CHECK(times.size() == 26);
    SyntheticSequence m = make_synthetic_sequence(moving);
    for (std::size_t i = 1; i < m.boxes.size(); ++i) {
        CHECK(m.boxes[i].cx - m.boxes[i - 1].cx == doctest::Approx(1.0));
        CHECK(m.boxes[i].cy == 60.0);
    }
    CHECK_FALSE(simulate_events(m.frames).empty());

    SyntheticSpec bar = still;
    bar.shape = ShapeKind::Bar;
    bar.size = 40;
    CHECK(synthetic_box_extent(bar) == std::pair<double, double>{40.0, 14.0});
    CHECK(parse_shape_kind(to_string(ShapeKind::Bar)) == ShapeKind::Bar);

    SyntheticSpec escaping = still;
    escaping.trajectory = {{0, 80, 60}, {50000, 155, 60}};
    CHECK_THROWS_AS(validate_synthetic_spec(escaping), InvalidArgument);
    CHECK_THROWS_AS(make_synthetic_sequence(escaping), InvalidArgument);
}

TEST_CASE("frames are rendered in [0, 1] and deterministic") {
    SyntheticSpec spec;
    spec.textured_background = true;
    spec.texture_seed = 4;
    spec.trajectory = {{0, 50, 50}, {1000000, 100, 70}};
    Frame a = render_synthetic_frame(spec, 123456);
    CHECK(a == render_synthetic_frame(spec, 123456));
    for (float v : a.values()) CHECK((v >= 0.0f && v <= 1.0f));
}

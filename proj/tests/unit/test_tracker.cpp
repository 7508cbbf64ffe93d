#include <cmath>
#include <memory>

#include "doctest.h"
#include "evtrack/dataset.hpp"
#include "evtrack/embedding.hpp"
#include "evtrack/error.hpp"
#include "evtrack/pipeline.hpp"
#include "evtrack/simulator.hpp"
#include "evtrack/tracker.hpp"
#include "test_support.hpp"

using namespace evtrack;

namespace {

const SensorGeometry kSensor{160, 120};

std::shared_ptr<const net::SiameseModel<float>> small_model(std::uint64_t seed = 1, double width = 0.25) {
    auto model = std::make_shared<net::SiameseModel<float>>(net::Architecture::alexnet_scaled(18, width));
    model->initialize(seed);
    return model;
}

std::vector<Event> events_at(int x, int y, int count, TimeUs t0 = 0) {
    std::vector<Event> events;
    for (int i = 0; i < count; ++i) events.push_back({t0 + static_cast<TimeUs>(i), static_cast<std::uint16_t>(x),
                                                      static_cast<std::uint16_t>(y), static_cast<std::int8_t>(i % 2 ? -1 : 1)});
    return events;
}

std::vector<Event> events_near(const BoundingBox& box, int count, TimeUs t0, TimeUs t1, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dx(box.left(), box.right()), dy(box.top(), box.bottom());
    std::uniform_int_distribution<TimeUs> dt(t0, t1 - 1);
    std::vector<Event> events(count);
    for (auto& e : events) {
        e = {dt(rng), static_cast<std::uint16_t>(dx(rng)), static_cast<std::uint16_t>(dy(rng)), 1};
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    return events;
}

}  // namespace

TEST_CASE("edge detector threshold arithmetic") {
    BoundingBox box{80, 60, 20, 10};
    EdgeDecision none = edge_detector(EventWindow({}, 0, 100, kSensor), box);
    CHECK(none.skip());
    CHECK(none.count == 0);
    CHECK(none.threshold == doctest::Approx(43.75));
    EdgeDecision above = edge_detector(EventWindow(events_at(80, 60, 44), 0, 100, kSensor), box);
    CHECK(above.count == 44);
    CHECK_FALSE(above.skip());
    EdgeDecision below = edge_detector(EventWindow(events_at(80, 60, 43), 0, 100, kSensor), box);
    CHECK(below.skip());
    EdgeDecision outside = edge_detector(EventWindow(events_at(5, 5, 100), 0, 200, kSensor), box);
    CHECK(outside.skip());
}

TEST_CASE("cosine window") {
    Grid2<double> w = make_cosine_window(17, 17);
    CHECK(w(8, 8) == doctest::Approx(1.0));
    for (int i = 0; i < 17; ++i) {
        CHECK(w(0, i) == doctest::Approx(0.0));
        CHECK(w(16, i) == doctest::Approx(0.0));
        CHECK(w(i, 0) == doctest::Approx(0.0));
        CHECK(w(i, 16) == doctest::Approx(0.0));
    }
    for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 17; ++x) {
            CHECK(w(y, x) == w(16 - y, x));
            CHECK(w(y, x) == w(y, 16 - x));
            CHECK(w(y, x) == doctest::Approx(w(x, y)));
        }
    Grid2<double> even = make_cosine_window(4, 6);
    double peak = 0;
    for (double v : even.values()) peak = std::max(peak, v);
    CHECK(peak == doctest::Approx(1.0));
    CHECK(make_cosine_window(1, 1)(0, 0) == 1.0);
}

TEST_CASE("argmax breaks ties by first row-major occurrence") {
    Grid2<double> g(3, 4, 0.0);
    g(1, 2) = 5;
    g(2, 0) = 5;
    CHECK(argmax(g) == std::pair<int, int>{1, 2});
    Grid2<double> flat(3, 3, 1.0);
    CHECK(argmax(flat) == std::pair<int, int>{0, 0});
}

TEST_CASE("blended response normalization and limits") {
    TrackerConfig raw;
    raw.window_influence = 0.0;
    Tracker plain(small_model(), raw);
    Grid2<float> scores(17, 17);
    for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 17; ++x) scores(y, x) = static_cast<float>(std::sin(y * 0.7) + x * 0.1);
    Grid2<double> r = plain.blended_response(scores);
    CHECK(r.height() == 257);
    CHECK(r.width() == 257);
    auto [lo, hi] = std::minmax_element(r.storage().begin(), r.storage().end());
    CHECK(*lo == doctest::Approx(0.0));
    CHECK(*hi == doctest::Approx(1.0));

    TrackerConfig frozen;
    frozen.window_influence = 1.0;
    Tracker still(small_model(), frozen);
    CHECK(argmax(still.blended_response(scores)) == std::pair<int, int>{128, 128});
}

TEST_CASE("init_target forms an exemplar and rejects empty regions") {
    Tracker tracker(small_model(), TrackerConfig{});
    BoundingBox box{80, 60, 20, 16};
    EventWindow init(events_near(box, 300, 0, 40000, 1), 0, 40000, kSensor);
    TrackerState a = tracker.init_target(init, box);
    TrackerState b = tracker.init_target(init, box);
    CHECK(a.initialized);
    CHECK(a.box == box);
    CHECK_FALSE(a.paused);
    CHECK(a.exemplar.channels() == 64);
    CHECK(a.exemplar.height() == 6);
    CHECK(a.exemplar.width() == 6);
    CHECK(a.exemplar == b.exemplar);
    CHECK_THROWS_AS(tracker.init_target(EventWindow({}, 0, 1000, kSensor), box), InitializationError);
    CHECK_THROWS_AS(tracker.init_target(EventWindow(events_at(2, 2, 50), 0, 1000, kSensor), box),
                    InitializationError);
}

TEST_CASE("full-width exemplar is 256x6x6") {
    Tracker tracker(small_model(1, 1.0), TrackerConfig{});
    BoundingBox box{80, 60, 24, 24};
    TrackerState s = tracker.init_target(EventWindow(events_near(box, 200, 0, 1000, 2), 0, 1000, kSensor), box);
    CHECK(s.exemplar.channels() == 256);
    CHECK(s.exemplar.height() == 6);
    CHECK(s.exemplar.width() == 6);
}

TEST_CASE("step requires an initialized state") {
    Tracker tracker(small_model(), TrackerConfig{});
    TrackerState empty;
    CHECK_THROWS_AS(tracker.step(empty, EventWindow({}, 0, 10, kSensor)), StateError);
}

TEST_CASE("skip steps change only the paused flag and step counter") {
    Tracker tracker(small_model(), TrackerConfig{});
    BoundingBox box{80, 60, 20, 16};
    TrackerState state = tracker.init_target(EventWindow(events_near(box, 300, 0, 40000, 3), 0, 40000, kSensor), box);
    const Tensor3<float> exemplar = state.exemplar;
    for (int i = 0; i < 25; ++i) {
        TimeUs t0 = 40000 + i * 40000;
        StepResult r = tracker.step(state, EventWindow(events_at(3, 3, 500, t0), t0, t0 + 40000, kSensor));
        CHECK(r.skipped);
        CHECK(r.box == box);
    }
    CHECK(state.box == box);
    CHECK(state.paused);
    CHECK(state.steps == 25);
    CHECK(state.network_evaluations == 1);
    CHECK(state.exemplar == exemplar);
}

TEST_CASE("tracking steps are deterministic and bounded") {
    Tracker tracker(small_model(2), TrackerConfig{});
    BoundingBox box{80, 60, 20, 16};
    TrackerState state = tracker.init_target(EventWindow(events_near(box, 300, 0, 40000, 4), 0, 40000, kSensor), box);
    EventWindow window(events_near(BoundingBox{83, 61, 20, 16}, 400, 40000, 80000, 5), 40000, 80000, kSensor);
    TrackerState copy = state;
    StepResult a = tracker.step(state, window);
    StepResult b = tracker.step(copy, window);
    CHECK_FALSE(a.skipped);
    CHECK(a.box == b.box);
    CHECK(state.network_evaluations == 2);
    CHECK_FALSE(state.paused);
    auto [rw, rh] = region_size(box);
    CHECK(std::abs(a.box.cx - box.cx) <= 255.0 / 127.0 * rw / 2);
    CHECK(std::abs(a.box.cy - box.cy) <= 255.0 / 127.0 * rh / 2);
    CHECK(a.box.w == box.w);
    CHECK(a.box.h == box.h);
}

TEST_CASE("full window influence freezes the box") {
    TrackerConfig config;
    config.window_influence = 1.0;
    Tracker tracker(small_model(3), config);
    BoundingBox box{80, 60, 20, 16};
    TrackerState state = tracker.init_target(EventWindow(events_near(box, 300, 0, 40000, 6), 0, 40000, kSensor), box);
    StepResult r = tracker.step(state, EventWindow(events_near(BoundingBox{90, 66, 20, 16}, 400, 40000, 80000, 7),
                                                   40000, 80000, kSensor));
    CHECK_FALSE(r.skipped);
    CHECK(r.peak_row == 128);
    CHECK(r.peak_col == 128);
    CHECK(r.box == box);
}

TEST_CASE("exemplar policies and scale pyramid") {
    BoundingBox box{80, 60, 20, 16};
    EventWindow init(events_near(box, 300, 0, 40000, 8), 0, 40000, kSensor);
    EventWindow next(events_near(BoundingBox{82, 60, 20, 16}, 400, 40000, 80000, 9), 40000, 80000, kSensor);

    TrackerConfig sliding;
    sliding.exemplar_policy = ExemplarPolicy::Sliding;
    Tracker slide(small_model(4), sliding);
    TrackerState s = slide.init_target(init, box);
    auto before = s.exemplar;
    slide.step(s, next);
    CHECK_FALSE(s.exemplar == before);
    CHECK(s.network_evaluations == 3);

    TrackerConfig pyramid;
    pyramid.scales = {0.96, 1.0, 1.04};
    Tracker multi(small_model(4), pyramid);
    TrackerState m = multi.init_target(init, box);
    StepResult r = multi.step(m, next);
    CHECK(m.network_evaluations == 4);
    CHECK(r.box.valid());
    CHECK(r.box.w / r.box.h == doctest::Approx(box.w / box.h));

    CHECK(parse_exemplar_policy(to_string(ExemplarPolicy::Sliding)) == ExemplarPolicy::Sliding);
    TrackerConfig bad;
    bad.window_influence = 1.5;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = TrackerConfig{};
    bad.upsample = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("initialization segment reveals more target edges than the first window") {
    SyntheticSpec spec;
    spec.geometry = kSensor;
    spec.size = 30;
    spec.duration_us = 200000;
    spec.trajectory = {{0, 60, 60}, {200000, 70, 60}};
    SyntheticDatasetOptions options;
    Sequence seq = generate_synthetic("edges", spec, options);
    REQUIRE(seq.init.has_value());
    BoundingBox box = seq.groundtruth_at(0);
    EmbeddingConfig emb;
    auto nonzero = [&](const EventWindow& w) {
        auto [crop, region] = select_target_region(w, box);
        EventTensor t = embed(crop, EmbeddingConfig{EmbeddingMethod::TwoChannelImage, 9});
        int pixels = 0;
        for (int y = 0; y < t.height(); ++y)
            for (int x = 0; x < t.width(); ++x) pixels += (t(0, y, x) + t(1, y, x)) > 0;
        return pixels;
    };
    int init_pixels = nonzero(*seq.init);
    int first_pixels = nonzero(seq.window(0, 40000));
    CHECK(init_pixels > 0);
    CHECK(init_pixels >= first_pixels);
}

TEST_CASE("track CSV round-trip") {
    std::vector<TrackRecord> records{{0, 40000, {10.5, 20.25, 30, 40}, false}, {40000, 80000, {11, 21, 30, 40}, true}};
    std::string text = format_track_csv(records);
    CHECK(text.rfind("0,40000,", 0) == 0);
    auto back = parse_track_csv(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].box == records[0].box);
    CHECK(back[1].skipped);
    CHECK(format_track_csv(back) == text);
    CHECK_THROWS_AS(parse_track_csv("1,2,3\n"), ParseError);
}

TEST_CASE("track_sequence writes one record per window") {
    SyntheticSpec spec;
    spec.geometry = kSensor;
    spec.size = 24;
    spec.duration_us = 400000;
    spec.trajectory = {{0, 50, 60}, {400000, 70, 60}};
    Sequence seq = generate_synthetic("move", spec);
    Tracker tracker(small_model(5), TrackerConfig{});
    SequenceTrack track = track_sequence(tracker, seq);
    CHECK(track.records.size() == seq.windows(40000).size());
    CHECK(track.records.size() == 10);
    TrackRun run = make_track_run(seq, track.records);
    CHECK(run.predicted.size() == run.groundtruth.size());
    CHECK(run.groundtruth.back().cx == doctest::Approx(70.0));
}

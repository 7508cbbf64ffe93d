#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "evtrack/embedding.hpp"
#include "evtrack/error.hpp"
#include "test_support.hpp"

using namespace evtrack;

namespace {

const SensorGeometry kGeom{20, 16};

double total(const EventTensor& t) {
    double s = 0;
    for (float v : t.values()) s += v;
    return s;
}

EmbeddingConfig config(EmbeddingMethod m, int bins = 9) { return EmbeddingConfig{m, bins}; }

}  // namespace

TEST_CASE("channel counts per method") {
    CHECK(config(EmbeddingMethod::Est).channels() == 18);
    CHECK(config(EmbeddingMethod::Est, 3).channels() == 6);
    CHECK(config(EmbeddingMethod::OneChannelImage).channels() == 1);
    CHECK(config(EmbeddingMethod::TwoChannelImage).channels() == 2);
    CHECK(config(EmbeddingMethod::TwoChannelVoxel).channels() == 18);
    for (auto m : {EmbeddingMethod::Est, EmbeddingMethod::OneChannelImage, EmbeddingMethod::TwoChannelImage,
                   EmbeddingMethod::TwoChannelVoxel})
        CHECK(parse_embedding_method(to_string(m)) == m);
    CHECK_THROWS(parse_embedding_method("nope"));
}

TEST_CASE("empty windows give zero tensors of the right shape") {
    EventWindow w({}, 0, 1000, kGeom);
    for (auto m : {EmbeddingMethod::Est, EmbeddingMethod::OneChannelImage, EmbeddingMethod::TwoChannelImage,
                   EmbeddingMethod::TwoChannelVoxel}) {
        EventTensor t = embed(w, config(m));
        CHECK(t.channels() == config(m).channels());
        CHECK(t.height() == 16);
        CHECK(t.width() == 20);
        CHECK(total(t) == 0.0);
    }
}

TEST_CASE("EST of one event at the window middle") {
    EventWindow w({{500, 3, 4, 1}}, 0, 1000, kGeom);
    EventTensor t = embed_est(w, config(EmbeddingMethod::Est));
    CHECK(t(4, 4, 3) == 0.5f);
    CHECK(total(t) == doctest::Approx(0.5));
}

TEST_CASE("EST of an event at the window start vanishes") {
    EventWindow w({{0, 3, 4, -1}}, 0, 1000, kGeom);
    CHECK(total(embed_est(w, config(EmbeddingMethod::Est))) == 0.0);
}

TEST_CASE("EST splits between neighbouring bins") {
    // t* = 0.3, b* = 2.4: 0.6 of 0.3 in bin 2, 0.4 of 0.3 in bin 3, negative group.
    EventWindow w({{300, 1, 2, -1}}, 0, 1000, kGeom);
    EventTensor t = embed_est(w, config(EmbeddingMethod::Est));
    CHECK(t(9 + 2, 2, 1) == doctest::Approx(0.18));
    CHECK(t(9 + 3, 2, 1) == doctest::Approx(0.12));
    CHECK(total(t) == doctest::Approx(0.3));
}

TEST_CASE("EST rejects zero-length windows") {
    EventWindow w({}, 5, 5 + 1, kGeom);
    CHECK_NOTHROW(embed_est(w, config(EmbeddingMethod::Est)));
    CHECK_THROWS_AS(EventWindow({}, 5, 5, kGeom), InvalidArgument);
}

TEST_CASE("counting embeddings") {
    std::vector<Event> events;
    for (int i = 0; i < 3; ++i) events.push_back({static_cast<TimeUs>(i), 7, 8, 1});
    for (int i = 3; i < 5; ++i) events.push_back({static_cast<TimeUs>(i), 7, 8, -1});
    EventWindow w(events, 0, 1000, kGeom);
    CHECK(embed_one_channel(w, config(EmbeddingMethod::OneChannelImage))(0, 8, 7) == 5.0f);
    EventTensor two = embed_two_channel_image(w, config(EmbeddingMethod::TwoChannelImage));
    CHECK(two(0, 8, 7) == 3.0f);
    CHECK(two(1, 8, 7) == 2.0f);
}

TEST_CASE("voxel puts unit weight in the middle bin") {
    EventWindow w({{500, 3, 4, 1}}, 0, 1000, kGeom);
    EventTensor t = embed_two_channel_voxel(w, config(EmbeddingMethod::TwoChannelVoxel));
    CHECK(t(4, 4, 3) == 1.0f);
    CHECK(total(t) == 1.0);
}

TEST_CASE("mass conservation on random windows") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto events = test::random_events(3000, kGeom, 1000, 41000, seed);
        EventWindow w(events, 1000, 41000, kGeom);
        double expected = 0;
        for (const Event& e : events) expected += static_cast<double>(e.t - 1000) / 40000.0;
        CHECK(total(embed_est(w, config(EmbeddingMethod::Est))) == doctest::Approx(expected).epsilon(1e-5));
        CHECK(total(embed_two_channel_voxel(w, config(EmbeddingMethod::TwoChannelVoxel))) == 3000.0);
        EventTensor est = embed_est(w, config(EmbeddingMethod::Est));
        for (float v : est.values()) CHECK(v >= 0.0f);
    }
}

TEST_CASE("polarity separation") {
    auto events = test::random_events(500, kGeom, 0, 1000, 3);
    std::vector<Event> positive;
    for (const Event& e : events)
        if (e.p > 0) positive.push_back(e);
    EventTensor all = embed_est(EventWindow(events, 0, 1000, kGeom), config(EmbeddingMethod::Est));
    EventTensor pos = embed_est(EventWindow(positive, 0, 1000, kGeom), config(EmbeddingMethod::Est));
    for (int c = 0; c < 18; ++c)
        for (int y = 0; y < kGeom.height; ++y)
            for (int x = 0; x < kGeom.width; ++x) {
                if (c < 9) CHECK(pos(c, y, x) == all(c, y, x));
                else CHECK(pos(c, y, x) == 0.0f);
            }
}

TEST_CASE("appending events never decreases EST values") {
    auto events = test::random_events(600, kGeom, 0, 1000, 8);
    std::vector<Event> prefix(events.begin(), events.begin() + 300);
    EventTensor a = embed_est(EventWindow(prefix, 0, 1000, kGeom), config(EmbeddingMethod::Est));
    EventTensor b = embed_est(EventWindow(events, 0, 1000, kGeom), config(EmbeddingMethod::Est));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b.storage()[i] >= a.storage()[i]);
}

TEST_CASE("resize_bilinear corner-aligned arithmetic") {
    EventTensor t(1, 2, 2);
    t(0, 0, 0) = 0;
    t(0, 0, 1) = 1;
    t(0, 1, 0) = 2;
    t(0, 1, 1) = 3;
    EventTensor r = resize_bilinear(t, 3, 3);
    CHECK(r(0, 1, 1) == doctest::Approx(1.5));
    CHECK(r(0, 0, 0) == 0.0f);
    CHECK(r(0, 2, 2) == 3.0f);
    CHECK(r(0, 0, 1) == doctest::Approx(0.5));
    CHECK(resize_bilinear(t, 2, 2) == t);
    CHECK_THROWS(resize_bilinear(t, 0, 3));
}

TEST_CASE("resize_bilinear preserves constants and bounds") {
    EventTensor c(2, 7, 5, 0.25f);
    EventTensor r = resize_bilinear(c, 127, 127);
    for (float v : r.values()) CHECK(v == 0.25f);

    std::mt19937 rng(1);
    std::uniform_real_distribution<float> u(-2, 5);
    EventTensor t(3, 9, 13);
    for (float& v : t.storage()) v = u(rng);
    EventTensor up = resize_bilinear(t, 31, 17);
    for (int ch = 0; ch < 3; ++ch) {
        auto in = std::span(t.plane(ch), t.plane_size());
        auto [lo, hi] = std::minmax_element(in.begin(), in.end());
        for (int y = 0; y < 31; ++y)
            for (int x = 0; x < 17; ++x) {
                CHECK(up(ch, y, x) >= *lo);
                CHECK(up(ch, y, x) <= *hi);
            }
    }
}

TEST_CASE("embedding is deterministic") {
    auto events = test::random_events(2000, kGeom, 0, 5000, 12);
    EventWindow w(events, 0, 5000, kGeom);
    CHECK(embed(w, config(EmbeddingMethod::Est)) == embed(w, config(EmbeddingMethod::Est)));
}

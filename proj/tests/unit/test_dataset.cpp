#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "evtrack/atomic_file.hpp"
#include "evtrack/dataset.hpp"
#include "evtrack/error.hpp"
#include "evtrack/image_io.hpp"
#include "test_support.hpp"

using namespace evtrack;

namespace {

Sequence small_sequence(const std::string& name, bool with_init = true) {
    SyntheticSpec spec;
    spec.geometry = {120, 90};
    spec.size = 20;
    spec.duration_us = 200000;
    spec.trajectory = {{0, 40, 45}, {200000, 60, 40}};
    SyntheticDatasetOptions options;
    options.with_init = with_init;
    return generate_synthetic(name, spec, options);
}

}  // namespace

TEST_CASE("manifest round-trip") {
    SequenceManifest m;
    m.name = "seq001";
    m.description = "synthetic square";
    m.geometry = {346, 260};
    m.start_us = 40001;
    m.end_us = 4040001;
    m.init_events_file = "init_events.bin";
    m.init_start_us = 0;
    m.init_end_us = 40001;
    SequenceManifest back = parse_manifest(format_manifest(m));
    CHECK(format_manifest(back) == format_manifest(m));
    CHECK(back.geometry == m.geometry);
    CHECK(back.init_events_file == "init_events.bin");
    CHECK_THROWS_AS(parse_manifest("name = x\nwidth = -3\n"), ParseError);
}

TEST_CASE("groundtruth and timestamp text formats") {
    std::vector<BoundingBox> boxes{{1.5, 2.25, 10, 20}, {3, 4, 5, 6}};
    CHECK(parse_groundtruth(format_groundtruth(boxes)) == boxes);
    CHECK(parse_timestamps(format_timestamps({0, 40000, 80000})) == std::vector<TimeUs>{0, 40000, 80000});
    CHECK_THROWS_AS(parse_groundtruth("1,2,3\n"), ParseError);
    CHECK_THROWS_AS(parse_groundtruth("1,2,0,4\n"), ParseError);
    CHECK_THROWS_AS(parse_timestamps("5\n3\n"), ParseError);
    CHECK_THROWS_AS(parse_timestamps("abc\n"), ParseError);
}

TEST_CASE("generated sequences are consistent") {
    Sequence s = small_sequence("a");
    CHECK(s.gt_times.size() == s.groundtruth.size());
    CHECK(s.gt_times.front() == s.manifest.start_us);
    CHECK(s.manifest.end_us - s.manifest.start_us == 200000);
    CHECK(is_time_sorted(s.events));
    for (const Event& e : s.events) {
        CHECK(e.t >= s.manifest.start_us);
        CHECK(e.t < s.manifest.end_us + 1);
    }
    REQUIRE(s.init.has_value());
    CHECK_FALSE(s.init->empty());
    auto windows = s.windows(40000);
    CHECK(windows.size() == 5);
    CHECK(windows.front().first == s.manifest.start_us);
    for (std::size_t i = 1; i < windows.size(); ++i) CHECK(windows[i].first == windows[i - 1].second);
    BoundingBox mid = s.groundtruth_at(s.manifest.start_us + 100000);
    CHECK(mid.cx == doctest::Approx(50));
    CHECK(mid.cy == doctest::Approx(42.5));
    CHECK_FALSE(small_sequence("b", false).init.has_value());
}

TEST_CASE("sequence directories round-trip") {
    test::TempDir dir("dataset");
    Sequence s = small_sequence("rt");
    save_sequence(dir / "rt", s);
    Sequence back = load_sequence(dir / "rt");
    CHECK(back.events == s.events);
    CHECK(back.groundtruth == s.groundtruth);
    CHECK(back.gt_times == s.gt_times);
    CHECK(format_manifest(back.manifest) == format_manifest(s.manifest));
    REQUIRE(back.init.has_value());
    CHECK(back.init->events() == s.init->events());

    save_sequence(dir / "rt2", small_sequence("rt2", false));
    std::filesystem::create_directories(dir / "not_a_sequence");
    auto listed = list_sequences(dir.path());
    REQUIRE(listed.size() == 2);
    CHECK(listed[0].filename() == "rt");
    CHECK(list_sequences(dir / "rt").size() == 1);

    std::ofstream(dir / "rt" / "groundtruth.txt") << "1,2,3,4\n";
    CHECK_THROWS_AS(load_sequence(dir / "rt"), ParseError);
}

TEST_CASE("split_sequences is seed-driven and complete") {
    std::vector<std::string> names;
    for (int i = 0; i < 10; ++i) names.push_back("s" + std::to_string(i));
    auto [train, test] = split_sequences(names, 0.8, 3);
    CHECK(train.size() == 8);
    CHECK(test.size() == 2);
    std::set<std::string> all(train.begin(), train.end());
    all.insert(test.begin(), test.end());
    CHECK(all.size() == 10);
    CHECK(split_sequences(names, 0.8, 3) == std::make_pair(train, test));
    CHECK(std::is_sorted(train.begin(), train.end(), [&](auto& a, auto& b) {
        return std::find(names.begin(), names.end(), a) < std::find(names.begin(), names.end(), b);
    }));
    CHECK(split_sequences({"only"}, 0.8, 1).first.size() == 1);
}

TEST_CASE("random synthetic specs stay inside the sensor") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SyntheticSpec spec = random_synthetic_spec(seed);
        CHECK_NOTHROW(validate_synthetic_spec(spec));
        CHECK(spec.geometry == SensorGeometry{346, 260});
        for (std::size_t i = 1; i < spec.trajectory.size(); ++i) {
            const auto &a = spec.trajectory[i - 1], &b = spec.trajectory[i];
            double step = std::hypot(b.cx - a.cx, b.cy - a.cy) * 40000.0 / static_cast<double>(b.t - a.t);
            CHECK(step <= 2.0 + 1e-9);
        }
    }
}

TEST_CASE("PGM round-trip") {
    Frame f(3, 4);
    for (std::size_t i = 0; i < f.size(); ++i) f.storage()[i] = static_cast<float>(i * 20) / 255.0f;
    std::stringstream buf;
    write_pgm(buf, f);
    Frame back = read_pgm(buf);
    REQUIRE(back.same_shape(f));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back.storage()[i] == doctest::Approx(f.storage()[i]));
    std::stringstream ascii("P2\n# note\n2 1\n10\n0 10\n");
    Frame a = read_pgm(ascii);
    CHECK(a(0, 1) == 1.0f);
    std::stringstream bad("P6\n1 1\n255\nabc");
    CHECK_THROWS_AS(read_pgm(bad), ParseError);
}

TEST_CASE("atomic writes leave no temporaries") {
    test::TempDir dir("atomic");
    write_text_atomic(dir / "a.txt", "hello\n");
    CHECK(read_text_file(dir / "a.txt") == "hello\n");
    write_text_atomic(dir / "a.txt", "bye\n");
    CHECK(read_text_file(dir / "a.txt") == "bye\n");
    int files = 0;
    for (auto& e : std::filesystem::directory_iterator(dir.path())) files += e.is_regular_file();
    CHECK(files == 1);
    CHECK_THROWS(write_file_atomic(dir / "b.txt", [](std::ostream&) { throw std::runtime_error("boom"); }));
    CHECK_FALSE(std::filesystem::exists(dir / "b.txt"));
}

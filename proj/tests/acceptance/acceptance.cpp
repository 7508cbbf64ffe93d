#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evtrack/cli/app.hpp"
#include "evtrack/dataset.hpp"
#include "evtrack/embedding.hpp"
#include "evtrack/evaluation.hpp"
#include "evtrack/net/correlation.hpp"
#include "evtrack/net/gradcheck.hpp"
#include "evtrack/net/loss.hpp"
#include "evtrack/net/weights_io.hpp"
#include "evtrack/pipeline.hpp"
#include "evtrack/simulator.hpp"
#include "evtrack/tracker.hpp"
#include "evtrack/training.hpp"

using namespace evtrack;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

void progress(const std::string& text) {
    std::fprintf(stderr, "[acceptance] %s\n", text.c_str());
    std::fflush(stderr);
}

std::vector<Event> random_events(std::size_t count, SensorGeometry geom, TimeUs t0, TimeUs t1, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<TimeUs> t(t0, t1 - 1);
    std::uniform_int_distribution<int> x(0, geom.width - 1), y(0, geom.height - 1), p(0, 1);
    std::vector<Event> events(count);
    for (Event& e : events) {
        e.t = t(rng);
        e.x = static_cast<std::uint16_t>(x(rng));
        e.y = static_cast<std::uint16_t>(y(rng));
        e.p = p(rng) ? 1 : -1;
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    return events;
}

constexpr SensorGeometry kSensor{346, 260};

// 1. Gradient check on the reduced network.
Verdict gradient_check() {
    const auto start = Clock::now();
    const net::GradCheckResult r = net::run_reduced_grad_check();
    const double elapsed = seconds_since(start);
    Verdict v;
    v.pass = r.max_relative_error < 1e-5 && r.checked > 0 && elapsed < 60.0;
    v.detail = format("max_rel_err=%.3e (< 1e-5) checked=%zu skipped=%zu worst=%s time=%.2fs (< 60s)",
                      r.max_relative_error, r.checked, r.skipped, r.worst_parameter.c_str(), elapsed);
    return v;
}

// 2. Correlation against a naive oracle.
Verdict correlation_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    int exact = 0;
    for (int n = 0; n < 100; ++n) {
        const int c = 1 + static_cast<int>(rng() % 8);
        const int xh = 1 + static_cast<int>(rng() % 10), xw = 1 + static_cast<int>(rng() % 10);
        const int zh = 1 + static_cast<int>(rng() % xh), zw = 1 + static_cast<int>(rng() % xw);
        Tensor3<double> z(c, zh, zw), x(c, xh, xw);
        for (double& v : z.values()) v = value(rng);
        for (double& v : x.values()) v = value(rng);
        const Grid2<double> got = net::cross_correlate(z, x);
        bool same = got.height() == xh - zh + 1 && got.width() == xw - zw + 1;
        for (int u = 0; same && u < got.height(); ++u)
            for (int w = 0; same && w < got.width(); ++w) {
                double s = 0.0;
                for (int k = 0; k < c; ++k)
                    for (int i = 0; i < zh; ++i)
                        for (int j = 0; j < zw; ++j) s += z(k, i, j) * x(k, u + i, w + j);
                same = got(u, w) == s;
            }
        exact += same;
    }
    const double elapsed = seconds_since(start);
    return {exact == 100 && elapsed < 5.0, format("exact=%d/100 time=%.3fs (< 5s)", exact, elapsed)};
}

// 3. Embedding mass conservation.
Verdict embedding_mass() {
    const auto start = Clock::now();
    EmbeddingConfig est{EmbeddingMethod::Est, 9};
    EmbeddingConfig voxel{EmbeddingMethod::TwoChannelVoxel, 9};
    double worst_est = 0.0;
    int voxel_exact = 0;
    for (std::uint64_t w = 0; w < 100; ++w) {
        const TimeUs t0 = 40000 * w, t1 = t0 + 40000;
        const auto events = random_events(10000, kSensor, t0, t1, 300 + w);
        const EventWindow window(events, t0, t1, kSensor);
        double expected = 0.0;
        for (const Event& e : events) expected += static_cast<double>(e.t - t0) / 40000.0;
        double est_mass = 0.0, voxel_mass = 0.0;
        const EventTensor est_tensor = embed(window, est), voxel_tensor = embed(window, voxel);
        for (float v : est_tensor.values()) est_mass += v;
        for (float v : voxel_tensor.values()) voxel_mass += v;
        worst_est = std::max(worst_est, std::abs(est_mass - expected) / expected);
        voxel_exact += voxel_mass == 10000.0;
    }
    const double elapsed = seconds_since(start);
    return {worst_est < 1e-5 && voxel_exact == 100 && elapsed < 5.0,
            format("est_rel_err=%.2e (< 1e-5) voxel_mass_exact=%d/100 windows=100x10000 time=%.3fs (< 5s)", worst_est,
                   voxel_exact, elapsed)};
}

// 4. Label map.
Verdict label_map() {
    const net::LabelMap l = net::make_label_map(17, 17, 3.0);
    bool symmetric = true;
    for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 17; ++x) {
            const int v = l.values(y, x);
            const int images[] = {l.values(y, 16 - x), l.values(16 - y, x), l.values(16 - y, 16 - x), l.values(x, y),
                                  l.values(16 - x, y), l.values(x, 16 - y), l.values(16 - x, 16 - y)};
            for (int w : images) symmetric = symmetric && w == v;
        }
    const bool centered = l.center_y == 8 && l.center_x == 8 && l.values(8, 8) == 1;
    return {l.positives() == 25 && symmetric && centered,
            format("positives=%d (== 25) dihedral_symmetric=%s centered=%s", l.positives(), symmetric ? "yes" : "no",
                   centered ? "yes" : "no")};
}

// 5. Log-ramp simulator fixture.
Verdict log_ramp() {
    constexpr double eps = 1e-3, threshold = 0.15;
    constexpr TimeUs duration = 100000;
    const double deltas[] = {0.1, 0.31, 0.47, 0.73, 1.2, 2.05};
    const int n = static_cast<int>(std::size(deltas));
    const double base = std::log(0.1 + eps);
    Frame low(1, n), high(1, n);
    for (int i = 0; i < n; ++i) {
        low(0, i) = static_cast<float>(std::exp(base) - eps);
        high(0, i) = static_cast<float>(std::exp(base + deltas[i]) - eps);
    }
    auto run = [&](const Frame& a, const Frame& b) {
        FrameSequence s;
        s.frames = {a, b};
        s.timestamps = {0, duration};
        return simulate_events(s);
    };
    const auto up = run(low, high);
    const auto down = run(high, low);
    bool counts = true, times = true;
    int expected_total = 0;
    double worst_dt = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dl = std::log(static_cast<double>(high(0, i)) + eps) - std::log(static_cast<double>(low(0, i)) + eps);
        const int k = static_cast<int>(std::floor(dl / threshold));
        expected_total += k;
        std::vector<Event> px;
        for (const Event& e : up)
            if (e.x == i) px.push_back(e);
        counts = counts && static_cast<int>(px.size()) == k;
        for (int j = 0; j < std::min<int>(k, static_cast<int>(px.size())); ++j) {
            const double analytic = (j + 1) * threshold / dl * static_cast<double>(duration);
            const double dt = std::abs(static_cast<double>(px[j].t) - analytic);
            worst_dt = std::max(worst_dt, dt);
            times = times && dt <= 1.0 && px[j].p == 1;
        }
    }
    bool mirror = up.size() == down.size();
    std::multiset<std::tuple<TimeUs, int>> a, b;
    for (const Event& e : up) a.insert({e.t, e.x});
    for (const Event& e : down) {
        b.insert({e.t, e.x});
        mirror = mirror && e.p == -1;
    }
    mirror = mirror && a == b;
    return {counts && times && mirror,
            format("events=%zu (expected %d) counts=%s max_time_err=%.3fus (<= 1us) mirror=%s", up.size(),
                   expected_total, counts ? "ok" : "bad", worst_dt, mirror ? "exact" : "broken")};
}

// 6. Static segment.
Verdict static_segment(const std::shared_ptr<const net::SiameseModel<float>>& model) {
    SyntheticSpec spec;
    spec.geometry = kSensor;
    spec.textured_background = true;
    spec.texture_seed = 6;
    spec.duration_us = 2400000;
    spec.trajectory = {{0, 150.0, 120.0}, {400000, 170.0, 130.0}};
    const Sequence seq = generate_synthetic("static", spec);
    TrackerConfig config;
    const Tracker tracker(model, config);
    TrackerState state = tracker.init_target(*seq.init, seq.groundtruth_at(0));
    std::optional<BoundingBox> frozen;
    std::uint64_t evaluations_at_freeze = 0;
    int static_windows = 0, skipped = 0, moved = 0;
    for (const auto& [t0, t1] : seq.windows(config.window_us)) {
        const std::uint64_t before = state.network_evaluations;
        const StepResult r = tracker.step(state, seq.window(t0, t1));
        if (t0 < 400000) continue;
        if (!frozen) {
            frozen = r.box;
            evaluations_at_freeze = before;
        }
        ++static_windows;
        skipped += r.skipped;
        moved += !(r.box == *frozen);
    }
    const std::uint64_t extra = state.network_evaluations - evaluations_at_freeze;
    return {static_windows == 50 && skipped == static_windows && moved == 0 && extra == 0,
            format("static_windows=%d skipped=%d box_changes=%d network_evaluations=%llu", static_windows, skipped, moved,
                   static_cast<unsigned long long>(extra))};
}

struct TrainingOutcome {
    Verdict verdict;
    std::shared_ptr<const net::SiameseModel<float>> model;
};

// 7. Training on synthetic sequences.
TrainingOutcome train_synthetic() {
    const auto start = Clock::now();
    std::vector<Sequence> sequences;
    RandomSpecOptions options;
    options.duration_us = 2000000;
    for (int i = 0; i < 5; ++i)
        sequences.push_back(generate_synthetic("train" + std::to_string(i), random_synthetic_spec(100 + i, options)));
    progress(format("generated 5 sequences in %.1fs", seconds_since(start)));
    RunConfig config;
    config.train.epochs = 50;
    config.train.pairs_per_sequence = 8;
    Trainer trainer(std::move(sequences), config);
    const auto log = trainer.run([&](const EpochStats& s, const auto&) {
        progress(format("epoch %d loss=%.6f lr=%.3g t=%.0fs", s.epoch, s.mean_loss, s.learning_rate, seconds_since(start)));
    });
    const double accuracy = trainer.peak_accuracy(3.0);
    const double elapsed = seconds_since(start);
    const double ratio = log.front().mean_loss / log.back().mean_loss;
    TrainingOutcome out;
    out.verdict.pass = ratio >= 5.0 && accuracy >= 0.9 && elapsed < 1800.0;
    out.verdict.detail = format("loss %.5f -> %.5f ratio=%.2f (>= 5) peak_within_3=%.3f (>= 0.9) pairs=%zu time=%.0fs (< 1800s)",
                                log.front().mean_loss, log.back().mean_loss, ratio, accuracy, trainer.pairs().size(),
                                elapsed);
    out.model = std::make_shared<const net::SiameseModel<float>>(trainer.model());
    return out;
}

// 8. Held-out tracking.
Verdict held_out_tracking(const std::shared_ptr<const net::SiameseModel<float>>& model) {
    RandomSpecOptions options;
    options.shape = ShapeKind::Square;
    options.speed = 2.0;
    options.duration_us = 4000000;
    const Sequence seq = generate_synthetic("heldout", random_synthetic_spec(9001, options));
    const Tracker tracker(model, TrackerConfig{});
    auto score = [&](bool use_init) {
        const SequenceTrack track = track_sequence(tracker, seq, use_init);
        const TrackRun run = make_track_run(seq, track.records);
        double mean = 0.0;
        for (std::size_t i = 0; i < run.predicted.size(); ++i) mean += iou(run.predicted[i], run.groundtruth[i]);
        return std::tuple{success_rate(run), mean / static_cast<double>(run.predicted.size()), run.predicted.size()};
    };
    const auto [rate, mean_iou, windows] = score(true);
    const auto [rate_no_init, mean_iou_no_init, windows_no_init] = score(false);
    return {windows == 100 && rate >= 0.8 && mean_iou >= 0.5 && rate_no_init <= rate,
            format("windows=%zu success_rate=%.3f (>= 0.8) mean_iou=%.3f (>= 0.5) no_init_success_rate=%.3f (<= %.3f)",
                   windows, rate, mean_iou, rate_no_init, rate)};
}

// 9. Metric fixtures.
TrackRun constant_run(const BoundingBox& predicted, const BoundingBox& groundtruth, int frames = 20) {
    TrackRun run;
    run.predicted.assign(frames, predicted);
    run.groundtruth.assign(frames, groundtruth);
    return run;
}

Verdict metric_fixtures() {
    std::vector<std::string> failed;
    int total = 0;
    auto check = [&](bool ok, const std::string& name) {
        ++total;
        if (!ok) failed.push_back(name);
    };
    const BoundingBox gt{5, 5, 10, 10};
    check(iou(gt, gt) == 1.0, "iou_identical");
    check(iou(gt, {40, 40, 10, 10}) == 0.0, "iou_disjoint");
    check(std::abs(iou(gt, {10, 5, 10, 10}) - 1.0 / 3.0) < 1e-15, "iou_one_third");

    check(std::abs(success_score(constant_run(gt, gt)) - 1.0) < 1e-12, "success_score_perfect");
    check(success_score(constant_run({40, 40, 10, 10}, gt)) == 0.0, "success_score_zero");
    double worst_constant = 0.0;
    for (double c : {0.1, 0.25, 0.3, 0.5, 0.75, 0.9}) {
        // A box nested in the ground truth with a fraction c of its width has IoU c.
        const TrackRun run = constant_run({5, 5, 10 * c, 10}, gt);
        worst_constant = std::max(worst_constant, std::abs(success_score(run) - c));
    }
    check(worst_constant < 1e-2, "success_score_constant_iou");

    check(std::abs(precision_score(constant_run(gt, gt)) - 1.0) < 1e-12, "precision_perfect");
    check(precision_score(constant_run({30, 30, 10, 10}, gt)) == 0.0, "precision_far");
    const BoundingBox gt68{0, 0, 6, 8};
    check(normalized_center_distance({3, 4, 6, 8}, gt68) == 0.5 &&
              std::abs(precision_score(constant_run({3, 4, 6, 8}, gt68)) - 0.5) < 1e-2,
          "precision_half");

    check(success_rate(constant_run(gt, gt)) == 1.0, "success_rate_one");
    check(success_rate(constant_run({5, 5, 5, 10}, gt)) == 0.0, "success_rate_boundary");
    TrackRun mixed;
    for (double c : {0.6, 0.4, 0.8, 0.2}) {
        mixed.predicted.push_back({5, 5, 10 * c, 10});
        mixed.groundtruth.push_back(gt);
    }
    check(success_rate(mixed) == 0.5, "success_rate_half");

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_gap = 0.0;
    for (int r = 0; r < 20; ++r) {
        TrackRun run;
        double mean = 0.0;
        for (int i = 0; i < 200; ++i) {
            run.groundtruth.push_back(gt);
            run.predicted.push_back({5 + 20 * (u(rng) - 0.5), 5 + 20 * (u(rng) - 0.5), 4 + 12 * u(rng), 4 + 12 * u(rng)});
            mean += iou(run.predicted.back(), gt);
        }
        mean /= 200.0;
        worst_gap = std::max(worst_gap, std::abs(success_score(run) - mean));
    }
    check(worst_gap < 1e-2, "success_score_vs_mean_iou");

    std::string detail = format("fixtures=%d failed=%zu constant_iou_gap=%.2e random_score_vs_mean_iou=%.2e (< 1e-2)",
                                total, failed.size(), worst_constant, worst_gap);
    for (const auto& f : failed) detail += " " + f;
    return {failed.empty(), detail};
}

// 10. Step latency.
Verdict step_latency(const std::shared_ptr<const net::SiameseModel<float>>& model) {
    TrackerConfig config;
    const Tracker tracker(model, config);
    const BoundingBox box{173.0, 130.0, 32.0, 32.0};
    const auto init_events = random_events(5000, kSensor, 0, 40000, 10);
    const TrackerState initial = tracker.init_target(EventWindow(init_events, 0, 40000, kSensor), box);
    std::vector<double> times;
    for (int rep = 0; rep < 7; ++rep) {
        const TimeUs t0 = 40000 * (rep + 1), t1 = t0 + 40000;
        const EventWindow window(random_events(50000, kSensor, t0, t1, 100 + rep), t0, t1, kSensor);
        TrackerState state = initial;
        const auto start = Clock::now();
        const EventTensor full = embed(window, config.embedding);
        const StepResult r = tracker.step(state, window);
        times.push_back(seconds_since(start) * 1000.0);
        if (r.skipped || full.channels() != 18) return {false, "window was skipped or embedding malformed"};
    }
    std::sort(times.begin(), times.end());
    const double median = times[times.size() / 2];
    return {median < 200.0, format("median=%.1fms worst=%.1fms (< 200ms) events=50000 sensor=346x260", median,
                                   times.back())};
}

// 11. CLI determinism.
std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_text_file(e.path());
    return files;
}

Verdict cli_determinism() {
    const fs::path base = fs::temp_directory_path() / ("evtrack_acceptance_" + std::to_string(std::random_device{}()));
    fs::remove_all(base);
    const std::vector<std::string> common = {"--seed", "11", "--set", "train.epochs=3", "--set", "train.width=0.25",
                                             "--set", "train.pairs_per_sequence=3"};
    std::vector<std::map<std::string, std::string>> rounds;
    std::string failure;
    for (const char* threads : {"1", "4"}) {
        ::setenv("EVTRACK_THREADS", threads, 1);
        const fs::path root = base / threads;
        auto run = [&](std::vector<std::string> tail) {
            std::vector<std::string> args = common;
            args.insert(args.end(), tail.begin(), tail.end());
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            if (code != 0 && failure.empty()) failure = tail.front() + " exited " + std::to_string(code) + ": " + err.str();
            return code == 0;
        };
        const std::string data = (root / "data").string();
        bool ok = run({"simulate", "--synthetic", "--count", "3", "--duration-ms", "800", "--out", data}) &&
                  run({"train", "--dataset", data, "--out", (root / "weights.bin").string()}) &&
                  run({"track", "--dataset", data, "--weights", (root / "weights.bin").string(), "--out-dir",
                       (root / "tracks").string()});
        if (ok) {
            std::vector<std::string> eval{"eval", "--out-dir", (root / "report").string()};
            for (const auto& seq : list_sequences(data))
                eval.insert(eval.end(), {"--track", (root / "tracks" / (seq.filename().string() + ".csv")).string(),
                                         "--sequence", seq.string()});
            ok = run(eval);
        }
        if (!ok) break;
        rounds.push_back(tree(root));
    }
    ::unsetenv("EVTRACK_THREADS");
    fs::remove_all(base);
    if (!failure.empty()) return {false, failure};
    std::size_t differing = 0;
    for (const auto& [name, bytes] : rounds[0]) {
        const auto it = rounds[1].find(name);
        differing += it == rounds[1].end() || it->second != bytes;
    }
    differing += rounds[1].size() > rounds[0].size() ? rounds[1].size() - rounds[0].size() : 0;
    return {differing == 0 && rounds[0].size() > 10,
            format("files=%zu differing=%zu (runs with 1 and 4 threads)", rounds[0].size(), differing)};
}

std::set<int> parse_only(const std::string& list) {
    std::set<int> out;
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    std::string save_model, load_model;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) only = parse_only(argv[++i]);
        else if (arg == "--save-model" && i + 1 < argc) save_model = argv[++i];
        else if (arg == "--load-model" && i + 1 < argc) load_model = argv[++i];
        else {
            std::fprintf(stderr, "usage: %s [--only 1,2,...] [--save-model PATH] [--load-model PATH]\n", argv[0]);
            return 1;
        }
    }
    auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

    std::map<int, Verdict> results;
    auto record = [&](int n, const std::function<Verdict()>& fn) {
        if (!wanted(n)) return;
        progress("criterion " + std::to_string(n));
        try {
            results[n] = fn();
        } catch (const std::exception& e) {
            results[n] = {false, std::string("exception: ") + e.what()};
        }
        progress(format("criterion %d %s: %s", n, results[n].pass ? "PASS" : "FAIL", results[n].detail.c_str()));
    };

    record(1, gradient_check);
    record(2, correlation_oracle);
    record(3, embedding_mass);
    record(4, label_map);
    record(5, log_ramp);
    record(9, metric_fixtures);

    std::shared_ptr<const net::SiameseModel<float>> trained;
    if (!load_model.empty() && !wanted(7)) {
        trained = std::make_shared<const net::SiameseModel<float>>(net::load_weights(load_model).model);
    } else if (wanted(7) || wanted(8)) {
        record(7, [&] {
            TrainingOutcome t = train_synthetic();
            trained = t.model;
            return t.verdict;
        });
        if (trained && !save_model.empty()) net::save_weights(save_model, *trained, EmbeddingConfig{}.bins);
    }
    std::shared_ptr<const net::SiameseModel<float>> model = trained;
    if (!model) {
        auto fresh = std::make_shared<net::SiameseModel<float>>(
            net::Architecture::alexnet_scaled(EmbeddingConfig{}.channels(), 1.0));
        fresh->initialize(0);
        model = fresh;
    }
    if (trained) record(8, [&] { return held_out_tracking(trained); });
    else if (wanted(8)) results[8] = {false, "no trained model"};
    record(6, [&] { return static_segment(model); });
    record(10, [&] { return step_latency(model); });
    record(11, cli_determinism);

    bool all = true;
    for (const auto& [n, v] : results) {
        std::printf("criterion %2d: %s  %s\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        all = all && v.pass;
    }
    std::printf("%s: %zu criteria checked\n", all ? "ALL PASS" : "SOME FAILED", results.size());
    return all ? 0 : 1;
}

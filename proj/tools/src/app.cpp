#include "evtrack/cli/app.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "evtrack/atomic_file.hpp"
#include "evtrack/config.hpp"
#include "evtrack/dataset.hpp"
#include "evtrack/error.hpp"
#include "evtrack/evaluation.hpp"
#include "evtrack/image_io.hpp"
#include "evtrack/net/gradcheck.hpp"
#include "evtrack/net/weights_io.hpp"
#include "evtrack/pipeline.hpp"
#include "evtrack/simulator.hpp"
#include "evtrack/training.hpp"

namespace fs = std::filesystem;

namespace evtrack::cli {

namespace {

constexpr double kGradCheckThreshold = 1e-5;

class Logger {
public:
    Logger(std::ostream& err, bool verbose) : err_(err), verbose_(verbose) {}
    void operator()(const std::string& message) const {
        if (verbose_) err_ << message << '\n';
    }

private:
    std::ostream& err_;
    bool verbose_;
};

std::string sequence_name(const fs::path& dir) {
    fs::path p = dir.lexically_normal();
    if (p.filename().empty()) p = p.parent_path();
    return p.filename().string();
}

/// Runs task(i) for i in [0, n) on up to worker_count(n) threads. Exceptions are rethrown in
/// task order after every worker has finished.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned workers = worker_count(n);
    std::vector<std::thread> threads;
    for (unsigned w = 1; w < workers; ++w) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<fs::path> list_frames(const fs::path& dir) {
    std::vector<fs::path> frames;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") frames.push_back(entry.path());
    }
    std::sort(frames.begin(), frames.end());
    return frames;
}

// simulate

struct SimulateArgs {
    std::string out;
    std::string frames;
    std::string name;
    bool synthetic = false;
    int count = 5;
    std::string shape;
    double speed = 2.0;
    int duration_ms = 4000;
    bool no_init = false;
};

void simulate_frames(const SimulateArgs& args, const RunConfig& config, const Logger& log) {
    const fs::path dir = args.frames;
    const std::vector<fs::path> frames = list_frames(dir);
    const fs::path ts_path = dir / "timestamps.txt";
    const fs::path gt_path = dir / "groundtruth.txt";
    const std::vector<TimeUs> times = parse_timestamps(read_text_file(ts_path), ts_path.string());
    const std::vector<BoundingBox> boxes = parse_groundtruth(read_text_file(gt_path), gt_path.string());
    if (frames.size() < 2) throw ParseError(dir.string() + ": need at least 2 .pgm frames, found " + std::to_string(frames.size()));
    if (times.size() != frames.size()) {
        throw ParseError(ts_path.string() + ": " + std::to_string(times.size()) + " timestamps for " +
                         std::to_string(frames.size()) + " frames");
    }
    if (boxes.size() != frames.size()) {
        throw ParseError(gt_path.string() + ": " + std::to_string(boxes.size()) + " boxes for " +
                         std::to_string(frames.size()) + " frames");
    }
    SimConfig sim = config.sim;
    sim.noise_seed = config.seed;
    EventSimulator simulator(load_pgm(frames.front()), times.front(), sim);
    for (std::size_t k = 1; k < frames.size(); ++k) {
        Frame frame = load_pgm(frames[k]);
        if (frame.width() != simulator.geometry().width || frame.height() != simulator.geometry().height) {
            throw ParseError(frames[k].string() + ": frame size differs from the first frame");
        }
        simulator.advance(frame, times[k]);
    }
    Sequence seq;
    seq.manifest.name = args.name.empty() ? sequence_name(args.out) : args.name;
    seq.manifest.description = "simulated from frames";
    seq.manifest.geometry = simulator.geometry();
    seq.manifest.start_us = times.front();
    seq.manifest.end_us = times.back();
    seq.events = simulator.finish();
    seq.gt_times = times;
    seq.groundtruth = boxes;
    save_sequence(args.out, seq);
    log("simulate: " + std::to_string(seq.events.size()) + " events from " + std::to_string(frames.size()) + " frames");
}

void simulate_synthetic(const SimulateArgs& args, const RunConfig& config, const Logger& log) {
    if (args.count < 1) throw InvalidArgument("--count must be positive");
    if (args.duration_ms < 1) throw InvalidArgument("--duration-ms must be positive");
    RandomSpecOptions spec_options;
    spec_options.duration_us = static_cast<TimeUs>(args.duration_ms) * 1000;
    spec_options.window_us = config.tracker.window_us;
    spec_options.speed = args.speed;
    if (!args.shape.empty()) spec_options.shape = parse_shape_kind(args.shape);

    // Seeds are drawn up front so the output does not depend on the worker count.
    std::mt19937_64 rng(config.seed);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> seeds;
    for (int i = 0; i < args.count; ++i) {
        const std::uint64_t spec_seed = rng();
        seeds.emplace_back(spec_seed, rng());
    }
    parallel_for(seeds.size(), [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof name, "seq%03zu", i);
        SyntheticDatasetOptions options;
        options.sim = config.sim;
        options.sim.noise_seed = seeds[i].second;
        options.gt_interval_us = config.tracker.window_us;
        options.with_init = !args.no_init;
        const Sequence seq = generate_synthetic(name, random_synthetic_spec(seeds[i].first, spec_options), options);
        save_sequence(fs::path(args.out) / name, seq);
        log(std::string("simulate: ") + name + " " + std::to_string(seq.events.size()) + " events");
    });
}

// init-target

struct InitTargetArgs {
    std::string sequence;
    std::string frame;
    double ratio = 0.01;
    int duration_ms = 40;
};

void init_target(const InitTargetArgs& args, const RunConfig& config, std::ostream& out) {
    Sequence seq = load_sequence(args.sequence);
    const Frame frame = load_pgm(args.frame);
    if (frame.width() != seq.manifest.geometry.width || frame.height() != seq.manifest.geometry.height) {
        throw InvalidArgument(args.frame + ": frame size does not match the sequence sensor");
    }
    if (seq.groundtruth.empty()) throw InvalidArgument(args.sequence + ": no ground truth");
    const BoundingBox box = seq.groundtruth_at(seq.manifest.start_us);
    InitMotionConfig motion;
    motion.duration_us = static_cast<TimeUs>(args.duration_ms) * 1000;
    motion.displacement_ratio = args.ratio;
    SimConfig sim = config.sim;
    sim.noise_seed = config.seed;
    EventWindow window = make_init_window(frame, box, sim, motion);
    const std::size_t inside = count_in_region(window, target_region(box));
    if (inside == 0) throw InitializationError(args.sequence + ": micro-motion produced no events around the target");
    seq.manifest.init_events_file = "init_events.bin";
    seq.manifest.init_start_us = window.t_start();
    seq.manifest.init_end_us = window.t_end();
    seq.init = std::move(window);
    save_sequence(args.sequence, seq);
    out << "init events: " << seq.init->size() << " (" << inside << " in target region)\n";
}

// train

struct TrainArgs {
    std::string dataset;
    std::string out;
    std::string loss;
    std::string split;
};

void train(const TrainArgs& args, const RunConfig& config, std::ostream& out, const Logger& log) {
    const std::string dataset = args.dataset.empty() ? config.dataset : args.dataset;
    const std::string weights = args.out.empty() ? config.weights : args.out;
    if (dataset.empty()) throw InvalidArgument("no dataset given (--dataset or the dataset config key)");
    if (weights.empty()) throw InvalidArgument("no weights path given (--out or the weights config key)");
    if (!fs::is_directory(dataset)) throw InvalidArgument(dataset + ": not a directory");
    const std::vector<fs::path> paths = list_sequences(dataset);
    if (paths.empty()) throw InvalidArgument(dataset + ": dataset holds no sequences");

    std::map<std::string, fs::path> by_name;
    std::vector<std::string> names;
    for (const auto& p : paths) {
        names.push_back(sequence_name(p));
        by_name[names.back()] = p;
    }
    const auto [train_names, test_names] = split_sequences(names, config.train.split, config.seed);
    std::string split_text;
    for (const auto& n : train_names) split_text += "train," + n + "\n";
    for (const auto& n : test_names) split_text += "test," + n + "\n";
    write_text_atomic(args.split.empty() ? weights + ".split.csv" : args.split, split_text);

    std::vector<Sequence> sequences;
    for (const auto& n : train_names) sequences.push_back(load_sequence(by_name.at(n)));
    log("train: " + std::to_string(sequences.size()) + " training sequences, " + std::to_string(test_names.size()) +
        " held out");

    Trainer trainer(std::move(sequences), config);
    log("train: " + std::to_string(trainer.pairs().size()) + " pairs");
    const std::string loss_path = args.loss.empty() ? weights + ".loss.csv" : args.loss;
    std::vector<EpochStats> history;
    trainer.run([&](const EpochStats& stats, const net::SiameseModel<float>& model) {
        history.push_back(stats);
        net::save_weights(weights, model, config.embedding().bins);
        write_text_atomic(loss_path, format_loss_csv(history));
        std::ostringstream line;
        line << "epoch " << stats.epoch << " loss " << stats.mean_loss << " lr " << stats.learning_rate;
        log(line.str());
    });
    if (!history.empty()) out << "final loss " << history.back().mean_loss << '\n';
}

// track

struct TrackArgs {
    std::vector<std::string> sequences;
    std::string dataset;
    std::string split;
    std::string weights;
    std::string out;
    std::string out_dir;
    bool no_init = false;
};

std::vector<fs::path> split_subset(const fs::path& dataset, const std::string& split_file, const std::string& subset) {
    const std::string text = read_text_file(split_file);
    std::vector<fs::path> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(split_file + ":" + std::to_string(line_no) + ": expected role,name");
        if (line.substr(0, comma) == subset) out.push_back(dataset / line.substr(comma + 1));
    }
    return out;
}

void track(const TrackArgs& args, const RunConfig& config, const Logger& log) {
    std::vector<fs::path> dirs(args.sequences.begin(), args.sequences.end());
    if (!args.dataset.empty()) {
        const auto more = args.split.empty() ? list_sequences(args.dataset) : split_subset(args.dataset, args.split, "test");
        dirs.insert(dirs.end(), more.begin(), more.end());
    }
    if (dirs.empty()) throw InvalidArgument("no sequences to track (--sequence or --dataset)");
    if (args.out.empty() == args.out_dir.empty()) throw InvalidArgument("give exactly one of --out and --out-dir");
    if (!args.out.empty() && dirs.size() != 1) throw InvalidArgument("--out takes a single sequence; use --out-dir");
    const std::string weights = args.weights.empty() ? config.weights : args.weights;
    if (weights.empty()) throw InvalidArgument("no weights given (--weights or the weights config key)");

    net::LoadedWeights loaded = net::load_weights(weights, config.embedding());
    auto model = std::make_shared<const net::SiameseModel<float>>(std::move(loaded.model));
    const Tracker tracker(model, config.tracker);
    if (!args.out_dir.empty()) fs::create_directories(args.out_dir);

    parallel_for(dirs.size(), [&](std::size_t i) {
        const Sequence seq = load_sequence(dirs[i]);
        const SequenceTrack result = track_sequence(tracker, seq, !args.no_init);
        const fs::path target = args.out.empty() ? fs::path(args.out_dir) / (sequence_name(dirs[i]) + ".csv") : fs::path(args.out);
        write_text_atomic(target, format_track_csv(result.records));
        log("track: " + seq.manifest.name + " " + std::to_string(result.records.size()) + " windows, " +
            std::to_string(result.final_state.network_evaluations) + " network evaluations");
    });
}

// eval

struct EvalArgs {
    std::vector<std::string> tracks;
    std::vector<std::string> sequences;
    std::vector<std::string> groundtruth;
    std::string out_dir;
};

void eval(const EvalArgs& args, std::ostream& out) {
    if (args.tracks.empty()) throw InvalidArgument("no track files given");
    const bool with_sequences = !args.sequences.empty();
    if (with_sequences == !args.groundtruth.empty()) throw InvalidArgument("give either --sequence or --groundtruth");
    const std::size_t refs = with_sequences ? args.sequences.size() : args.groundtruth.size();
    if (refs != args.tracks.size()) {
        throw InvalidArgument(std::to_string(args.tracks.size()) + " track files for " + std::to_string(refs) +
                              " ground-truth sources");
    }
    std::vector<TrackRun> runs;
    for (std::size_t i = 0; i < args.tracks.size(); ++i) {
        const std::vector<TrackRecord> records = parse_track_csv(read_text_file(args.tracks[i]), args.tracks[i]);
        if (with_sequences) {
            runs.push_back(make_track_run(load_sequence(args.sequences[i]), records));
        } else {
            TrackRun run;
            run.sequence = fs::path(args.tracks[i]).stem().string();
            run.groundtruth = parse_groundtruth(read_text_file(args.groundtruth[i]), args.groundtruth[i]);
            if (run.groundtruth.size() != records.size()) {
                throw InvalidArgument(args.tracks[i] + " has " + std::to_string(records.size()) + " rows but " +
                                      args.groundtruth[i] + " has " + std::to_string(run.groundtruth.size()) + " boxes");
            }
            for (const TrackRecord& r : records) run.predicted.push_back(r.box);
            runs.push_back(std::move(run));
        }
    }
    std::vector<MetricReport> reports;
    for (const TrackRun& run : runs) reports.push_back(evaluate(run));
    if (runs.size() > 1) {
        TrackRun all;
        all.sequence = "all";
        for (const TrackRun& run : runs) {
            all.predicted.insert(all.predicted.end(), run.predicted.begin(), run.predicted.end());
            all.groundtruth.insert(all.groundtruth.end(), run.groundtruth.begin(), run.groundtruth.end());
        }
        reports.push_back(evaluate(all));
    }
    const std::string report = format_report_csv(reports);
    if (!args.out_dir.empty()) {
        const fs::path dir = args.out_dir;
        fs::create_directories(dir);
        write_text_atomic(dir / "report.csv", report);
        for (const MetricReport& r : reports) {
            write_text_atomic(dir / (r.sequence + "_success.csv"), format_curve_csv(r.success_curve));
            write_text_atomic(dir / (r.sequence + "_precision.csv"), format_curve_csv(r.precision_curve));
            write_text_atomic(dir / (r.sequence + "_success.pgm"), render_curve_pgm(r.success_curve));
            write_text_atomic(dir / (r.sequence + "_precision.pgm"), render_curve_pgm(r.precision_curve));
        }
    }
    out << report;
}

// gradcheck

struct GradCheckArgs {
    std::size_t samples = 256;
    double width = net::ReducedGradCheck{}.width;
    bool inject = false;
};

int gradcheck(const GradCheckArgs& args, const RunConfig& config, std::ostream& out) {
    net::ReducedGradCheck setup;
    setup.width = args.width;
    setup.input_channels = config.embedding().channels();
    setup.seed = config.seed;
    net::GradCheckOptions options;
    options.samples = args.samples;
    options.seed = config.seed + 1;
    net::GradientMutator mutate;
    if (args.inject) {
        // A 1% error on every first-layer weight gradient.
        mutate = [](net::SiameseGradients<double>& g) {
            for (double& v : g.backbone.front()) v *= 1.01;
        };
    }
    const net::GradCheckResult r = net::run_reduced_grad_check(setup, options, mutate);
    const bool pass = r.max_relative_error < kGradCheckThreshold;
    char line[256];
    std::snprintf(line, sizeof line, "max_relative_error=%.3e threshold=%.0e checked=%zu skipped=%zu worst=%s[%zu] %s\n",
                  r.max_relative_error, kGradCheckThreshold, r.checked, r.skipped, r.worst_parameter.c_str(), r.worst_index,
                  pass ? "PASS" : "FAIL");
    out << line;
    return pass ? kSuccess : kCheckFailed;
}

}  // namespace

unsigned worker_count(std::size_t tasks) {
    unsigned cap = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("EVTRACK_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) cap = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(std::clamp<std::size_t>(tasks, 1, cap));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Event-camera single object tracking: simulation, training, tracking and evaluation", "evtrack"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    bool verbose = false;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Configuration file (key = value lines)");
    CLI::Option* seed_option = app.add_option("--seed", seed, "Random seed (overrides the config)");
    app.add_option("--set", overrides, "Override one config key, KEY=VALUE (repeatable)");
    app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Synthesize events: from a frames directory or synthetic shapes");
    simulate->add_option("--out", sim.out, "Output sequence directory (dataset directory with --synthetic)")->required();
    simulate->add_option("--frames", sim.frames, "Directory of .pgm frames with timestamps.txt and groundtruth.txt");
    simulate->add_option("--name", sim.name, "Sequence name (default: output directory name)");
    simulate->add_flag("--synthetic", sim.synthetic, "Generate random moving-shape sequences");
    simulate->add_option("--count", sim.count, "Number of synthetic sequences");
    simulate->add_option("--shape", sim.shape, "square, disc or bar (default: random)");
    simulate->add_option("--speed", sim.speed, "Target speed in pixels per window");
    simulate->add_option("--duration-ms", sim.duration_ms, "Synthetic sequence duration");
    simulate->add_flag("--no-init", sim.no_init, "Do not render initialization segments");

    InitTargetArgs init;
    CLI::App* init_cmd = app.add_subcommand("init-target", "Render a target edge initialization segment for a sequence");
    init_cmd->add_option("--sequence", init.sequence, "Sequence directory")->required();
    init_cmd->add_option("--frame", init.frame, "Still .pgm frame at the sequence start")->required();
    init_cmd->add_option("--ratio", init.ratio, "Displacement as a fraction of w + h");
    init_cmd->add_option("--duration-ms", init.duration_ms, "Duration of the micro-motion");

    TrainArgs tr;
    CLI::App* train_cmd = app.add_subcommand("train", "Train the network on a dataset directory");
    train_cmd->add_option("--dataset", tr.dataset, "Dataset directory (default: dataset config key)");
    train_cmd->add_option("--out", tr.out, "Weights file, rewritten after every epoch (default: weights config key)");
    train_cmd->add_option("--loss", tr.loss, "Loss log CSV (default: <out>.loss.csv)");
    train_cmd->add_option("--split-out", tr.split, "Train/test split CSV (default: <out>.split.csv)");

    TrackArgs tk;
    CLI::App* track_cmd = app.add_subcommand("track", "Track sequences with trained weights");
    track_cmd->add_option("--sequence", tk.sequences, "Sequence directory (repeatable)");
    track_cmd->add_option("--dataset", tk.dataset, "Track every sequence of a dataset directory");
    track_cmd->add_option("--split", tk.split, "With --dataset: only the test entries of this split CSV");
    track_cmd->add_option("--weights", tk.weights, "Weights file (default: weights config key)");
    track_cmd->add_option("--out", tk.out, "Track CSV for a single sequence");
    track_cmd->add_option("--out-dir", tk.out_dir, "Directory for <sequence>.csv files");
    track_cmd->add_flag("--no-init", tk.no_init, "Initialize from the first window instead of the init segment");

    EvalArgs ev;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Score track files against ground truth");
    eval_cmd->add_option("--track", ev.tracks, "Track CSV (repeatable)")->required();
    eval_cmd->add_option("--sequence", ev.sequences, "Sequence directory per track (ground truth at window ends)");
    eval_cmd->add_option("--groundtruth", ev.groundtruth, "cx,cy,w,h file per track, one line per row");
    eval_cmd->add_option("--out-dir", ev.out_dir, "Directory for report.csv and curve exports");

    GradCheckArgs gc;
    CLI::App* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check in double precision");
    grad_cmd->add_option("--samples", gc.samples, "Parameter entries to check");
    grad_cmd->add_option("--width", gc.width, "Channel multiplier of the reduced network");
    grad_cmd->add_flag("--inject-bug", gc.inject, "Perturb the analytic gradients (the check must fail)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    const Logger log(err, verbose);
    try {
        RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (const std::string& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ParseError("--set expects KEY=VALUE, got " + kv);
            set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (seed_option->count() > 0) config.seed = seed;
        config.validate();

        if (simulate->parsed()) {
            if (sim.synthetic == !sim.frames.empty()) throw InvalidArgument("give exactly one of --frames and --synthetic");
            if (sim.synthetic) {
                simulate_synthetic(sim, config, log);
            } else {
                simulate_frames(sim, config, log);
            }
        } else if (init_cmd->parsed()) {
            init_target(init, config, out);
        } else if (train_cmd->parsed()) {
            train(tr, config, out, log);
        } else if (track_cmd->parsed()) {
            track(tk, config, log);
        } else if (eval_cmd->parsed()) {
            eval(ev, out);
        } else if (grad_cmd->parsed()) {
            return gradcheck(gc, config, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kSuccess;
}

}  // namespace evtrack::cli

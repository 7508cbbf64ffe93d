#include "evtrack/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "evtrack/error.hpp"
#include "evtrack/net/correlation.hpp"
#include "evtrack/net/sgd.hpp"
#include "evtrack/tracker.hpp"

namespace evtrack {

EventTensor exemplar_input(const Sequence& sequence, const RunConfig& config, bool use_init) {
    if (use_init && sequence.init) {
        const BoundingBox box = sequence.groundtruth.front();
        return make_branch_input(*sequence.init, target_region(box), config.embedding(), net::kExemplarSize);
    }
    const TimeUs start = sequence.manifest.start_us;
    const EventWindow first = sequence.window(start, start + config.tracker.window_us);
    return make_branch_input(first, target_region(sequence.groundtruth_at(start)), config.embedding(), net::kExemplarSize);
}

EventTensor search_input(const Sequence& sequence, TimeUs t_start, TimeUs t_end, const RunConfig& config) {
    const RegionGeometry region = target_region(sequence.groundtruth_at(t_end), config.tracker.search_scale);
    return make_branch_input(sequence.window(t_start, t_end), region, config.embedding(), net::kSearchSize);
}

std::vector<TrainingPair> sample_pairs(const std::vector<Sequence>& sequences, const RunConfig& config,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<TrainingPair> pairs;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const Sequence& seq = sequences[s];
        std::vector<TrainingPair> eligible;
        for (const auto& [t0, t1] : seq.windows(config.tracker.window_us)) {
            if (t1 - seq.manifest.start_us > config.train.max_gap_us) break;
            if (t1 > seq.gt_times.back() || t0 < seq.gt_times.front()) continue;
            const EventWindow w = seq.window(t0, t1);
            if (edge_detector(w, seq.groundtruth_at(t1), config.tracker.edge_ratio).skip()) continue;
            eligible.push_back({s, t0, t1});
        }
        for (std::size_t i = eligible.size(); i > 1; --i) std::swap(eligible[i - 1], eligible[rng() % i]);
        const std::size_t take = std::min(eligible.size(), static_cast<std::size_t>(config.train.pairs_per_sequence));
        std::vector<TrainingPair> chosen(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(take));
        std::sort(chosen.begin(), chosen.end(), [](const TrainingPair& a, const TrainingPair& b) { return a.t_start < b.t_start; });
        pairs.insert(pairs.end(), chosen.begin(), chosen.end());
    }
    return pairs;
}

Trainer::Trainer(std::vector<Sequence> sequences, RunConfig config)
    : sequences_(std::move(sequences)), config_(std::move(config)) {
    config_.validate();
    if (sequences_.empty()) throw InvalidArgument("training needs at least one sequence");
    std::mt19937_64 rng(config_.seed);
    const std::uint64_t init_seed = rng();
    const std::uint64_t pair_seed = rng();
    order_seed_ = rng();

    model_ = net::SiameseModel<float>(net::Architecture::alexnet_scaled(config_.embedding().channels(), config_.train.width));
    model_.initialize(init_seed);
    grads_ = net::make_gradients(model_);

    for (const Sequence& seq : sequences_) exemplars_.push_back(exemplar_input(seq, config_, config_.train.use_init));
    pairs_ = sample_pairs(sequences_, config_, pair_seed);
    if (pairs_.empty()) throw InvalidArgument("no training window passes the edge detector");

    const auto& arch = model_.backbone.architecture();
    const int score = arch.output_extent(net::kSearchSize) - arch.output_extent(net::kExemplarSize) + 1;
    labels_ = net::make_label_map(score, score, config_.train.label_radius);
}

EpochStats Trainer::run_epoch(int epoch) {
    std::mt19937_64 rng(order_seed_ + static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order(pairs_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    net::SgdConfig sgd;
    sgd.learning_rate = net::geometric_learning_rate(config_.train.lr_start, config_.train.lr_end, epoch, config_.train.epochs);
    sgd.momentum = config_.train.momentum;
    sgd.weight_decay = config_.train.weight_decay;

    std::vector<double> losses(pairs_.size(), 0.0);
    for (std::size_t idx : order) {
        const TrainingPair& p = pairs_[idx];
        const EventTensor x = search_input(sequences_[p.sequence], p.t_start, p.t_end, config_);
        grads_.zero();
        const auto outcome = net::accumulate_pair_gradients(model_, exemplars_[p.sequence], x, labels_, grads_);
        losses[idx] = static_cast<double>(outcome.loss);
        net::sgd_step(model_.backbone.parameters(), grads_.backbone, backbone_velocity_, sgd);
        net::sgd_step(model_.head, grads_.head, head_velocity_, sgd);
    }
    // Summed in pair order so the mean does not depend on the visiting order.
    double total = 0.0;
    for (double l : losses) total += l;
    return {epoch + 1, total / static_cast<double>(losses.size()), sgd.learning_rate};
}

std::vector<EpochStats> Trainer::run(const EpochCallback& on_epoch) {
    std::vector<EpochStats> log;
    for (int e = 0; e < config_.train.epochs; ++e) {
        log.push_back(run_epoch(e));
        if (on_epoch) on_epoch(log.back(), model_);
    }
    return log;
}

Grid2<float> Trainer::pair_scores(const TrainingPair& pair) const {
    const EventTensor x = search_input(sequences_[pair.sequence], pair.t_start, pair.t_end, config_);
    return model_.score(model_.features(exemplars_[pair.sequence]), model_.features(x));
}

double Trainer::peak_accuracy(double radius) const {
    std::size_t hits = 0;
    for (const TrainingPair& p : pairs_) {
        const Grid2<float> s = pair_scores(p);
        const auto it = std::max_element(s.storage().begin(), s.storage().end());
        const auto i = static_cast<int>(it - s.storage().begin());
        const double dy = i / s.width() - (s.height() - 1) / 2.0;
        const double dx = i % s.width() - (s.width() - 1) / 2.0;
        hits += std::hypot(dx, dy) <= radius ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(pairs_.size());
}

std::string format_loss_csv(const std::vector<EpochStats>& log) {
    std::string out = "epoch,mean_loss,lr\n";
    char buf[96];
    for (const EpochStats& s : log) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", s.epoch, s.mean_loss, s.learning_rate);
        out += buf;
    }
    return out;
}

}  // namespace evtrack

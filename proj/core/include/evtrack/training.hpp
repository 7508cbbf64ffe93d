#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "evtrack/config.hpp"
#include "evtrack/dataset.hpp"
#include "evtrack/net/siamese.hpp"

namespace evtrack {

/// A search window of one training sequence. The exemplar is the sequence's initialization
/// segment (or its first window), the search region is centered on the ground truth at the
/// window end.
struct TrainingPair {
    std::size_t sequence = 0;
    TimeUs t_start = 0;
    TimeUs t_end = 0;
};

struct EpochStats {
    int epoch = 0;  ///< 1-based
    double mean_loss = 0.0;
    double learning_rate = 0.0;
};

/// Exemplar input of a sequence: the initialization segment around GT[0] when `use_init` is
/// set and the segment exists, otherwise the first window around the ground truth at start_us.
EventTensor exemplar_input(const Sequence& sequence, const RunConfig& config, bool use_init);
/// Search input for a window, centered on the ground truth at its end.
EventTensor search_input(const Sequence& sequence, TimeUs t_start, TimeUs t_end, const RunConfig& config);

/// Draws up to pairs_per_sequence windows per sequence among those ending within max_gap_us
/// of the sequence start whose events pass the edge detector. Returned in canonical
/// (sequence, time) order.
std::vector<TrainingPair> sample_pairs(const std::vector<Sequence>& sequences, const RunConfig& config,
                                       std::uint64_t seed);

class Trainer {
public:
    using EpochCallback = std::function<void(const EpochStats&, const net::SiameseModel<float>&)>;

    /// Builds and initializes the network from the config seed and draws the training pairs.
    Trainer(std::vector<Sequence> sequences, RunConfig config);

    const std::vector<TrainingPair>& pairs() const { return pairs_; }
    const std::vector<Sequence>& sequences() const { return sequences_; }
    net::SiameseModel<float>& model() { return model_; }
    const net::SiameseModel<float>& model() const { return model_; }

    /// One pass over the pairs in a seed-driven order. `epoch` is 0-based.
    EpochStats run_epoch(int epoch);
    /// All configured epochs; the callback sees the stats and model after each one.
    std::vector<EpochStats> run(const EpochCallback& on_epoch = {});

    /// Eval-mode score map of a pair.
    Grid2<float> pair_scores(const TrainingPair& pair) const;
    /// Fraction of pairs whose raw score-map argmax lies within `radius` of the center.
    double peak_accuracy(double radius) const;

private:
    std::vector<Sequence> sequences_;
    RunConfig config_;
    net::SiameseModel<float> model_;
    std::vector<EventTensor> exemplars_;
    std::vector<TrainingPair> pairs_;
    net::LabelMap labels_;
    net::SiameseGradients<float> grads_;
    net::Gradients<float> backbone_velocity_;
    net::Gradients<float> head_velocity_;
    std::uint64_t order_seed_ = 0;
};

/// `epoch,mean_loss,lr` with a header line.
std::string format_loss_csv(const std::vector<EpochStats>& log);

}  // namespace evtrack

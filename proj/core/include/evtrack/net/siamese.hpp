#pragma once

#include <cstdint>
#include <functional>

#include "evtrack/net/loss.hpp"
#include "evtrack/net/network.hpp"

namespace evtrack::net {

/// Canonical input sizes of the two branches and the stride of the feature extractor.
inline constexpr int kExemplarSize = 127;
inline constexpr int kSearchSize = 255;
inline constexpr int kTotalStride = 8;

/// Shared feature extractor plus an affine adjustment of the correlation
/// (score = scale * correlation + bias). Head parameters are named adjust.scale / adjust.bias;
/// the scale is a fixed buffer (its gradient is still computed), the bias is trained.
template <typename T>
struct SiameseModel {
    static constexpr double kInitialScale = 1e-3;

    Network<T> backbone;
    std::vector<Parameter<T>> head;

    SiameseModel() = default;
    explicit SiameseModel(Architecture architecture);

    void initialize(std::uint64_t seed);
    T scale() const { return head[0].values[0]; }
    T bias() const { return head[1].values[0]; }

    /// Eval-mode features.
    Tensor3<T> features(const Tensor3<T>& input) const { return backbone.forward(input); }
    /// Adjusted correlation of two feature maps.
    Grid2<T> score(const Tensor3<T>& exemplar_features, const Tensor3<T>& search_features) const;

    template <typename U>
    SiameseModel<U> cast() const {
        SiameseModel<U> out;
        out.backbone = backbone.template cast<U>();
        out.head.clear();
        for (const auto& p : head) {
            Parameter<U> q{p.name, p.shape, {}, p.trainable};
            for (T v : p.values) q.values.push_back(static_cast<U>(v));
            out.head.push_back(std::move(q));
        }
        return out;
    }
};

template <typename T>
struct SiameseGradients {
    Gradients<T> backbone;
    Gradients<T> head;

    void zero();
};

template <typename T>
SiameseGradients<T> make_gradients(const SiameseModel<T>& model);

template <typename T>
struct PairOutcome {
    T loss = T{0};
    Grid2<T> scores;
};

/// Maps a score map to an objective value and its gradient.
template <typename T>
using ScoreObjective = std::function<LossResult<T>(const Grid2<T>&)>;

/// Training-mode forward of both branches and correlation, then backpropagates the gradient
/// returned by `objective` through the head and the shared extractor.
template <typename T>
PairOutcome<T> accumulate_objective_gradients(SiameseModel<T>& model, const Tensor3<T>& exemplar_input,
                                              const Tensor3<T>& search_input, const ScoreObjective<T>& objective,
                                              SiameseGradients<T>& grads, bool update_running_stats = true);

/// Training-mode forward of both branches, correlation, logistic loss and backward through
/// the shared extractor. Gradients from both branches accumulate into `grads`.
template <typename T>
PairOutcome<T> accumulate_pair_gradients(SiameseModel<T>& model, const Tensor3<T>& exemplar_input,
                                         const Tensor3<T>& search_input, const LabelMap& labels,
                                         SiameseGradients<T>& grads,
                                         LossWeighting weighting = LossWeighting::Balanced,
                                         bool update_running_stats = true);

/// Training-mode loss only (no gradients, no running-stat updates).
template <typename T>
T pair_loss(SiameseModel<T>& model, const Tensor3<T>& exemplar_input, const Tensor3<T>& search_input,
            const LabelMap& labels, LossWeighting weighting = LossWeighting::Balanced);

extern template struct SiameseModel<float>;
extern template struct SiameseModel<double>;

}  // namespace evtrack::net

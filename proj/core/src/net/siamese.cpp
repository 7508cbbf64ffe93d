#include "evtrack/net/siamese.hpp"

#include "evtrack/net/correlation.hpp"

namespace evtrack::net {

template <typename T>
SiameseModel<T>::SiameseModel(Architecture architecture) : backbone(std::move(architecture)) {
    head.push_back({"adjust.scale", {1}, {static_cast<T>(kInitialScale)}, false});
    head.push_back({"adjust.bias", {1}, {T{0}}, true});
}

template <typename T>
void SiameseModel<T>::initialize(std::uint64_t seed) {
    backbone.initialize(seed);
    head[0].values[0] = static_cast<T>(kInitialScale);
    head[1].values[0] = T{0};
}

template <typename T>
Grid2<T> SiameseModel<T>::score(const Tensor3<T>& exemplar_features, const Tensor3<T>& search_features) const {
    Grid2<T> p = cross_correlate(exemplar_features, search_features);
    const T s = scale();
    const T b = bias();
    for (T& v : p.values()) v = s * v + b;
    return p;
}

template <typename T>
void SiameseGradients<T>::zero() {
    for (auto& g : backbone) std::fill(g.begin(), g.end(), T{0});
    for (auto& g : head) std::fill(g.begin(), g.end(), T{0});
}

template <typename T>
SiameseGradients<T> make_gradients(const SiameseModel<T>& model) {
    SiameseGradients<T> g;
    g.backbone = model.backbone.make_gradients();
    for (const auto& p : model.head) g.head.emplace_back(p.values.size(), T{0});
    return g;
}

template <typename T>
PairOutcome<T> accumulate_objective_gradients(SiameseModel<T>& model, const Tensor3<T>& exemplar_input,
                                              const Tensor3<T>& search_input, const ScoreObjective<T>& objective,
                                              SiameseGradients<T>& grads, bool update_running_stats) {
    ForwardTape<T> exemplar_tape;
    ForwardTape<T> search_tape;
    const Tensor3<T> fz = model.backbone.forward_train(exemplar_input, exemplar_tape, update_running_stats);
    const Tensor3<T> fx = model.backbone.forward_train(search_input, search_tape, update_running_stats);
    const Grid2<T> corr = cross_correlate(fz, fx);

    PairOutcome<T> outcome;
    outcome.scores = Grid2<T>(corr.height(), corr.width());
    const T s = model.scale();
    const T b = model.bias();
    for (std::size_t i = 0; i < corr.size(); ++i) outcome.scores.values()[i] = s * corr.values()[i] + b;

    LossResult<T> loss = objective(outcome.scores);
    outcome.loss = loss.loss;

    Grid2<T> grad_corr(corr.height(), corr.width());
    double grad_scale = 0.0;
    double grad_bias = 0.0;
    for (std::size_t i = 0; i < corr.size(); ++i) {
        const T g = loss.grad.values()[i];
        grad_scale += static_cast<double>(g) * corr.values()[i];
        grad_bias += g;
        grad_corr.values()[i] = g * s;
    }
    grads.head[0][0] += static_cast<T>(grad_scale);
    grads.head[1][0] += static_cast<T>(grad_bias);

    Tensor3<T> grad_fz, grad_fx;
    cross_correlate_backward(fz, fx, grad_corr, grad_fz, grad_fx);
    model.backbone.backward(exemplar_tape, grad_fz, grads.backbone);
    model.backbone.backward(search_tape, grad_fx, grads.backbone);
    return outcome;
}

template <typename T>
PairOutcome<T> accumulate_pair_gradients(SiameseModel<T>& model, const Tensor3<T>& exemplar_input,
                                         const Tensor3<T>& search_input, const LabelMap& labels,
                                         SiameseGradients<T>& grads, LossWeighting weighting,
                                         bool update_running_stats) {
    return accumulate_objective_gradients<T>(
        model, exemplar_input, search_input,
        [&](const Grid2<T>& scores) { return logistic_loss(scores, labels, weighting); }, grads,
        update_running_stats);
}

template <typename T>
T pair_loss(SiameseModel<T>& model, const Tensor3<T>& exemplar_input, const Tensor3<T>& search_input,
            const LabelMap& labels, LossWeighting weighting) {
    ForwardTape<T> tape;
    const Tensor3<T> fz = model.backbone.forward_train(exemplar_input, tape, false);
    const Tensor3<T> fx = model.backbone.forward_train(search_input, tape, false);
    Grid2<T> scores = cross_correlate(fz, fx);
    for (T& v : scores.values()) v = model.scale() * v + model.bias();
    return logistic_loss(scores, labels, weighting).loss;
}

template struct SiameseModel<float>;
template struct SiameseModel<double>;
template struct SiameseGradients<float>;
template struct SiameseGradients<double>;
template SiameseGradients<float> make_gradients<float>(const SiameseModel<float>&);
template SiameseGradients<double> make_gradients<double>(const SiameseModel<double>&);
template PairOutcome<float> accumulate_pair_gradients<float>(SiameseModel<float>&, const Tensor3<float>&,
                                                             const Tensor3<float>&, const LabelMap&,
                                                             SiameseGradients<float>&, LossWeighting, bool);
template PairOutcome<double> accumulate_pair_gradients<double>(SiameseModel<double>&, const Tensor3<double>&,
                                                               const Tensor3<double>&, const LabelMap&,
                                                               SiameseGradients<double>&, LossWeighting, bool);
template PairOutcome<float> accumulate_objective_gradients<float>(SiameseModel<float>&, const Tensor3<float>&,
                                                                  const Tensor3<float>&, const ScoreObjective<float>&,
                                                                  SiameseGradients<float>&, bool);
template PairOutcome<double> accumulate_objective_gradients<double>(SiameseModel<double>&, const Tensor3<double>&,
                                                                    const Tensor3<double>&,
                                                                    const ScoreObjective<double>&,
                                                                    SiameseGradients<double>&, bool);
template float pair_loss<float>(SiameseModel<float>&, const Tensor3<float>&, const Tensor3<float>&, const LabelMap&,
                                LossWeighting);
template double pair_loss<double>(SiameseModel<double>&, const Tensor3<double>&, const Tensor3<double>&,
                                  const LabelMap&, LossWeighting);

}  // namespace evtrack::net

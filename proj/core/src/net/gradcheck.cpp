#include "evtrack/net/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "evtrack/net/correlation.hpp"

namespace evtrack::net {
GradCheckResult grad_check(SiameseModel<double>& model, const Tensor3<double>& exemplar_input,
                           const Tensor3<double>& search_input, const LabelMap& labels,
                           const GradCheckOptions& options, const GradientMutator& mutate) {
    std::mt19937_64 rng(options.seed);

    // The linear objective needs the score-map shape; take it from one eval pass.
    const Grid2<double> probe =
        cross_correlate(model.backbone.forward(exemplar_input), model.backbone.forward(search_input));
    Grid2<double> projection(probe.height(), probe.width());
    for (double& v : projection.values()) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;

    ScoreObjective<double> objective = [&](const Grid2<double>& scores) {
        if (options.objective == GradCheckObjective::Logistic) {
            return logistic_loss(scores, labels, LossWeighting::Balanced);
        }
        LossResult<double> r;
        r.grad = projection;
        for (std::size_t i = 0; i < scores.size(); ++i) r.loss += scores.values()[i] * projection.values()[i];
        return r;
    };

    SiameseGradients<double> grads = make_gradients(model);
    accumulate_objective_gradients(model, exemplar_input, search_input, objective, grads, false);
    if (mutate) mutate(grads);

    // Loss plus a fingerprint of every ReLU mask and max-pool winner. Central differences are
    // only meaningful when both probes stay on the same linear piece as the base point.
    auto evaluate = [&](std::uint64_t& signature) {
        ForwardTape<double> tz, tx;
        const Tensor3<double> fz = model.backbone.forward_train(exemplar_input, tz, false);
        const Tensor3<double> fx = model.backbone.forward_train(search_input, tx, false);
        Grid2<double> scores = cross_correlate(fz, fx);
        for (double& v : scores.values()) v = model.scale() * v + model.bias();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](std::uint64_t v) { h = (h ^ v) * 0x100000001b3ULL; };
        for (const ForwardTape<double>* tape : {&tz, &tx}) {
            for (const LayerTrace<double>& trace : tape->layers) {
                for (double v : trace.output.values()) mix(v > 0.0);
                for (int a : trace.argmax) mix(static_cast<std::uint64_t>(a));
            }
        }
        signature = h;
        return objective(scores).loss;
    };
    std::uint64_t base_signature = 0;
    evaluate(base_signature);

    std::vector<std::pair<bool, std::size_t>> tensors;
    for (std::size_t i = 0; i < model.backbone.parameters().size(); ++i) {
        if (model.backbone.parameters()[i].trainable) tensors.emplace_back(false, i);
    }
    for (std::size_t i = 0; i < model.head.size(); ++i) tensors.emplace_back(true, i);
    const std::size_t per_tensor = std::max<std::size_t>(1, options.samples / std::max<std::size_t>(1, tensors.size()));

    GradCheckResult result;
    for (auto [head, ti] : tensors) {
        Parameter<double>& p = head ? model.head[ti] : model.backbone.parameters()[ti];
        const std::vector<double>& g = head ? grads.head[ti] : grads.backbone[ti];
        std::vector<std::size_t> idx(p.values.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        // Entries whose probes cross a kink are replaced by the next candidate, within a budget.
        std::size_t accepted = 0;
        for (std::size_t c = 0; c < idx.size() && accepted < per_tensor && c < 4 * per_tensor; ++c) {
            const std::size_t k = idx[c];
            const double original = p.values[k];
            std::uint64_t sig_plus = 0, sig_minus = 0;
            p.values[k] = original + options.epsilon;
            const double plus = evaluate(sig_plus);
            p.values[k] = original - options.epsilon;
            const double minus = evaluate(sig_minus);
            p.values[k] = original;
            if (sig_plus != base_signature || sig_minus != base_signature) {
                ++result.skipped;
                continue;
            }
            ++accepted;
            const double analytic = g[k];
            const double numeric = (plus - minus) / (2.0 * options.epsilon);
            const double denom = std::max({std::abs(analytic), std::abs(numeric), options.denominator_floor});
            const double rel = std::abs(analytic - numeric) / denom;
            ++result.checked;
            if (rel > result.max_relative_error || result.worst_parameter.empty()) {
                result.max_relative_error = std::max(rel, result.max_relative_error);
                result.worst_parameter = p.name;
                result.worst_index = k;
                result.worst_analytic = analytic;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

GradCheckResult run_reduced_grad_check(const ReducedGradCheck& setup, const GradCheckOptions& options,
                                       const GradientMutator& mutate) {
    SiameseModel<double> model(Architecture::alexnet_scaled(setup.input_channels, setup.width));
    model.initialize(setup.seed);
    std::mt19937_64 rng(setup.seed ^ 0x9e3779b97f4a7c15ULL);
    auto random_input = [&](int size) {
        Tensor3<double> t(setup.input_channels, size, size);
        for (double& v : t.values()) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return t;
    };
    const Tensor3<double> z = random_input(setup.exemplar_size);
    const Tensor3<double> x = random_input(setup.search_size);
    const Architecture& arch = model.backbone.architecture();
    const int score = arch.output_extent(setup.search_size) - arch.output_extent(setup.exemplar_size) + 1;
    if (arch.output_extent(setup.exemplar_size) < 1 || score < 1) throw ShapeError("gradient check inputs are too small");
    return grad_check(model, z, x, make_label_map(score, score, setup.label_radius), options, mutate);
}

}  // namespace evtrack::net

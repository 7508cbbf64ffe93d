#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "evtrack/net/siamese.hpp"

namespace evtrack::net {

enum class GradCheckObjective {
    Logistic,  ///< balanced logistic loss against the label map
    Linear,    ///< fixed random projection of the score map
};

struct GradCheckOptions {
    double epsilon = 1e-5;
    std::size_t samples = 256;  ///< parameter entries checked, spread over all trainable tensors
    std::uint64_t seed = 1;
    /// Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps analytically-zero
    /// gradients (conv biases ahead of batch norm) from dividing rounding noise by zero.
    double denominator_floor = 1e-6;
    GradCheckObjective objective = GradCheckObjective::Logistic;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  ///< candidates dropped because a probe crossed a ReLU or max-pool kink
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Hook that may tamper with the analytic gradients before comparison (fault injection).
using GradientMutator = std::function<void(SiameseGradients<double>&)>;

/// Central finite differences over a random subsample of trainable parameters (backbone and
/// head) against the analytic pair gradients, in double precision. A candidate whose +/- epsilon
/// probes change any ReLU mask or max-pool winner sits on a kink where the loss is not
/// differentiable; it is skipped and the next candidate of the same tensor is tried. The
/// model is restored to its original values afterwards.
GradCheckResult grad_check(SiameseModel<double>& model, const Tensor3<double>& exemplar_input,
                           const Tensor3<double>& search_input, const LabelMap& labels,
                           const GradCheckOptions& options = {}, const GradientMutator& mutate = {});

/// Self-contained check on a narrow extractor with small random branch inputs.
struct ReducedGradCheck {
    int input_channels = 18;
    double width = 16.0 / 384.0;  ///< widest conv layer gets 16 channels
    int exemplar_size = 103;      ///< 3x3 exemplar features
    int search_size = 135;        ///< 7x7 search features, 5x5 score map
    double label_radius = 1.0;
    std::uint64_t seed = 1;
};

/// Builds and initializes the reduced model from `setup.seed`, draws uniform [0, 1) inputs
/// and runs grad_check.
GradCheckResult run_reduced_grad_check(const ReducedGradCheck& setup = {}, const GradCheckOptions& options = {},
                                       const GradientMutator& mutate = {});

}  // namespace evtrack::net

#pragma once

#include <vector>

#include "evtrack/net/network.hpp"

namespace evtrack::net {

struct SgdConfig {
    double learning_rate = 1e-2;
    double momentum = 0.9;
    double weight_decay = 5e-4;
};

/// One momentum-SGD update over a parameter list:
///   v <- momentum * v + g + weight_decay * theta;  theta <- theta - lr * v.
/// Untrainable parameters are skipped. `velocity` is resized (zero-filled) on first use.
template <typename T>
void sgd_step(std::vector<Parameter<T>>& params, const Gradients<T>& grads, Gradients<T>& velocity,
              const SgdConfig& config);

/// Geometric decay from `start` to `end` over `epochs` epochs (epoch counted from 0).
double geometric_learning_rate(double start, double end, int epoch, int epochs);

}  // namespace evtrack::net

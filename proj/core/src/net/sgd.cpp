#include "evtrack/net/sgd.hpp"

#include <cmath>

#include "evtrack/error.hpp"

namespace evtrack::net {

template <typename T>
void sgd_step(std::vector<Parameter<T>>& params, const Gradients<T>& grads, Gradients<T>& velocity,
              const SgdConfig& config) {
    if (grads.size() != params.size()) throw ShapeError("gradient list does not match parameters");
    if (velocity.size() != params.size()) {
        velocity.clear();
        for (const auto& p : params) velocity.emplace_back(p.trainable ? p.values.size() : 0, T{0});
    }
    const T lr = static_cast<T>(config.learning_rate);
    const T momentum = static_cast<T>(config.momentum);
    const T decay = static_cast<T>(config.weight_decay);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter<T>& p = params[i];
        if (!p.trainable) continue;
        const std::vector<T>& g = grads[i];
        std::vector<T>& v = velocity[i];
        if (g.size() != p.values.size() || v.size() != p.values.size()) {
            throw ShapeError("gradient for " + p.name + " has the wrong size");
        }
        for (std::size_t j = 0; j < g.size(); ++j) {
            v[j] = momentum * v[j] + g[j] + decay * p.values[j];
            p.values[j] -= lr * v[j];
        }
    }
}

double geometric_learning_rate(double start, double end, int epoch, int epochs) {
    if (epochs <= 1 || start <= 0.0 || end <= 0.0) return start;
    const double progress = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
    return start * std::pow(end / start, progress);
}

template void sgd_step<float>(std::vector<Parameter<float>>&, const Gradients<float>&, Gradients<float>&,
                              const SgdConfig&);
template void sgd_step<double>(std::vector<Parameter<double>>&, const Gradients<double>&, Gradients<double>&,
                               const SgdConfig&);

}  // namespace evtrack::net

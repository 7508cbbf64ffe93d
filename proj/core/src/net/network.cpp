#include "evtrack/net/network.hpp"

#include <cmath>
#include <random>
#include <span>

#include "evtrack/error.hpp"

namespace evtrack::net {

int Architecture::input_channels() const {
    for (const LayerSpec& l : layers) {
        if (l.kind == LayerKind::Conv) return l.in_channels;
    }
    return 0;
}

int Architecture::output_channels() const {
    int channels = 0;
    for (const LayerSpec& l : layers) {
        if (l.kind == LayerKind::Conv) channels = l.out_channels;
    }
    return channels;
}

int Architecture::output_extent(int input_extent) const {
    int extent = input_extent;
    for (const LayerSpec& l : layers) {
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::MaxPool) {
            extent = valid_extent(extent, l.kernel, l.stride);
            if (extent < 1) return 0;
        }
    }
    return extent;
}

Architecture Architecture::alexnet(int input_channels, const std::vector<int>& widths) {
    if (widths.size() != 5) throw InvalidArgument("alexnet needs five conv widths");
    if (input_channels < 1) throw InvalidArgument("alexnet needs at least one input channel");
    Architecture a;
    auto conv = [&](int in, int out, int k, int s) {
        a.layers.push_back({LayerKind::Conv, in, out, k, s});
        a.layers.push_back({LayerKind::BatchNorm, 0, out, 1, 1});
    };
    auto relu = [&] { a.layers.push_back({LayerKind::Relu}); };
    auto pool = [&] { a.layers.push_back({LayerKind::MaxPool, 0, 0, 3, 2}); };
    conv(input_channels, widths[0], 11, 2);
    relu();
    pool();
    conv(widths[0], widths[1], 5, 1);
    relu();
    pool();
    conv(widths[1], widths[2], 3, 1);
    relu();
    conv(widths[2], widths[3], 3, 1);
    relu();
    conv(widths[3], widths[4], 3, 1);
    return a;
}

Architecture Architecture::alexnet_scaled(int input_channels, double multiplier) {
    if (!(multiplier > 0.0)) throw InvalidArgument("width multiplier must be positive");
    std::vector<int> widths;
    for (int w : {96, 256, 384, 384, 256}) widths.push_back(std::max(1, static_cast<int>(std::lround(w * multiplier))));
    return alexnet(input_channels, widths);
}

template <typename T>
Network<T>::Network(Architecture architecture) : architecture_(std::move(architecture)) {
    int conv_index = 0;
    int channels = architecture_.input_channels();
    auto add = [&](std::string name, std::vector<std::uint32_t> shape, T fill, bool trainable) {
        std::size_t count = 1;
        for (auto d : shape) count *= d;
        params_.push_back({std::move(name), std::move(shape), std::vector<T>(count, fill), trainable});
        return static_cast<int>(params_.size()) - 1;
    };
    for (const LayerSpec& l : architecture_.layers) {
        LayerParams lp;
        switch (l.kind) {
            case LayerKind::Conv: {
                if (l.in_channels != channels) throw ShapeError("conv input channels do not chain");
                ++conv_index;
                const std::string p = "conv" + std::to_string(conv_index);
                const auto o = static_cast<std::uint32_t>(l.out_channels);
                const auto i = static_cast<std::uint32_t>(l.in_channels);
                const auto k = static_cast<std::uint32_t>(l.kernel);
                lp.weight = add(p + ".weight", {o, i, k, k}, T{0}, true);
                lp.bias = add(p + ".bias", {o}, T{0}, true);
                channels = l.out_channels;
                break;
            }
            case LayerKind::BatchNorm: {
                if (l.out_channels != channels) throw ShapeError("batch norm channels do not match");
                const std::string p = "bn" + std::to_string(conv_index);
                const auto c = static_cast<std::uint32_t>(channels);
                lp.gamma = add(p + ".gamma", {c}, T{1}, true);
                lp.beta = add(p + ".beta", {c}, T{0}, true);
                lp.mean = add(p + ".mean", {c}, T{0}, false);
                lp.var = add(p + ".var", {c}, T{1}, false);
                break;
            }
            case LayerKind::Relu:
            case LayerKind::MaxPool:
                break;
        }
        layer_params_.push_back(lp);
    }
}

template <typename T>
void Network<T>::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double bound) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return static_cast<T>((2.0 * u - 1.0) * bound);
    };
    for (std::size_t li = 0; li < architecture_.layers.size(); ++li) {
        const LayerSpec& l = architecture_.layers[li];
        const LayerParams& lp = layer_params_[li];
        if (l.kind == LayerKind::Conv) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(l.in_channels * l.kernel * l.kernel));
            for (T& v : params_[static_cast<std::size_t>(lp.weight)].values) v = uniform(bound);
            for (T& v : params_[static_cast<std::size_t>(lp.bias)].values) v = uniform(bound);
        } else if (l.kind == LayerKind::BatchNorm) {
            std::fill(params_[static_cast<std::size_t>(lp.gamma)].values.begin(), params_[static_cast<std::size_t>(lp.gamma)].values.end(), T{1});
            std::fill(params_[static_cast<std::size_t>(lp.beta)].values.begin(), params_[static_cast<std::size_t>(lp.beta)].values.end(), T{0});
            std::fill(params_[static_cast<std::size_t>(lp.mean)].values.begin(), params_[static_cast<std::size_t>(lp.mean)].values.end(), T{0});
            std::fill(params_[static_cast<std::size_t>(lp.var)].values.begin(), params_[static_cast<std::size_t>(lp.var)].values.end(), T{1});
        }
    }
}

template <typename T>
Parameter<T>& Network<T>::parameter(const std::string& name) {
    for (auto& p : params_) {
        if (p.name == name) return p;
    }
    throw InvalidArgument("no parameter named " + name);
}

template <typename T>
const Parameter<T>& Network<T>::parameter(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p;
    }
    throw InvalidArgument("no parameter named " + name);
}

template <typename T>
Gradients<T> Network<T>::make_gradients() const {
    Gradients<T> grads;
    grads.reserve(params_.size());
    for (const auto& p : params_) grads.emplace_back(p.trainable ? p.values.size() : 0, T{0});
    return grads;
}

template <typename T>
Tensor3<T> Network<T>::forward(const Tensor3<T>& input) const {
    if (input.channels() != architecture_.input_channels()) {
        throw ShapeError("network expects " + std::to_string(architecture_.input_channels()) + " input channels, got " +
                         std::to_string(input.channels()));
    }
    auto span_of = [this](int idx) { return std::span<const T>(params_[static_cast<std::size_t>(idx)].values); };
    Tensor3<T> x = input;
    for (std::size_t li = 0; li < architecture_.layers.size(); ++li) {
        const LayerSpec& l = architecture_.layers[li];
        const LayerParams& lp = layer_params_[li];
        switch (l.kind) {
            case LayerKind::Conv:
                x = conv2d_forward<T>(x, span_of(lp.weight), span_of(lp.bias), l.out_channels, l.kernel, l.stride);
                break;
            case LayerKind::BatchNorm:
                x = batchnorm_eval_forward<T>(x, span_of(lp.gamma), span_of(lp.beta), span_of(lp.mean), span_of(lp.var),
                                              static_cast<T>(kBatchNormEpsilon));
                break;
            case LayerKind::Relu:
                relu_inplace(x);
                break;
            case LayerKind::MaxPool:
                x = maxpool_forward<T>(x, l.kernel, l.stride, nullptr);
                break;
        }
    }
    return x;
}

template <typename T>
Tensor3<T> Network<T>::forward_train(const Tensor3<T>& input, ForwardTape<T>& tape, bool update_running_stats) {
    if (input.channels() != architecture_.input_channels()) {
        throw ShapeError("network expects " + std::to_string(architecture_.input_channels()) + " input channels, got " +
                         std::to_string(input.channels()));
    }
    auto span_of = [this](int idx) { return std::span<const T>(params_[static_cast<std::size_t>(idx)].values); };
    tape.recorded = false;
    tape.layers.assign(architecture_.layers.size(), LayerTrace<T>{});
    Tensor3<T> x = input;
    std::vector<T> batch_mean, batch_var;
    for (std::size_t li = 0; li < architecture_.layers.size(); ++li) {
        const LayerSpec& l = architecture_.layers[li];
        const LayerParams& lp = layer_params_[li];
        LayerTrace<T>& trace = tape.layers[li];
        trace.in_channels = x.channels();
        trace.in_height = x.height();
        trace.in_width = x.width();
        switch (l.kind) {
            case LayerKind::Conv: {
                Tensor3<T> y = conv2d_forward<T>(x, span_of(lp.weight), span_of(lp.bias), l.out_channels, l.kernel, l.stride);
                trace.input = std::move(x);
                x = std::move(y);
                break;
            }
            case LayerKind::BatchNorm: {
                x = batchnorm_train_forward<T>(x, span_of(lp.gamma), span_of(lp.beta), static_cast<T>(kBatchNormEpsilon),
                                               trace.batchnorm, batch_mean, batch_var);
                if (update_running_stats) {
                    const double n = static_cast<double>(trace.in_height) * trace.in_width;
                    const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
                    auto& rm = params_[static_cast<std::size_t>(lp.mean)].values;
                    auto& rv = params_[static_cast<std::size_t>(lp.var)].values;
                    const T m = static_cast<T>(kBatchNormMomentum);
                    for (std::size_t c = 0; c < rm.size(); ++c) {
                        rm[c] = (T{1} - m) * rm[c] + m * batch_mean[c];
                        rv[c] = (T{1} - m) * rv[c] + m * static_cast<T>(batch_var[c] * unbias);
                    }
                }
                break;
            }
            case LayerKind::Relu:
                relu_inplace(x);
                trace.output = x;
                break;
            case LayerKind::MaxPool:
                x = maxpool_forward<T>(x, l.kernel, l.stride, &trace.argmax);
                break;
        }
    }
    tape.recorded = true;
    return x;
}

template <typename T>
void Network<T>::backward(const ForwardTape<T>& tape, const Tensor3<T>& grad_output, Gradients<T>& grads,
                          Tensor3<T>* grad_input) const {
    if (!tape.recorded || tape.layers.size() != architecture_.layers.size()) {
        throw StateError("backward requires a preceding training-mode forward pass");
    }
    if (grads.size() != params_.size()) throw ShapeError("gradient list does not match the parameter list");
    auto span_of = [this](int idx) { return std::span<const T>(params_[static_cast<std::size_t>(idx)].values); };
    auto grad_of = [&grads](int idx) { return std::span<T>(grads[static_cast<std::size_t>(idx)]); };

    // The first conv never needs its input gradient unless the caller asks for it.
    std::size_t first_conv = architecture_.layers.size();
    for (std::size_t li = 0; li < architecture_.layers.size(); ++li) {
        if (architecture_.layers[li].kind == LayerKind::Conv) {
            first_conv = li;
            break;
        }
    }

    Tensor3<T> g = grad_output;
    for (std::size_t r = architecture_.layers.size(); r-- > 0;) {
        const LayerSpec& l = architecture_.layers[r];
        const LayerParams& lp = layer_params_[r];
        const LayerTrace<T>& trace = tape.layers[r];
        switch (l.kind) {
            case LayerKind::Conv: {
                const bool need_input = r != first_conv || grad_input != nullptr;
                Tensor3<T> gin;
                conv2d_backward<T>(trace.input, span_of(lp.weight), g, l.kernel, l.stride, grad_of(lp.weight),
                                   grad_of(lp.bias), need_input ? &gin : nullptr);
                g = std::move(gin);
                break;
            }
            case LayerKind::BatchNorm:
                g = batchnorm_backward<T>(trace.batchnorm, span_of(lp.gamma), g, grad_of(lp.gamma), grad_of(lp.beta));
                break;
            case LayerKind::Relu:
                g = relu_backward<T>(trace.output, g);
                break;
            case LayerKind::MaxPool:
                g = maxpool_backward<T>(g, trace.argmax, trace.in_channels, trace.in_height, trace.in_width);
                break;
        }
        if (r == first_conv && grad_input == nullptr) return;
    }
    if (grad_input != nullptr) *grad_input = std::move(g);
}

template class Network<float>;
template class Network<double>;

}  // namespace evtrack::net

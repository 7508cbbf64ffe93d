#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evtrack/net/kernels.hpp"
#include "evtrack/tensor.hpp"

namespace evtrack::net {

enum class LayerKind { Conv, BatchNorm, Relu, MaxPool };

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int in_channels = 0;   ///< Conv only
    int out_channels = 0;  ///< Conv and BatchNorm
    int kernel = 1;        ///< Conv and MaxPool
    int stride = 1;        ///< Conv and MaxPool
};

/// Ordered layer stack of a feature extractor.
struct Architecture {
    std::vector<LayerSpec> layers;

    int input_channels() const;
    int output_channels() const;
    /// Spatial output extent for a square input, or 0 if the input is too small.
    int output_extent(int input_extent) const;

    /// Conv-BN-ReLU-Pool x2, Conv-BN-ReLU x2, Conv-BN, no padding, no fully connected layers.
    /// `widths` gives the five conv output channel counts.
    static Architecture alexnet(int input_channels, const std::vector<int>& widths = {96, 256, 384, 384, 256});
    /// alexnet() with every width multiplied by `multiplier` (rounded, at least 1).
    static Architecture alexnet_scaled(int input_channels, double multiplier);
};

enum class Mode { Train, Eval };

/// A named parameter or buffer tensor. Running statistics are not trainable.
template <typename T>
struct Parameter {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<T> values;
    bool trainable = true;
};

/// Gradient storage aligned with a parameter list (untrainable entries stay empty-valued zeros).
template <typename T>
using Gradients = std::vector<std::vector<T>>;

template <typename T>
struct LayerTrace {
    Tensor3<T> input;             ///< Conv: forward input
    Tensor3<T> output;            ///< ReLU: forward output
    BatchNormCache<T> batchnorm;  ///< BatchNorm (train mode)
    std::vector<int> argmax;      ///< MaxPool
    int in_channels = 0, in_height = 0, in_width = 0;
};

/// Activations recorded by a training-mode forward pass, consumed by backward().
template <typename T>
struct ForwardTape {
    bool recorded = false;
    std::vector<LayerTrace<T>> layers;
};

/// Shared feature extractor. Parameters are stored as a flat named list; each layer refers to
/// its entries by index. Names follow conv{i}.weight / conv{i}.bias / bn{i}.gamma / bn{i}.beta /
/// bn{i}.mean / bn{i}.var with i counting conv layers from 1.
template <typename T>
class Network {
public:
    static constexpr double kBatchNormEpsilon = 1e-5;
    static constexpr double kBatchNormMomentum = 0.1;

    Network() = default;
    /// Zero-initialized parameters (BN gamma = 1, running var = 1).
    explicit Network(Architecture architecture);

    /// Centered uniform fan-in initialization of conv weights and biases.
    void initialize(std::uint64_t seed);

    const Architecture& architecture() const { return architecture_; }
    std::vector<Parameter<T>>& parameters() { return params_; }
    const std::vector<Parameter<T>>& parameters() const { return params_; }
    Parameter<T>& parameter(const std::string& name);
    const Parameter<T>& parameter(const std::string& name) const;

    /// Eval mode: uses running statistics, records nothing.
    Tensor3<T> forward(const Tensor3<T>& input) const;

    /// Train mode: batch statistics over spatial positions. Records activations in `tape` and,
    /// when update_running_stats is set, blends the batch statistics into the running ones.
    Tensor3<T> forward_train(const Tensor3<T>& input, ForwardTape<T>& tape, bool update_running_stats = true);

    /// Accumulates parameter gradients for the recorded pass into `grads` (sized by
    /// make_gradients()). Returns the input gradient when requested. Throws StateError when
    /// the tape was not recorded by forward_train.
    void backward(const ForwardTape<T>& tape, const Tensor3<T>& grad_output, Gradients<T>& grads,
                  Tensor3<T>* grad_input = nullptr) const;

    Gradients<T> make_gradients() const;

    /// Converts every parameter to another scalar type.
    template <typename U>
    Network<U> cast() const {
        Network<U> out(architecture_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& dst = out.parameters()[i].values;
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<U>(params_[i].values[j]);
        }
        return out;
    }

private:
    struct LayerParams {
        int weight = -1, bias = -1;                     // Conv
        int gamma = -1, beta = -1, mean = -1, var = -1;  // BatchNorm
    };

    Architecture architecture_;
    std::vector<Parameter<T>> params_;
    std::vector<LayerParams> layer_params_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace evtrack::net

#include "evtrack/net/inference.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "net/fft_conv.hpp"
#include "net/winograd.hpp"

namespace evtrack::net {

namespace {

constexpr int kTileCandidates[] = {16, 32, 64};

}  // namespace

InferenceEngine::InferenceEngine(const Network<float>& network, int reference_extent, std::size_t max_spectrum_bytes)
    : architecture_(network.architecture()) {
    std::size_t budget = max_spectrum_bytes;
    int extent = reference_extent;
    int conv_index = 0;
    const auto& specs = architecture_.layers;
    for (std::size_t li = 0; li < specs.size(); ++li) {
        const LayerSpec& spec = specs[li];
        Layer layer;
        layer.spec = spec;
        switch (spec.kind) {
            case LayerKind::Conv: {
                ++conv_index;
                const std::string index = std::to_string(conv_index);
                layer.weight = network.parameter("conv" + index + ".weight").values;
                layer.bias = network.parameter("conv" + index + ".bias").values;
                if (li + 1 < specs.size() && specs[li + 1].kind == LayerKind::BatchNorm) {
                    const auto& gamma = network.parameter("bn" + index + ".gamma").values;
                    const auto& beta = network.parameter("bn" + index + ".beta").values;
                    const auto& mean = network.parameter("bn" + index + ".mean").values;
                    const auto& var = network.parameter("bn" + index + ".var").values;
                    const std::size_t fan_in = layer.weight.size() / static_cast<std::size_t>(spec.out_channels);
                    for (int o = 0; o < spec.out_channels; ++o) {
                        const double factor = static_cast<double>(gamma[o]) /
                                              std::sqrt(static_cast<double>(var[o]) + Network<float>::kBatchNormEpsilon);
                        for (std::size_t j = 0; j < fan_in; ++j) {
                            float& w = layer.weight[o * fan_in + j];
                            w = static_cast<float>(w * factor);
                        }
                        layer.bias[o] = static_cast<float>((static_cast<double>(layer.bias[o]) - mean[o]) * factor + beta[o]);
                    }
                    ++li;
                }
                if (spec.kernel == 3 && spec.stride == 1) {
                    layer.winograd = std::make_unique<detail::WinogradConv>(layer.weight, layer.bias, spec.out_channels,
                                                                            spec.in_channels);
                }
                if (extent >= spec.kernel) {
                    double best = std::numeric_limits<double>::infinity();
                    int best_tile = 0;
                    for (int tile : kTileCandidates) {
                        const std::size_t bytes = detail::FftConv::spectrum_bytes(spec.out_channels, spec.in_channels,
                                                                                  spec.kernel, spec.stride, tile);
                        if (bytes > budget) continue;
                        const double c = detail::FftConv::cost(spec.out_channels, spec.in_channels, spec.kernel,
                                                               spec.stride, tile, extent, extent);
                        if (c < best) {
                            best = c;
                            best_tile = tile;
                        }
                    }
                    double other = conv2d_forward_cost<float>(Tensor3<float>(spec.in_channels, extent, extent, 1.0f),
                                                              spec.out_channels, spec.kernel, spec.stride);
                    if (layer.winograd) {
                        other = std::min(other, detail::WinogradConv::cost(spec.out_channels, spec.in_channels, extent,
                                                                           extent));
                    }
                    if (best_tile > 0 && best < other) {
                        layer.fft = std::make_unique<detail::FftConv>(layer.weight, layer.bias, spec.out_channels,
                                                                      spec.in_channels, spec.kernel, spec.stride,
                                                                      best_tile);
                        layer.fft_tile = best_tile;
                        budget -= detail::FftConv::spectrum_bytes(spec.out_channels, spec.in_channels, spec.kernel,
                                                                  spec.stride, best_tile);
                    }
                }
                extent = extent >= spec.kernel ? valid_extent(extent, spec.kernel, spec.stride) : 0;
                break;
            }
            case LayerKind::BatchNorm: {
                const std::string index = std::to_string(conv_index);
                layer.gamma = network.parameter("bn" + index + ".gamma").values;
                layer.beta = network.parameter("bn" + index + ".beta").values;
                layer.mean = network.parameter("bn" + index + ".mean").values;
                layer.var = network.parameter("bn" + index + ".var").values;
                break;
            }
            case LayerKind::Relu:
                break;
            case LayerKind::MaxPool:
                extent = extent >= spec.kernel ? valid_extent(extent, spec.kernel, spec.stride) : 0;
                break;
        }
        layers_.push_back(std::move(layer));
    }
}

InferenceEngine::~InferenceEngine() = default;

int InferenceEngine::fft_layers() const {
    int n = 0;
    for (const Layer& l : layers_) n += l.fft != nullptr;
    return n;
}

Tensor3<float> InferenceEngine::forward(const Tensor3<float>& input) const {
    if (input.channels() != architecture_.input_channels()) {
        throw ShapeError("network expects " + std::to_string(architecture_.input_channels()) + " input channels, got " +
                         std::to_string(input.channels()));
    }
    Tensor3<float> x = input;
    for (const Layer& l : layers_) {
        const LayerSpec& s = l.spec;
        switch (s.kind) {
            case LayerKind::Conv: {
                if (x.height() < s.kernel || x.width() < s.kernel) throw ShapeError("input is smaller than the kernel");
                enum class Path { Direct, Winograd, Fft } path = Path::Direct;
                double best = conv2d_forward_cost<float>(x, s.out_channels, s.kernel, s.stride);
                if (l.winograd) {
                    const double c = detail::WinogradConv::cost(s.out_channels, s.in_channels, x.height(), x.width());
                    if (c < best) {
                        best = c;
                        path = Path::Winograd;
                    }
                }
                if (l.fft) {
                    const double c = detail::FftConv::cost(s.out_channels, s.in_channels, s.kernel, s.stride,
                                                           l.fft_tile, x.height(), x.width());
                    if (c < best) path = Path::Fft;
                }
                switch (path) {
                    case Path::Direct:
                        x = conv2d_forward<float>(x, l.weight, l.bias, s.out_channels, s.kernel, s.stride);
                        break;
                    case Path::Winograd:
                        x = l.winograd->forward(x);
                        break;
                    case Path::Fft:
                        x = l.fft->forward(x);
                        break;
                }
                break;
            }
            case LayerKind::BatchNorm:
                x = batchnorm_eval_forward<float>(x, l.gamma, l.beta, l.mean, l.var,
                                                  static_cast<float>(Network<float>::kBatchNormEpsilon));
                break;
            case LayerKind::Relu:
                relu_inplace(x);
                break;
            case LayerKind::MaxPool:
                x = maxpool_forward<float>(x, s.kernel, s.stride, nullptr);
                break;
        }
    }
    return x;
}

}  // namespace evtrack::net

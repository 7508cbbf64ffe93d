#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "evtrack/net/network.hpp"

namespace evtrack::net {

namespace detail {
class FftConv;
class WinogradConv;
}

/// Eval-mode forward pass of a float network with per-layer algorithm selection.
///
/// Batch norms that directly follow a convolution are folded into its weights. Convolutions are
/// evaluated with whichever of the dense, sparse, Winograd and FFT paths has the lowest estimated
/// cost for the actual input. FFT kernel spectra are precomputed at construction for layers
/// whose spectra fit in `max_spectrum_bytes` in total. Results match Network::forward up to
/// float rounding. The engine copies what it needs and does not reference the network later.
class InferenceEngine {
public:
    static constexpr std::size_t kDefaultSpectrumBytes = std::size_t{96} << 20;

    explicit InferenceEngine(const Network<float>& network, int reference_extent = 255,
                             std::size_t max_spectrum_bytes = kDefaultSpectrumBytes);
    ~InferenceEngine();
    InferenceEngine(const InferenceEngine&) = delete;
    InferenceEngine& operator=(const InferenceEngine&) = delete;

    /// Safe to call concurrently.
    Tensor3<float> forward(const Tensor3<float>& input) const;

    const Architecture& architecture() const { return architecture_; }
    /// Number of conv layers with a precomputed FFT path.
    int fft_layers() const;

private:
    struct Layer {
        LayerSpec spec;
        std::vector<float> weight, bias;                  // Conv
        std::vector<float> gamma, beta, mean, var;        // BatchNorm
        std::unique_ptr<detail::FftConv> fft;             // Conv, optional
        std::unique_ptr<detail::WinogradConv> winograd;   // 3x3 stride-1 Conv
        int fft_tile = 0;
    };

    Architecture architecture_;
    std::vector<Layer> layers_;
};

}  // namespace evtrack::net

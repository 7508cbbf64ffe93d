#pragma once

#include <complex>
#include <span>
#include <vector>

#include "evtrack/tensor.hpp"

namespace evtrack::net::detail {

/// Unpadded strided convolution evaluated with tiled real FFTs (overlap-save).
///
/// A stride-s convolution is split into s*s polyphase components, each a stride-1 correlation
/// with a ceil(k/s) kernel over a subsampled input plane; the components become extra input
/// channels. Each input tile is transformed once and combined with precomputed kernel
/// spectra by one complex matrix product per frequency bin.
class FftConv {
public:
    FftConv(std::span<const float> weight, std::span<const float> bias, int out_channels, int in_channels,
            int kernel, int stride, int tile);
    ~FftConv();
    FftConv(const FftConv&) = delete;
    FftConv& operator=(const FftConv&) = delete;

    Tensor3<float> forward(const Tensor3<float>& input) const;

    /// Estimated cost in real GEMM multiply-add units for an input of the given size.
    static double cost(int out_channels, int in_channels, int kernel, int stride, int tile, int height, int width);
    /// Bytes of kernel spectra held by an instance.
    static std::size_t spectrum_bytes(int out_channels, int in_channels, int kernel, int stride, int tile);

private:
    int out_channels_;
    int in_channels_;
    int kernel_;
    int stride_;
    int phase_kernel_;
    int tile_;
    int valid_;
    int bins_;
    int phases_;  ///< in_channels * stride^2
    std::vector<std::complex<float>> kernel_spectra_;  ///< [bin][out][phase], conjugated
    std::vector<float> bias_;
    void* forward_plan_ = nullptr;
    void* inverse_plan_ = nullptr;
};

}  // namespace evtrack::net::detail

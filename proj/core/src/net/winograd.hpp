#pragma once

#include <span>
#include <vector>

#include "evtrack/tensor.hpp"

namespace evtrack::net::detail {

/// Unpadded stride-1 3x3 convolution with the F(2x2, 3x3) minimal filtering algorithm.
///
/// Each 4x4 input tile and each kernel is mapped to a 4x4 transform domain, where the channel
/// reduction becomes 16 independent matrix products; the inverse transform yields a 2x2 output
/// block per tile.
class WinogradConv {
public:
    WinogradConv(std::span<const float> weight, std::span<const float> bias, int out_channels, int in_channels);

    Tensor3<float> forward(const Tensor3<float>& input) const;

    /// Estimated cost in GEMM multiply-add units for an input of the given size.
    static double cost(int out_channels, int in_channels, int height, int width);

private:
    int out_channels_;
    int in_channels_;
    std::vector<float> kernel_transform_;  ///< [16][out][in]
    std::vector<float> bias_;
};

}  // namespace evtrack::net::detail

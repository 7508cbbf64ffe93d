#include "net/winograd.hpp"

#include <algorithm>

#include <Eigen/Core>

#include "evtrack/error.hpp"

namespace evtrack::net::detail {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kPoints = 16;
constexpr double kTransformCost = 8.0;

int tiles_for(int extent) { return (extent - 2 + 1) / 2; }  // 2x2 output blocks over extent - 2 outputs

}  // namespace

double WinogradConv::cost(int out_channels, int in_channels, int height, int width) {
    if (height < 3 || width < 3) return 0.0;
    const double tiles = static_cast<double>(tiles_for(height)) * tiles_for(width);
    return tiles * (kPoints * static_cast<double>(out_channels) * in_channels +
                    kTransformCost * (in_channels + out_channels));
}

WinogradConv::WinogradConv(std::span<const float> weight, std::span<const float> bias, int out_channels,
                           int in_channels)
    : out_channels_(out_channels), in_channels_(in_channels), bias_(bias.begin(), bias.end()) {
    if (weight.size() != static_cast<std::size_t>(out_channels) * in_channels * 9) {
        throw ShapeError("Winograd convolution weight size mismatch");
    }
    const std::size_t plane = static_cast<std::size_t>(out_channels) * in_channels;
    kernel_transform_.assign(kPoints * plane, 0.0f);
    for (std::size_t oc = 0; oc < plane; ++oc) {
        const float* g = weight.data() + oc * 9;
        // G g, G = [1 0 0; .5 .5 .5; .5 -.5 .5; 0 0 1]
        float t[4][3];
        for (int j = 0; j < 3; ++j) {
            t[0][j] = g[j];
            t[1][j] = 0.5f * (g[j] + g[3 + j] + g[6 + j]);
            t[2][j] = 0.5f * (g[j] - g[3 + j] + g[6 + j]);
            t[3][j] = g[6 + j];
        }
        for (int i = 0; i < 4; ++i) {
            const float u[4] = {t[i][0], 0.5f * (t[i][0] + t[i][1] + t[i][2]), 0.5f * (t[i][0] - t[i][1] + t[i][2]),
                                t[i][2]};
            for (int j = 0; j < 4; ++j) kernel_transform_[(i * 4 + j) * plane + oc] = u[j];
        }
    }
}

Tensor3<float> WinogradConv::forward(const Tensor3<float>& input) const {
    if (input.channels() != in_channels_) throw ShapeError("Winograd convolution input channel mismatch");
    if (input.height() < 3 || input.width() < 3) throw ShapeError("input is smaller than the kernel");
    const int out_h = input.height() - 2;
    const int out_w = input.width() - 2;
    const int tiles_y = (out_h + 1) / 2;
    const int tiles_x = (out_w + 1) / 2;
    const int tiles = tiles_y * tiles_x;
    const std::size_t point_stride = static_cast<std::size_t>(in_channels_) * tiles;

    thread_local std::vector<float> v;
    v.resize(kPoints * point_stride);
    for (int c = 0; c < in_channels_; ++c) {
        const float* src = input.plane(c);
        for (int ty = 0; ty < tiles_y; ++ty) {
            for (int tx = 0; tx < tiles_x; ++tx) {
                float d[4][4];
                for (int i = 0; i < 4; ++i) {
                    const int y = 2 * ty + i;
                    for (int j = 0; j < 4; ++j) {
                        const int x = 2 * tx + j;
                        d[i][j] = (y < input.height() && x < input.width())
                                      ? src[static_cast<std::size_t>(y) * input.width() + x]
                                      : 0.0f;
                    }
                }
                // B^T d, B^T = [1 0 -1 0; 0 1 1 0; 0 -1 1 0; 0 1 0 -1]
                float t[4][4];
                for (int j = 0; j < 4; ++j) {
                    t[0][j] = d[0][j] - d[2][j];
                    t[1][j] = d[1][j] + d[2][j];
                    t[2][j] = d[2][j] - d[1][j];
                    t[3][j] = d[1][j] - d[3][j];
                }
                const std::size_t base = static_cast<std::size_t>(c) * tiles + ty * tiles_x + tx;
                for (int i = 0; i < 4; ++i) {
                    const float u[4] = {t[i][0] - t[i][2], t[i][1] + t[i][2], t[i][2] - t[i][1], t[i][1] - t[i][3]};
                    for (int j = 0; j < 4; ++j) v[(i * 4 + j) * point_stride + base] = u[j];
                }
            }
        }
    }

    const std::size_t out_stride = static_cast<std::size_t>(out_channels_) * tiles;
    const std::size_t kernel_stride = static_cast<std::size_t>(out_channels_) * in_channels_;
    thread_local std::vector<float> m;
    m.resize(kPoints * out_stride);
    for (int p = 0; p < kPoints; ++p) {
        Eigen::Map<const RowMatrix> u(kernel_transform_.data() + p * kernel_stride, out_channels_, in_channels_);
        Eigen::Map<const RowMatrix> x(v.data() + p * point_stride, in_channels_, tiles);
        Eigen::Map<RowMatrix> y(m.data() + p * out_stride, out_channels_, tiles);
        y.noalias() = u * x;
    }

    Tensor3<float> out(out_channels_, out_h, out_w);
    for (int o = 0; o < out_channels_; ++o) {
        float* dst = out.plane(o);
        const float b = bias_[static_cast<std::size_t>(o)];
        for (int ty = 0; ty < tiles_y; ++ty) {
            for (int tx = 0; tx < tiles_x; ++tx) {
                const std::size_t base = static_cast<std::size_t>(o) * tiles + ty * tiles_x + tx;
                float s[4][4];
                for (int p = 0; p < kPoints; ++p) s[p / 4][p % 4] = m[p * out_stride + base];
                // A^T s A, A^T = [1 1 1 0; 0 1 -1 -1]
                float t[2][4];
                for (int j = 0; j < 4; ++j) {
                    t[0][j] = s[0][j] + s[1][j] + s[2][j];
                    t[1][j] = s[1][j] - s[2][j] - s[3][j];
                }
                for (int i = 0; i < 2; ++i) {
                    const int y = 2 * ty + i;
                    if (y >= out_h) break;
                    const float r[2] = {t[i][0] + t[i][1] + t[i][2], t[i][1] - t[i][2] - t[i][3]};
                    for (int j = 0; j < 2; ++j) {
                        const int x = 2 * tx + j;
                        if (x < out_w) dst[static_cast<std::size_t>(y) * out_w + x] = r[j] + b;
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace evtrack::net::detail

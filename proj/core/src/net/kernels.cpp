#include "evtrack/net/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Core>

#include "evtrack/error.hpp"

namespace evtrack::net {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;

// Keep one im2col tile around 4 MiB so the GEMM operand stays cache resident.
constexpr std::size_t kTileBytes = std::size_t{4} << 20;

int tile_rows(int patch, int out_w, std::size_t elem) {
    const std::size_t per_row = static_cast<std::size_t>(patch) * out_w * elem;
    return std::max(1, static_cast<int>(kTileBytes / std::max<std::size_t>(per_row, 1)));
}

// Fills col (patch x rows*out_w) for output rows [oy0, oy0 + rows).
template <typename T>
void im2col_rows(const Tensor3<T>& in, int kernel, int stride, int out_w, int oy0, int rows, T* col) {
    const int width = in.width();
    const std::size_t cols = static_cast<std::size_t>(rows) * out_w;
    std::size_t r = 0;
    for (int c = 0; c < in.channels(); ++c) {
        const T* plane = in.plane(c);
        for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj, ++r) {
                T* dst = col + r * cols;
                for (int oy = 0; oy < rows; ++oy) {
                    const T* src = plane + static_cast<std::size_t>((oy0 + oy) * stride + ki) * width + kj;
                    if (stride == 1) {
                        std::copy(src, src + out_w, dst);
                    } else {
                        for (int ox = 0; ox < out_w; ++ox) dst[ox] = src[static_cast<std::size_t>(ox) * stride];
                    }
                    dst += out_w;
                }
            }
        }
    }
}

template <typename T>
void col2im_rows(const T* col, int kernel, int stride, int out_w, int oy0, int rows, Tensor3<T>& grad_in) {
    const int width = grad_in.width();
    const std::size_t cols = static_cast<std::size_t>(rows) * out_w;
    std::size_t r = 0;
    for (int c = 0; c < grad_in.channels(); ++c) {
        T* plane = grad_in.plane(c);
        for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj, ++r) {
                const T* src = col + r * cols;
                for (int oy = 0; oy < rows; ++oy) {
                    T* dst = plane + static_cast<std::size_t>((oy0 + oy) * stride + ki) * width + kj;
                    for (int ox = 0; ox < out_w; ++ox) dst[static_cast<std::size_t>(ox) * stride] += src[ox];
                    src += out_w;
                }
            }
        }
    }
}

// Event tensors leave most (channel, pixel) entries empty, so the first convolution is often
// cheaper as a gather over the non-zero inputs of each receptive field, with output channels
// innermost. A gathered multiply-add costs roughly this many GEMM multiply-adds.
constexpr double kSparseCost = 3.5;

// Non-zero input entries grouped by pixel (CSR over row-major pixels).
template <typename T>
struct SparsePixels {
    std::vector<std::uint32_t> offsets;
    std::vector<int> channel;
    std::vector<T> value;
};

template <typename T>
std::size_t count_nonzero(const Tensor3<T>& in) {
    return static_cast<std::size_t>(std::count_if(in.storage().begin(), in.storage().end(), [](T v) { return v != T{0}; }));
}

template <typename T>
double sparse_cost(const Tensor3<T>& in, int kernel, int stride, int out_channels) {
    const double taps = std::pow(static_cast<double>(kernel) / stride, 2.0);
    return static_cast<double>(count_nonzero(in)) * taps * out_channels * kSparseCost;
}

template <typename T>
bool prefer_sparse(const Tensor3<T>& in, int kernel, int stride, int out_channels, int out_h, int out_w) {
    const double dense = static_cast<double>(out_channels) * in.channels() * kernel * kernel * out_h * out_w;
    return sparse_cost(in, kernel, stride, out_channels) < dense;
}

template <typename T>
SparsePixels<T> sparse_pixels(const Tensor3<T>& in) {
    const std::size_t pixels = in.plane_size();
    SparsePixels<T> sp;
    sp.offsets.assign(pixels + 1, 0);
    for (int c = 0; c < in.channels(); ++c) {
        const T* plane = in.plane(c);
        for (std::size_t i = 0; i < pixels; ++i) sp.offsets[i + 1] += plane[i] != T{0} ? 1 : 0;
    }
    for (std::size_t i = 0; i < pixels; ++i) sp.offsets[i + 1] += sp.offsets[i];
    sp.channel.resize(sp.offsets.back());
    sp.value.resize(sp.offsets.back());
    std::vector<std::uint32_t> fill(sp.offsets.begin(), sp.offsets.end() - 1);
    for (int c = 0; c < in.channels(); ++c) {
        const T* plane = in.plane(c);
        for (std::size_t i = 0; i < pixels; ++i) {
            if (plane[i] == T{0}) continue;
            sp.channel[fill[i]] = c;
            sp.value[fill[i]++] = plane[i];
        }
    }
    return sp;
}

// (out, in, k, k) -> (k, k, in, out): the rows of one kernel tap are contiguous and output
// channels are innermost.
template <typename T>
std::vector<T> tap_major(std::span<const T> weight, int out_channels, int in_channels, int kernel) {
    std::vector<T> t(weight.size());
    std::size_t src = 0;
    for (int o = 0; o < out_channels; ++o) {
        for (int c = 0; c < in_channels; ++c) {
            for (int ki = 0; ki < kernel; ++ki) {
                for (int kj = 0; kj < kernel; ++kj, ++src) {
                    t[((static_cast<std::size_t>(ki) * kernel + kj) * in_channels + c) * out_channels + o] = weight[src];
                }
            }
        }
    }
    return t;
}

// Accumulates one output pixel for output channels [o0, o0 + N) over its receptive field.
template <int N, typename T>
void gather_block(const SparsePixels<T>& sp, const T* wt, int out_channels, int in_channels, int kernel,
                  std::size_t origin, int width, int o0, T* dst) {
    using Block = Eigen::Array<T, N, 1>;
    Block acc = Block::Zero();
    for (int ki = 0; ki < kernel; ++ki) {
        const std::size_t row = origin + static_cast<std::size_t>(ki) * width;
        for (int kj = 0; kj < kernel; ++kj) {
            const T* tap = wt + static_cast<std::size_t>(ki * kernel + kj) * in_channels * out_channels + o0;
            for (std::uint32_t e = sp.offsets[row + kj]; e < sp.offsets[row + kj + 1]; ++e) {
                const T* w = tap + static_cast<std::size_t>(sp.channel[e]) * out_channels;
                acc += sp.value[e] * Eigen::Map<const Block>(w);
            }
        }
    }
    Eigen::Map<Block> out(dst);
    out = acc;
}

template <typename T>
void gather_tail(const SparsePixels<T>& sp, const T* wt, int out_channels, int in_channels, int kernel,
                 std::size_t origin, int width, int o0, T* dst) {
    for (int o = o0; o < out_channels; ++o) dst[o - o0] = T{0};
    for (int ki = 0; ki < kernel; ++ki) {
        const std::size_t row = origin + static_cast<std::size_t>(ki) * width;
        for (int kj = 0; kj < kernel; ++kj) {
            const T* tap = wt + static_cast<std::size_t>(ki * kernel + kj) * in_channels * out_channels;
            for (std::uint32_t e = sp.offsets[row + kj]; e < sp.offsets[row + kj + 1]; ++e) {
                const T* w = tap + static_cast<std::size_t>(sp.channel[e]) * out_channels;
                for (int o = o0; o < out_channels; ++o) dst[o - o0] += sp.value[e] * w[o];
            }
        }
    }
}

template <typename T>
void sparse_forward(const Tensor3<T>& input, std::span<const T> weight, int out_channels, int kernel, int stride,
                    Tensor3<T>& out) {
    constexpr int kBlock = 64 / sizeof(T) * 6;
    const int width = input.width();
    const std::vector<T> wt = tap_major(weight, out_channels, input.channels(), kernel);
    const SparsePixels<T> sp = sparse_pixels(input);
    std::vector<T> acc(static_cast<std::size_t>(out_channels));
    for (int oy = 0; oy < out.height(); ++oy) {
        for (int ox = 0; ox < out.width(); ++ox) {
            const std::size_t origin = static_cast<std::size_t>(oy * stride) * width + static_cast<std::size_t>(ox) * stride;
            int o0 = 0;
            for (; o0 + kBlock <= out_channels; o0 += kBlock) {
                gather_block<kBlock>(sp, wt.data(), out_channels, input.channels(), kernel, origin, width, o0, acc.data() + o0);
            }
            if (o0 < out_channels) gather_tail(sp, wt.data(), out_channels, input.channels(), kernel, origin, width, o0, acc.data() + o0);
            const std::size_t idx = static_cast<std::size_t>(oy) * out.width() + ox;
            for (int o = 0; o < out_channels; ++o) out.plane(o)[idx] = acc[static_cast<std::size_t>(o)];
        }
    }
}

template <typename T>
void sparse_weight_gradient(const Tensor3<T>& input, const Tensor3<T>& grad_output, int kernel, int stride,
                            std::span<T> grad_weight) {
    const int out_channels = grad_output.channels();
    const int patch = input.channels() * kernel * kernel;
    const int width = input.width();
    const SparsePixels<T> sp = sparse_pixels(input);
    std::vector<T> dwt(static_cast<std::size_t>(patch) * out_channels, T{0});
    std::vector<T> g(static_cast<std::size_t>(out_channels));
    for (int oy = 0; oy < grad_output.height(); ++oy) {
        for (int ox = 0; ox < grad_output.width(); ++ox) {
            const std::size_t idx = static_cast<std::size_t>(oy) * grad_output.width() + ox;
            for (int o = 0; o < out_channels; ++o) g[static_cast<std::size_t>(o)] = grad_output.plane(o)[idx];
            const T* __restrict gp = g.data();
            for (int ki = 0; ki < kernel; ++ki) {
                const std::size_t row = static_cast<std::size_t>(oy * stride + ki) * width + static_cast<std::size_t>(ox) * stride;
                for (int kj = 0; kj < kernel; ++kj) {
                    for (std::uint32_t e = sp.offsets[row + kj]; e < sp.offsets[row + kj + 1]; ++e) {
                        const T v = sp.value[e];
                        T* __restrict d = dwt.data() +
                                          ((static_cast<std::size_t>(ki) * kernel + kj) * input.channels() + sp.channel[e]) * out_channels;
                        for (int o = 0; o < out_channels; ++o) d[o] += v * gp[o];
                    }
                }
            }
        }
    }
    std::size_t dst = 0;
    for (int o = 0; o < out_channels; ++o) {
        for (int c = 0; c < input.channels(); ++c) {
            for (int ki = 0; ki < kernel; ++ki) {
                for (int kj = 0; kj < kernel; ++kj, ++dst) {
                    grad_weight[dst] += dwt[((static_cast<std::size_t>(ki) * kernel + kj) * input.channels() + c) * out_channels + o];
                }
            }
        }
    }
}

template <typename T>
void gemm_forward(const Tensor3<T>& input, std::span<const T> weight, int out_channels, int kernel, int stride,
                  Tensor3<T>& out) {
    const int patch = input.channels() * kernel * kernel;
    const int out_h = out.height();
    const int out_w = out.width();
    const std::size_t plane = out.plane_size();
    ConstMatrixMap<T> w(weight.data(), out_channels, patch);

    const int step = tile_rows(patch, out_w, sizeof(T));
    thread_local std::vector<T> col;
    col.resize(static_cast<std::size_t>(patch) * std::min(step, out_h) * out_w);
    for (int oy0 = 0; oy0 < out_h; oy0 += step) {
        const int rows = std::min(step, out_h - oy0);
        const int ncols = rows * out_w;
        im2col_rows(input, kernel, stride, out_w, oy0, rows, col.data());
        ConstMatrixMap<T> cols(col.data(), patch, ncols);
        StridedMap<T> y(out.plane(0) + static_cast<std::size_t>(oy0) * out_w, out_channels, ncols,
                        Eigen::OuterStride<>(static_cast<Eigen::Index>(plane)));
        y.noalias() = w * cols;
    }
}

}  // namespace

int valid_extent(int input, int kernel, int stride) {
    if (kernel < 1 || stride < 1) throw ShapeError("kernel and stride must be positive");
    if (input < kernel) return 0;
    return (input - kernel) / stride + 1;
}

template <typename T>
double conv2d_forward_cost(const Tensor3<T>& input, int out_channels, int kernel, int stride) {
    const int out_h = valid_extent(input.height(), kernel, stride);
    const int out_w = valid_extent(input.width(), kernel, stride);
    const double dense = static_cast<double>(out_channels) * input.channels() * kernel * kernel * out_h * out_w;
    return std::min(dense, sparse_cost(input, kernel, stride, out_channels));
}

template <typename T>
Tensor3<T> conv2d_forward(const Tensor3<T>& input, std::span<const T> weight, std::span<const T> bias,
                          int out_channels, int kernel, int stride) {
    const int patch = input.channels() * kernel * kernel;
    if (weight.size() != static_cast<std::size_t>(out_channels) * patch) {
        throw ShapeError("conv weight does not match input channels");
    }
    if (bias.size() != static_cast<std::size_t>(out_channels)) throw ShapeError("conv bias size mismatch");
    const int out_h = valid_extent(input.height(), kernel, stride);
    const int out_w = valid_extent(input.width(), kernel, stride);
    if (out_h < 1 || out_w < 1) {
        throw ShapeError("input " + std::to_string(input.height()) + "x" + std::to_string(input.width()) +
                         " is smaller than the " + std::to_string(kernel) + "x" + std::to_string(kernel) + " kernel");
    }
    Tensor3<T> out(out_channels, out_h, out_w);
    const std::size_t plane = out.plane_size();
    if (prefer_sparse(input, kernel, stride, out_channels, out_h, out_w)) {
        sparse_forward(input, weight, out_channels, kernel, stride, out);
    } else {
        gemm_forward(input, weight, out_channels, kernel, stride, out);
    }
    for (int o = 0; o < out_channels; ++o) {
        T* p = out.plane(o);
        const T b = bias[static_cast<std::size_t>(o)];
        for (std::size_t i = 0; i < plane; ++i) p[i] += b;
    }
    return out;
}

template <typename T>
void conv2d_backward(const Tensor3<T>& input, std::span<const T> weight, const Tensor3<T>& grad_output,
                     int kernel, int stride, std::span<T> grad_weight, std::span<T> grad_bias,
                     Tensor3<T>* grad_input) {
    const int out_channels = grad_output.channels();
    const int patch = input.channels() * kernel * kernel;
    const int out_h = grad_output.height();
    const int out_w = grad_output.width();
    if (out_h != valid_extent(input.height(), kernel, stride) || out_w != valid_extent(input.width(), kernel, stride)) {
        throw ShapeError("conv gradient shape does not match the forward input");
    }
    if (grad_weight.size() != weight.size() || grad_bias.size() != static_cast<std::size_t>(out_channels)) {
        throw ShapeError("conv gradient buffers have the wrong size");
    }
    const std::size_t plane = grad_output.plane_size();
    for (int o = 0; o < out_channels; ++o) {
        const T* g = grad_output.plane(o);
        T sum = T{0};
        for (std::size_t i = 0; i < plane; ++i) sum += g[i];
        grad_bias[static_cast<std::size_t>(o)] += sum;
    }
    if (grad_input == nullptr && prefer_sparse(input, kernel, stride, out_channels, out_h, out_w)) {
        sparse_weight_gradient(input, grad_output, kernel, stride, grad_weight);
        return;
    }
    if (grad_input != nullptr) *grad_input = Tensor3<T>(input.channels(), input.height(), input.width());

    ConstMatrixMap<T> w(weight.data(), out_channels, patch);
    MatrixMap<T> dw(grad_weight.data(), out_channels, patch);
    const int step = tile_rows(patch, out_w, sizeof(T));
    thread_local std::vector<T> col;
    thread_local std::vector<T> dcol;
    col.resize(static_cast<std::size_t>(patch) * std::min(step, out_h) * out_w);
    if (grad_input != nullptr) dcol.resize(col.size());
    for (int oy0 = 0; oy0 < out_h; oy0 += step) {
        const int rows = std::min(step, out_h - oy0);
        const int ncols = rows * out_w;
        ConstStridedMap<T> dy(grad_output.plane(0) + static_cast<std::size_t>(oy0) * out_w, out_channels, ncols,
                              Eigen::OuterStride<>(static_cast<Eigen::Index>(plane)));
        im2col_rows(input, kernel, stride, out_w, oy0, rows, col.data());
        ConstMatrixMap<T> cols(col.data(), patch, ncols);
        dw.noalias() += dy * cols.transpose();
        if (grad_input != nullptr) {
            MatrixMap<T> dc(dcol.data(), patch, ncols);
            dc.noalias() = w.transpose() * dy;
            col2im_rows(dcol.data(), kernel, stride, out_w, oy0, rows, *grad_input);
        }
    }
}

template <typename T>
Tensor3<T> maxpool_forward(const Tensor3<T>& input, int kernel, int stride, std::vector<int>* argmax) {
    const int out_h = valid_extent(input.height(), kernel, stride);
    const int out_w = valid_extent(input.width(), kernel, stride);
    if (out_h < 1 || out_w < 1) throw ShapeError("input is smaller than the pooling window");
    Tensor3<T> out(input.channels(), out_h, out_w);
    if (argmax != nullptr) argmax->assign(out.size(), 0);
    const int width = input.width();
    std::size_t o = 0;
    for (int c = 0; c < input.channels(); ++c) {
        const T* plane = input.plane(c);
        const int base = c * input.height() * width;
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox, ++o) {
                int best = (oy * stride) * width + ox * stride;
                T best_value = plane[best];
                for (int ki = 0; ki < kernel; ++ki) {
                    for (int kj = 0; kj < kernel; ++kj) {
                        const int idx = (oy * stride + ki) * width + ox * stride + kj;
                        if (plane[idx] > best_value) {
                            best_value = plane[idx];
                            best = idx;
                        }
                    }
                }
                out.storage()[o] = best_value;
                if (argmax != nullptr) (*argmax)[o] = base + best;
            }
        }
    }
    return out;
}

template <typename T>
Tensor3<T> maxpool_backward(const Tensor3<T>& grad_output, const std::vector<int>& argmax,
                            int in_channels, int in_height, int in_width) {
    if (argmax.size() != grad_output.size()) throw ShapeError("pool argmax does not match gradient");
    Tensor3<T> grad(in_channels, in_height, in_width);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        grad.storage()[static_cast<std::size_t>(argmax[i])] += grad_output.storage()[i];
    }
    return grad;
}

template <typename T>
void relu_inplace(Tensor3<T>& t) {
    for (T& v : t.storage()) v = v > T{0} ? v : T{0};
}

template <typename T>
Tensor3<T> relu_backward(const Tensor3<T>& output, const Tensor3<T>& grad_output) {
    if (!output.same_shape(grad_output)) throw ShapeError("relu gradient shape mismatch");
    Tensor3<T> grad(output.channels(), output.height(), output.width());
    for (std::size_t i = 0; i < output.size(); ++i) {
        grad.storage()[i] = output.storage()[i] > T{0} ? grad_output.storage()[i] : T{0};
    }
    return grad;
}

template <typename T>
Tensor3<T> batchnorm_train_forward(const Tensor3<T>& input, std::span<const T> gamma,
                                   std::span<const T> beta, T epsilon, BatchNormCache<T>& cache,
                                   std::vector<T>& batch_mean, std::vector<T>& batch_var) {
    const int channels = input.channels();
    if (gamma.size() != static_cast<std::size_t>(channels) || beta.size() != gamma.size()) {
        throw ShapeError("batch norm parameters do not match channel count");
    }
    const std::size_t n = input.plane_size();
    Tensor3<T> out(channels, input.height(), input.width());
    cache.normalized = Tensor3<T>(channels, input.height(), input.width());
    cache.inv_std.assign(static_cast<std::size_t>(channels), T{0});
    batch_mean.assign(static_cast<std::size_t>(channels), T{0});
    batch_var.assign(static_cast<std::size_t>(channels), T{0});
    for (int c = 0; c < channels; ++c) {
        const T* x = input.plane(c);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += x[i];
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x[i] - mean;
            sq += d * d;
        }
        const double var = sq / static_cast<double>(n);
        const T inv_std = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(epsilon)));
        const auto cs = static_cast<std::size_t>(c);
        batch_mean[cs] = static_cast<T>(mean);
        batch_var[cs] = static_cast<T>(var);
        cache.inv_std[cs] = inv_std;
        T* xhat = cache.normalized.plane(c);
        T* y = out.plane(c);
        const T m = static_cast<T>(mean);
        for (std::size_t i = 0; i < n; ++i) {
            xhat[i] = (x[i] - m) * inv_std;
            y[i] = gamma[cs] * xhat[i] + beta[cs];
        }
    }
    return out;
}

template <typename T>
Tensor3<T> batchnorm_eval_forward(const Tensor3<T>& input, std::span<const T> gamma,
                                  std::span<const T> beta, std::span<const T> running_mean,
                                  std::span<const T> running_var, T epsilon) {
    const int channels = input.channels();
    if (gamma.size() != static_cast<std::size_t>(channels)) throw ShapeError("batch norm parameters do not match channel count");
    const std::size_t n = input.plane_size();
    Tensor3<T> out(channels, input.height(), input.width());
    for (int c = 0; c < channels; ++c) {
        const auto cs = static_cast<std::size_t>(c);
        const T scale = gamma[cs] / std::sqrt(running_var[cs] + epsilon);
        const T shift = beta[cs] - running_mean[cs] * scale;
        const T* x = input.plane(c);
        T* y = out.plane(c);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * scale + shift;
    }
    return out;
}

template <typename T>
Tensor3<T> batchnorm_backward(const BatchNormCache<T>& cache, std::span<const T> gamma,
                              const Tensor3<T>& grad_output, std::span<T> grad_gamma,
                              std::span<T> grad_beta) {
    const Tensor3<T>& xhat = cache.normalized;
    if (!xhat.same_shape(grad_output)) throw ShapeError("batch norm gradient shape mismatch");
    const std::size_t n = xhat.plane_size();
    Tensor3<T> grad(xhat.channels(), xhat.height(), xhat.width());
    for (int c = 0; c < xhat.channels(); ++c) {
        const auto cs = static_cast<std::size_t>(c);
        const T* dy = grad_output.plane(c);
        const T* xh = xhat.plane(c);
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum_dy += dy[i];
            sum_dy_xhat += static_cast<double>(dy[i]) * xh[i];
        }
        grad_gamma[cs] += static_cast<T>(sum_dy_xhat);
        grad_beta[cs] += static_cast<T>(sum_dy);
        const T k = gamma[cs] * cache.inv_std[cs] / static_cast<T>(n);
        const T mean_dy = static_cast<T>(sum_dy);
        const T mean_dy_xhat = static_cast<T>(sum_dy_xhat);
        T* dx = grad.plane(c);
        for (std::size_t i = 0; i < n; ++i) {
            dx[i] = k * (static_cast<T>(n) * dy[i] - mean_dy - xh[i] * mean_dy_xhat);
        }
    }
    return grad;
}

#define EVTRACK_INSTANTIATE_KERNELS(T)                                                                        \
    template Tensor3<T> conv2d_forward<T>(const Tensor3<T>&, std::span<const T>, std::span<const T>, int, int, \
                                          int);                                                               \
    template double conv2d_forward_cost<T>(const Tensor3<T>&, int, int, int);                                 \
    template void conv2d_backward<T>(const Tensor3<T>&, std::span<const T>, const Tensor3<T>&, int, int,      \
                                     std::span<T>, std::span<T>, Tensor3<T>*);                                \
    template Tensor3<T> maxpool_forward<T>(const Tensor3<T>&, int, int, std::vector<int>*);                   \
    template Tensor3<T> maxpool_backward<T>(const Tensor3<T>&, const std::vector<int>&, int, int, int);       \
    template void relu_inplace<T>(Tensor3<T>&);                                                               \
    template Tensor3<T> relu_backward<T>(const Tensor3<T>&, const Tensor3<T>&);                               \
    template Tensor3<T> batchnorm_train_forward<T>(const Tensor3<T>&, std::span<const T>, std::span<const T>, \
                                                   T, BatchNormCache<T>&, std::vector<T>&, std::vector<T>&);  \
    template Tensor3<T> batchnorm_eval_forward<T>(const Tensor3<T>&, std::span<const T>, std::span<const T>,  \
                                                  std::span<const T>, std::span<const T>, T);                 \
    template Tensor3<T> batchnorm_backward<T>(const BatchNormCache<T>&, std::span<const T>,                   \
                                              const Tensor3<T>&, std::span<T>, std::span<T>);

EVTRACK_INSTANTIATE_KERNELS(float)
EVTRACK_INSTANTIATE_KERNELS(double)

}  // namespace evtrack::net

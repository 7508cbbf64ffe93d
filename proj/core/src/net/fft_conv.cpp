#include "net/fft_conv.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include <Eigen/Core>

#include "evtrack/error.hpp"

namespace evtrack::net::detail {

namespace {

using Complex = std::complex<float>;
using ComplexMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// FFTW planning is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

constexpr double kComplexCost = 4.0 * 1.5;
// Measured throughput per estimated unit relative to the im2col GEMM path.
constexpr double kThroughputPenalty = 2.4;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

fftwf_complex* as_fftw(Complex* p) { return reinterpret_cast<fftwf_complex*>(p); }

// dst (cols x rows) = src (rows x cols)^T, both row-major.
void transpose(const Complex* src, Complex* dst, std::size_t rows, std::size_t cols) {
    constexpr std::size_t kBlock = 16;
    for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
        const std::size_t r1 = std::min(rows, r0 + kBlock);
        for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
            const std::size_t c1 = std::min(cols, c0 + kBlock);
            for (std::size_t r = r0; r < r1; ++r) {
                for (std::size_t c = c0; c < c1; ++c) dst[c * rows + r] = src[r * cols + c];
            }
        }
    }
}

}  // namespace

std::size_t FftConv::spectrum_bytes(int out_channels, int in_channels, int kernel, int stride, int tile) {
    (void)kernel;
    const std::size_t bins = static_cast<std::size_t>(tile) * (tile / 2 + 1);
    return bins * out_channels * in_channels * stride * stride * sizeof(Complex);
}

double FftConv::cost(int out_channels, int in_channels, int kernel, int stride, int tile, int height, int width) {
    const int kp = ceil_div(kernel, stride);
    const int valid = tile - kp + 1;
    if (valid < 1) return std::numeric_limits<double>::infinity();
    const int out_h = (height - kernel) / stride + 1;
    const int out_w = (width - kernel) / stride + 1;
    const double tiles = static_cast<double>(ceil_div(out_h, valid)) * ceil_div(out_w, valid);
    const double bins = static_cast<double>(tile) * (tile / 2 + 1);
    const double phases = static_cast<double>(in_channels) * stride * stride;
    const double pointwise = bins * out_channels * phases * tiles * kComplexCost;
    const double transforms = (phases + out_channels) * tiles * tile * tile * std::log2(static_cast<double>(tile)) * 3.0;
    return (pointwise + transforms) * kThroughputPenalty;
}

FftConv::FftConv(std::span<const float> weight, std::span<const float> bias, int out_channels, int in_channels,
                 int kernel, int stride, int tile)
    : out_channels_(out_channels),
      in_channels_(in_channels),
      kernel_(kernel),
      stride_(stride),
      phase_kernel_(ceil_div(kernel, stride)),
      tile_(tile),
      valid_(tile - ceil_div(kernel, stride) + 1),
      bins_(tile * (tile / 2 + 1)),
      phases_(in_channels * stride * stride),
      bias_(bias.begin(), bias.end()) {
    if (valid_ < 1) throw InvalidArgument("FFT tile smaller than the kernel");
    if (weight.size() != static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel) {
        throw ShapeError("FFT convolution weight size mismatch");
    }
    std::vector<float> real(static_cast<std::size_t>(tile) * tile);
    std::vector<Complex> spectrum(static_cast<std::size_t>(bins_));
    {
        std::lock_guard lock(planner_mutex());
        forward_plan_ = fftwf_plan_dft_r2c_2d(tile, tile, real.data(), as_fftw(spectrum.data()),
                                              FFTW_ESTIMATE | FFTW_UNALIGNED);
        inverse_plan_ = fftwf_plan_dft_c2r_2d(tile, tile, as_fftw(spectrum.data()), real.data(),
                                              FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (forward_plan_ == nullptr || inverse_plan_ == nullptr) throw Error("FFT planning failed");

    kernel_spectra_.assign(static_cast<std::size_t>(bins_) * out_channels_ * phases_, Complex{});
    for (int o = 0; o < out_channels_; ++o) {
        for (int c = 0; c < in_channels_; ++c) {
            for (int p = 0; p < stride_; ++p) {
                for (int q = 0; q < stride_; ++q) {
                    std::fill(real.begin(), real.end(), 0.0f);
                    for (int a = 0; a * stride_ + p < kernel_; ++a) {
                        for (int b = 0; b * stride_ + q < kernel_; ++b) {
                            real[static_cast<std::size_t>(a) * tile_ + b] =
                                weight[((static_cast<std::size_t>(o) * in_channels_ + c) * kernel_ + a * stride_ + p) * kernel_ +
                                       b * stride_ + q];
                        }
                    }
                    fftwf_execute_dft_r2c(static_cast<fftwf_plan>(forward_plan_), real.data(), as_fftw(spectrum.data()));
                    const int phase = (c * stride_ + p) * stride_ + q;
                    for (int f = 0; f < bins_; ++f) {
                        kernel_spectra_[(static_cast<std::size_t>(f) * out_channels_ + o) * phases_ + phase] =
                            std::conj(spectrum[static_cast<std::size_t>(f)]);
                    }
                }
            }
        }
    }
}

FftConv::~FftConv() {
    std::lock_guard lock(planner_mutex());
    if (forward_plan_ != nullptr) fftwf_destroy_plan(static_cast<fftwf_plan>(forward_plan_));
    if (inverse_plan_ != nullptr) fftwf_destroy_plan(static_cast<fftwf_plan>(inverse_plan_));
}

Tensor3<float> FftConv::forward(const Tensor3<float>& input) const {
    if (input.channels() != in_channels_) throw ShapeError("FFT convolution input channel mismatch");
    if (input.height() < kernel_ || input.width() < kernel_) throw ShapeError("input is smaller than the kernel");
    const int out_h = (input.height() - kernel_) / stride_ + 1;
    const int out_w = (input.width() - kernel_) / stride_ + 1;
    const int tiles_y = ceil_div(out_h, valid_);
    const int tiles_x = ceil_div(out_w, valid_);
    const int tiles = tiles_y * tiles_x;
    const std::size_t n = static_cast<std::size_t>(tile_) * tile_;

    // Per-thread workspaces persist across calls so large buffers are not faulted in each time.
    thread_local std::vector<float> real;
    real.resize(n);
    const std::size_t bins = static_cast<std::size_t>(bins_);
    thread_local std::vector<Complex> staging;
    staging.resize(bins * phases_ * tiles);
    for (int c = 0; c < in_channels_; ++c) {
        const float* plane = input.plane(c);
        for (int p = 0; p < stride_; ++p) {
            for (int q = 0; q < stride_; ++q) {
                const int phase = (c * stride_ + p) * stride_ + q;
                const int ph = ceil_div(input.height() - p, stride_);
                const int pw = ceil_div(input.width() - q, stride_);
                for (int ty = 0; ty < tiles_y; ++ty) {
                    for (int tx = 0; tx < tiles_x; ++tx) {
                        std::fill(real.begin(), real.end(), 0.0f);
                        const int y0 = ty * valid_;
                        const int x0 = tx * valid_;
                        for (int a = 0; a < tile_ && y0 + a < ph; ++a) {
                            const float* row = plane + static_cast<std::size_t>((y0 + a) * stride_ + p) * input.width();
                            for (int b = 0; b < tile_ && x0 + b < pw; ++b) {
                                real[static_cast<std::size_t>(a) * tile_ + b] = row[(x0 + b) * stride_ + q];
                            }
                        }
                        const std::size_t slot = static_cast<std::size_t>(phase) * tiles + ty * tiles_x + tx;
                        fftwf_execute_dft_r2c(static_cast<fftwf_plan>(forward_plan_), real.data(),
                                              as_fftw(staging.data() + slot * bins));
                    }
                }
            }
        }
    }

    thread_local std::vector<Complex> xs;
    xs.resize(staging.size());
    transpose(staging.data(), xs.data(), static_cast<std::size_t>(phases_) * tiles, bins);
    thread_local std::vector<Complex> ys;
    ys.resize(bins * out_channels_ * tiles);
    for (int f = 0; f < bins_; ++f) {
        Eigen::Map<const ComplexMatrix> k(kernel_spectra_.data() + static_cast<std::size_t>(f) * out_channels_ * phases_,
                                          out_channels_, phases_);
        Eigen::Map<const ComplexMatrix> x(xs.data() + static_cast<std::size_t>(f) * phases_ * tiles, phases_, tiles);
        Eigen::Map<ComplexMatrix> y(ys.data() + static_cast<std::size_t>(f) * out_channels_ * tiles, out_channels_, tiles);
        y.noalias() = k * x;
    }

    thread_local std::vector<Complex> ys_by_tile;
    ys_by_tile.resize(ys.size());
    transpose(ys.data(), ys_by_tile.data(), bins, static_cast<std::size_t>(out_channels_) * tiles);
    Tensor3<float> out(out_channels_, out_h, out_w);
    const float scale = 1.0f / static_cast<float>(n);
    for (int o = 0; o < out_channels_; ++o) {
        float* dst = out.plane(o);
        const float b = bias_[static_cast<std::size_t>(o)];
        for (int t = 0; t < tiles; ++t) {
            Complex* spectrum = ys_by_tile.data() + (static_cast<std::size_t>(o) * tiles + t) * bins;
            fftwf_execute_dft_c2r(static_cast<fftwf_plan>(inverse_plan_), as_fftw(spectrum), real.data());
            const int y0 = (t / tiles_x) * valid_;
            const int x0 = (t % tiles_x) * valid_;
            for (int a = 0; a < valid_ && y0 + a < out_h; ++a) {
                for (int bx = 0; bx < valid_ && x0 + bx < out_w; ++bx) {
                    dst[static_cast<std::size_t>(y0 + a) * out_w + x0 + bx] = real[static_cast<std::size_t>(a) * tile_ + bx] * scale + b;
                }
            }
        }
    }
    return out;
}

}  // namespace evtrack::net::detail

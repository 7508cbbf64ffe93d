#pragma once

#include <span>
#include <vector>

#include "evtrack/tensor.hpp"

namespace evtrack::net {

/// Output extent of a valid (unpadded) sliding window.
int valid_extent(int input, int kernel, int stride);

/// Unpadded 2-D convolution (cross-correlation, as in every CNN framework).
/// weight is (out, in, k, k) row-major; bias has `out` entries.
template <typename T>
Tensor3<T> conv2d_forward(const Tensor3<T>& input, std::span<const T> weight, std::span<const T> bias,
                          int out_channels, int kernel, int stride);

/// Estimated cost of conv2d_forward on `input` in GEMM multiply-add units: the cheaper of the
/// dense im2col path and the sparse gather path taken for mostly-zero inputs.
template <typename T>
double conv2d_forward_cost(const Tensor3<T>& input, int out_channels, int kernel, int stride);

/// Accumulates dW and db; writes dX when grad_input is non-null.
template <typename T>
void conv2d_backward(const Tensor3<T>& input, std::span<const T> weight, const Tensor3<T>& grad_output,
                     int kernel, int stride, std::span<T> grad_weight, std::span<T> grad_bias,
                     Tensor3<T>* grad_input);

/// Max pooling without padding; records the flat input index of each winner (first maximum
/// in row-major window order).
template <typename T>
Tensor3<T> maxpool_forward(const Tensor3<T>& input, int kernel, int stride, std::vector<int>* argmax);

template <typename T>
Tensor3<T> maxpool_backward(const Tensor3<T>& grad_output, const std::vector<int>& argmax,
                            int in_channels, int in_height, int in_width);

template <typename T>
void relu_inplace(Tensor3<T>& t);

/// dX = dY where the forward output was positive.
template <typename T>
Tensor3<T> relu_backward(const Tensor3<T>& output, const Tensor3<T>& grad_output);

/// Per-channel statistics over spatial positions.
template <typename T>
struct BatchNormCache {
    Tensor3<T> normalized;     ///< x-hat
    std::vector<T> inv_std;    ///< 1 / sqrt(var + eps)
};

/// Training-mode batch norm with statistics over the spatial positions of a single sample.
/// Returns the biased batch mean/variance through batch_mean / batch_var.
template <typename T>
Tensor3<T> batchnorm_train_forward(const Tensor3<T>& input, std::span<const T> gamma,
                                   std::span<const T> beta, T epsilon, BatchNormCache<T>& cache,
                                   std::vector<T>& batch_mean, std::vector<T>& batch_var);

template <typename T>
Tensor3<T> batchnorm_eval_forward(const Tensor3<T>& input, std::span<const T> gamma,
                                  std::span<const T> beta, std::span<const T> running_mean,
                                  std::span<const T> running_var, T epsilon);

/// Accumulates dgamma/dbeta and returns dX.
template <typename T>
Tensor3<T> batchnorm_backward(const BatchNormCache<T>& cache, std::span<const T> gamma,
                              const Tensor3<T>& grad_output, std::span<T> grad_gamma,
                              std::span<T> grad_beta);

}  // namespace evtrack::net

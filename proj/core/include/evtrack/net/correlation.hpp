#pragma once

#include "evtrack/tensor.hpp"

namespace evtrack::net {

/// Valid cross-correlation of an exemplar feature map over a search feature map:
/// P[u, v] = sum_c sum_{i,j} exemplar[c, i, j] * search[c, u + i, v + j].
/// Throws ShapeError on channel mismatch or when the exemplar is larger than the search map.
template <typename T>
Grid2<T> cross_correlate(const Tensor3<T>& exemplar, const Tensor3<T>& search);

/// Gradients of cross_correlate with respect to both inputs.
template <typename T>
void cross_correlate_backward(const Tensor3<T>& exemplar, const Tensor3<T>& search, const Grid2<T>& grad_scores,
                              Tensor3<T>& grad_exemplar, Tensor3<T>& grad_search);

}  // namespace evtrack::net

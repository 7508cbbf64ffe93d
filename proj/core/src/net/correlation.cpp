#include "evtrack/net/correlation.hpp"

#include <string>

#include "evtrack/error.hpp"

namespace evtrack::net {
namespace {

template <typename T>
void check_shapes(const Tensor3<T>& exemplar, const Tensor3<T>& search) {
    if (exemplar.channels() != search.channels()) {
        throw ShapeError("correlation channel mismatch: " + std::to_string(exemplar.channels()) + " vs " +
                         std::to_string(search.channels()));
    }
    if (exemplar.height() > search.height() || exemplar.width() > search.width()) {
        throw ShapeError("exemplar feature map is larger than the search feature map");
    }
}

}  // namespace

template <typename T>
Grid2<T> cross_correlate(const Tensor3<T>& exemplar, const Tensor3<T>& search) {
    check_shapes(exemplar, search);
    const int kh = exemplar.height();
    const int kw = exemplar.width();
    const int out_h = search.height() - kh + 1;
    const int out_w = search.width() - kw + 1;
    Grid2<T> scores(out_h, out_w);
    const int sw = search.width();
    for (int c = 0; c < exemplar.channels(); ++c) {
        const T* z = exemplar.plane(c);
        const T* x = search.plane(c);
        for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
                const T zv = z[i * kw + j];
                for (int u = 0; u < out_h; ++u) {
                    const T* row = x + static_cast<std::size_t>(u + i) * sw + j;
                    T* out = &scores(u, 0);
                    for (int v = 0; v < out_w; ++v) out[v] += zv * row[v];
                }
            }
        }
    }
    return scores;
}

template <typename T>
void cross_correlate_backward(const Tensor3<T>& exemplar, const Tensor3<T>& search, const Grid2<T>& grad_scores,
                              Tensor3<T>& grad_exemplar, Tensor3<T>& grad_search) {
    check_shapes(exemplar, search);
    const int kh = exemplar.height();
    const int kw = exemplar.width();
    const int out_h = search.height() - kh + 1;
    const int out_w = search.width() - kw + 1;
    if (grad_scores.height() != out_h || grad_scores.width() != out_w) throw ShapeError("score gradient shape mismatch");
    grad_exemplar = Tensor3<T>(exemplar.channels(), kh, kw);
    grad_search = Tensor3<T>(search.channels(), search.height(), search.width());
    const int sw = search.width();
    for (int c = 0; c < exemplar.channels(); ++c) {
        const T* z = exemplar.plane(c);
        const T* x = search.plane(c);
        T* gz = grad_exemplar.plane(c);
        T* gx = grad_search.plane(c);
        for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
                const T zv = z[i * kw + j];
                T acc = T{0};
                for (int u = 0; u < out_h; ++u) {
                    const std::size_t off = static_cast<std::size_t>(u + i) * sw + j;
                    const T* g = &grad_scores(u, 0);
                    for (int v = 0; v < out_w; ++v) {
                        acc += g[v] * x[off + v];
                        gx[off + v] += g[v] * zv;
                    }
                }
                gz[i * kw + j] = acc;
            }
        }
    }
}

template Grid2<float> cross_correlate<float>(const Tensor3<float>&, const Tensor3<float>&);
template Grid2<double> cross_correlate<double>(const Tensor3<double>&, const Tensor3<double>&);
template void cross_correlate_backward<float>(const Tensor3<float>&, const Tensor3<float>&, const Grid2<float>&,
                                              Tensor3<float>&, Tensor3<float>&);
template void cross_correlate_backward<double>(const Tensor3<double>&, const Tensor3<double>&, const Grid2<double>&,
                                               Tensor3<double>&, Tensor3<double>&);

}  // namespace evtrack::net

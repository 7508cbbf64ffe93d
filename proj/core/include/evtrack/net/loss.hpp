#pragma once

#include <cstdint>

#include "evtrack/tensor.hpp"

namespace evtrack::net {

/// Score-map targets: +1 at the center and strictly within Euclidean distance `radius` of it,
/// -1 elsewhere.
struct LabelMap {
    Grid2<std::int8_t> values;
    int center_y = 0;
    int center_x = 0;
    double radius = 0.0;

    int height() const { return values.height(); }
    int width() const { return values.width(); }
    int positives() const;
};

/// Throws InvalidArgument for even or non-positive dimensions, or a negative radius.
LabelMap make_label_map(int height, int width, double radius);

enum class LossWeighting {
    Uniform,   ///< plain mean over positions
    Balanced,  ///< positives and negatives each carry total weight 1/2
};

template <typename T>
struct LossResult {
    T loss = T{0};
    Grid2<T> grad;  ///< dLoss / dScore
};

/// Weighted mean of log(1 + exp(-P L)) with its analytic gradient. Throws ShapeError when the
/// shapes differ.
template <typename T>
LossResult<T> logistic_loss(const Grid2<T>& scores, const LabelMap& labels,
                            LossWeighting weighting = LossWeighting::Balanced);

}  // namespace evtrack::net

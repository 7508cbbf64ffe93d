#include "evtrack/net/loss.hpp"

#include <cmath>

#include "evtrack/error.hpp"

namespace evtrack::net {

int LabelMap::positives() const {
    int n = 0;
    for (auto v : values.values()) n += v > 0 ? 1 : 0;
    return n;
}

LabelMap make_label_map(int height, int width, double radius) {
    if (height < 1 || width < 1 || height % 2 == 0 || width % 2 == 0) {
        throw InvalidArgument("label map dimensions must be odd and positive");
    }
    if (!(radius >= 0.0)) throw InvalidArgument("label radius must be non-negative");
    LabelMap map;
    map.values = Grid2<std::int8_t>(height, width, std::int8_t{-1});
    map.center_y = height / 2;
    map.center_x = width / 2;
    map.radius = radius;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dy = y - map.center_y;
            const double dx = x - map.center_x;
            const double d2 = dx * dx + dy * dy;
            if (d2 == 0.0 || d2 < radius * radius) map.values(y, x) = 1;
        }
    }
    return map;
}

template <typename T>
LossResult<T> logistic_loss(const Grid2<T>& scores, const LabelMap& labels, LossWeighting weighting) {
    if (scores.height() != labels.height() || scores.width() != labels.width()) {
        throw ShapeError("score map and label map shapes differ");
    }
    const std::size_t n = scores.size();
    const int pos = labels.positives();
    const int neg = static_cast<int>(n) - pos;
    double w_pos = 1.0 / static_cast<double>(n);
    double w_neg = w_pos;
    if (weighting == LossWeighting::Balanced) {
        if (pos > 0 && neg > 0) {
            w_pos = 0.5 / pos;
            w_neg = 0.5 / neg;
        } else {
            w_pos = w_neg = 1.0 / static_cast<double>(n);
        }
    }
    LossResult<T> result;
    result.grad = Grid2<T>(scores.height(), scores.width());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double label = labels.values.values()[i];
        const double w = label > 0 ? w_pos : w_neg;
        const double z = static_cast<double>(scores.values()[i]) * label;
        // softplus(-z) and its derivative -sigmoid(-z), both overflow-free.
        const double softplus = std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
        const double sig_neg = z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
        total += w * softplus;
        result.grad.values()[i] = static_cast<T>(-w * label * sig_neg);
    }
    result.loss = static_cast<T>(total);
    return result;
}

template LossResult<float> logistic_loss<float>(const Grid2<float>&, const LabelMap&, LossWeighting);
template LossResult<double> logistic_loss<double>(const Grid2<double>&, const LabelMap&, LossWeighting);

}  // namespace evtrack::net

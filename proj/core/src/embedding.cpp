#include "evtrack/embedding.hpp"

#include <cmath>
#include <vector>

#include "evtrack/error.hpp"

namespace evtrack {
namespace {

void require_method(const EmbeddingConfig& config, EmbeddingMethod expected) {
    if (config.method != expected) {
        throw InvalidArgument("embedding method mismatch: expected " + std::string(to_string(expected)) +
                              ", got " + std::string(to_string(config.method)));
    }
}

void require_bins(const EmbeddingConfig& config) {
    if (config.bins < 1) throw InvalidArgument("embedding requires at least one temporal bin");
}

double window_length(const EventWindow& window) {
    if (window.duration() == 0) throw InvalidArgument("cannot embed a zero-length window");
    return static_cast<double>(window.duration());
}

bool in_geometry(const Event& e, const SensorGeometry& g) { return g.contains(e.x, e.y); }

// Splits `value` between the two temporal bins adjacent to t*(B-1). With `dyadic` the split
// fraction is snapped to a multiple of 2^-14, so unit splats sum exactly in float cells.
void splat_temporal(EventTensor& out, const Event& e, double t_norm, double value, int bins, bool dyadic) {
    const int group = e.p > 0 ? 0 : bins;
    const double coord = t_norm * (bins - 1);
    int lo = static_cast<int>(std::floor(coord));
    if (lo > bins - 1) lo = bins - 1;
    double frac = coord - lo;
    if (dyadic) frac = std::round(frac * 16384.0) / 16384.0;
    out(group + lo, e.y, e.x) += static_cast<float>(value * (1.0 - frac));
    if (lo + 1 < bins) out(group + lo + 1, e.y, e.x) += static_cast<float>(value * frac);
}

template <bool UnitMeasurement>
EventTensor temporal_grid(const EventWindow& window, const EmbeddingConfig& config) {
    require_bins(config);
    const double length = window_length(window);
    const SensorGeometry& g = window.geometry();
    EventTensor out(2 * config.bins, g.height, g.width);
    for (const Event& e : window.events()) {
        if (!in_geometry(e, g)) continue;
        const double t_norm = static_cast<double>(e.t - window.t_start()) / length;
        splat_temporal(out, e, t_norm, UnitMeasurement ? 1.0 : t_norm, config.bins, UnitMeasurement);
    }
    return out;
}

double lerp(double a, double b, double f) { return a + (b - a) * f; }

}  // namespace

std::string_view to_string(EmbeddingMethod method) {
    switch (method) {
        case EmbeddingMethod::Est: return "est";
        case EmbeddingMethod::OneChannelImage: return "one_channel_image";
        case EmbeddingMethod::TwoChannelImage: return "two_channel_image";
        case EmbeddingMethod::TwoChannelVoxel: return "two_channel_voxel";
    }
    return "unknown";
}

EmbeddingMethod parse_embedding_method(std::string_view text) {
    for (auto m : {EmbeddingMethod::Est, EmbeddingMethod::OneChannelImage,
                   EmbeddingMethod::TwoChannelImage, EmbeddingMethod::TwoChannelVoxel}) {
        if (text == to_string(m)) return m;
    }
    throw InvalidArgument("unknown embedding method '" + std::string(text) + "'");
}

int EmbeddingConfig::channels() const {
    switch (method) {
        case EmbeddingMethod::OneChannelImage: return 1;
        case EmbeddingMethod::TwoChannelImage: return 2;
        case EmbeddingMethod::Est:
        case EmbeddingMethod::TwoChannelVoxel: return 2 * bins;
    }
    return 0;
}

EventTensor embed(const EventWindow& window, const EmbeddingConfig& config) {
    switch (config.method) {
        case EmbeddingMethod::Est: return embed_est(window, config);
        case EmbeddingMethod::OneChannelImage: return embed_one_channel(window, config);
        case EmbeddingMethod::TwoChannelImage: return embed_two_channel_image(window, config);
        case EmbeddingMethod::TwoChannelVoxel: return embed_two_channel_voxel(window, config);
    }
    throw InvalidArgument("unknown embedding method");
}

EventTensor embed_est(const EventWindow& window, const EmbeddingConfig& config) {
    require_method(config, EmbeddingMethod::Est);
    return temporal_grid<false>(window, config);
}

EventTensor embed_two_channel_voxel(const EventWindow& window, const EmbeddingConfig& config) {
    require_method(config, EmbeddingMethod::TwoChannelVoxel);
    return temporal_grid<true>(window, config);
}

EventTensor embed_one_channel(const EventWindow& window, const EmbeddingConfig& config) {
    require_method(config, EmbeddingMethod::OneChannelImage);
    window_length(window);
    const SensorGeometry& g = window.geometry();
    EventTensor out(1, g.height, g.width);
    for (const Event& e : window.events()) {
        if (in_geometry(e, g)) out(0, e.y, e.x) += 1.0f;
    }
    return out;
}

EventTensor embed_two_channel_image(const EventWindow& window, const EmbeddingConfig& config) {
    require_method(config, EmbeddingMethod::TwoChannelImage);
    window_length(window);
    const SensorGeometry& g = window.geometry();
    EventTensor out(2, g.height, g.width);
    for (const Event& e : window.events()) {
        if (in_geometry(e, g)) out(e.p > 0 ? 0 : 1, e.y, e.x) += 1.0f;
    }
    return out;
}

EventTensor resize_bilinear(const EventTensor& tensor, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw InvalidArgument("resize target must be positive");
    const int in_h = tensor.height();
    const int in_w = tensor.width();
    if (in_h < 1 || in_w < 1) throw ShapeError("cannot resize an empty tensor");
    if (in_h == out_h && in_w == out_w) return tensor;

    struct Tap {
        int i0, i1;
        double f;
    };
    auto taps = [](int in, int out) {
        std::vector<Tap> result(static_cast<std::size_t>(out));
        const double step = (out > 1 && in > 1) ? static_cast<double>(in - 1) / (out - 1) : 0.0;
        for (int o = 0; o < out; ++o) {
            const double src = o * step;
            int i0 = static_cast<int>(std::floor(src));
            if (i0 > in - 1) i0 = in - 1;
            const int i1 = i0 + 1 < in ? i0 + 1 : i0;
            result[static_cast<std::size_t>(o)] = {i0, i1, src - i0};
        }
        return result;
    };
    const std::vector<Tap> ytaps = taps(in_h, out_h);
    const std::vector<Tap> xtaps = taps(in_w, out_w);

    EventTensor out(tensor.channels(), out_h, out_w);
    for (int c = 0; c < tensor.channels(); ++c) {
        const float* src = tensor.plane(c);
        float* dst = out.plane(c);
        for (int oy = 0; oy < out_h; ++oy) {
            const Tap& ty = ytaps[static_cast<std::size_t>(oy)];
            const float* row0 = src + static_cast<std::size_t>(ty.i0) * in_w;
            const float* row1 = src + static_cast<std::size_t>(ty.i1) * in_w;
            for (int ox = 0; ox < out_w; ++ox) {
                const Tap& tx = xtaps[static_cast<std::size_t>(ox)];
                const double top = lerp(row0[tx.i0], row0[tx.i1], tx.f);
                const double bottom = lerp(row1[tx.i0], row1[tx.i1], tx.f);
                dst[static_cast<std::size_t>(oy) * out_w + ox] = static_cast<float>(lerp(top, bottom, ty.f));
            }
        }
    }
    return out;
}

}  // namespace evtrack

#pragma once

#include <string>
#include <string_view>

#include "evtrack/events.hpp"
#include "evtrack/tensor.hpp"

namespace evtrack {

/// Grid tensors produced from event windows. Always single precision.
using EventTensor = Tensor3<float>;

enum class EmbeddingMethod {
    Est,              ///< 2B planes, timestamp measurement split over temporal bins
    OneChannelImage,  ///< 1 plane, event count ignoring polarity
    TwoChannelImage,  ///< 2 planes, event count per polarity
    TwoChannelVoxel,  ///< 2B planes, event count split over temporal bins
};

std::string_view to_string(EmbeddingMethod method);
EmbeddingMethod parse_embedding_method(std::string_view text);

struct EmbeddingConfig {
    EmbeddingMethod method = EmbeddingMethod::Est;
    int bins = 9;

    /// Planes produced by this configuration. Positive-polarity planes come first.
    int channels() const;
};

/// Dispatches on config.method. The output covers the window's geometry (H, W).
EventTensor embed(const EventWindow& window, const EmbeddingConfig& config);

/// Event spike tensor with a fixed trilinear kernel and normalized-timestamp measurement.
/// Each event at normalized time t* = (t - t_start) / duration adds t* to its pixel, split
/// linearly between temporal bins floor(t*(B-1)) and the next one. Output is (2B, H, W)
/// with positive bins 0..B-1 followed by negative bins B..2B-1.
EventTensor embed_est(const EventWindow& window, const EmbeddingConfig& config);
EventTensor embed_one_channel(const EventWindow& window, const EmbeddingConfig& config);
EventTensor embed_two_channel_image(const EventWindow& window, const EmbeddingConfig& config);
/// Same temporal split as embed_est with a unit measurement; the split fraction is snapped to a
/// multiple of 2^-14 so the tensor mass equals the in-bounds event count exactly.
EventTensor embed_two_channel_voxel(const EventWindow& window, const EmbeddingConfig& config);

/// Channel-wise bilinear resampling on a corner-aligned grid: output sample (i, j) reads the
/// input at (i (H-1)/(out_h-1), j (W-1)/(out_w-1)). A size-1 axis samples the first row/column.
EventTensor resize_bilinear(const EventTensor& tensor, int out_h, int out_w);

}  // namespace evtrack

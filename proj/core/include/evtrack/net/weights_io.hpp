#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "evtrack/embedding.hpp"
#include "evtrack/net/siamese.hpp"

namespace evtrack::net {

/// Weights file: "SEVW", u32 version = 1, u32 temporal bins, u32 tensor count, then per tensor
/// u16 name length, UTF-8 name, u8 rank, u32 dims, float32 values (row-major). All
/// little-endian. Backbone tensors come first in layer order, followed by adjust.scale and
/// adjust.bias. The first conv's input planes follow the embedding channel layout: positive
/// polarity bins 0..B-1 then negative bins B..2B-1.
void write_weights(std::ostream& out, const SiameseModel<float>& model, int bins);

struct LoadedWeights {
    SiameseModel<float> model;
    int bins = 0;
};

/// Parses a weights file and rebuilds the five-conv feature extractor from the stored shapes.
/// When `expected` is given, the stored bin count and first-layer input channels must match it.
LoadedWeights read_weights(std::istream& in, const std::string& source_name = "<stream>",
                           const std::optional<EmbeddingConfig>& expected = std::nullopt);

void save_weights(const std::filesystem::path& path, const SiameseModel<float>& model, int bins);
LoadedWeights load_weights(const std::filesystem::path& path,
                           const std::optional<EmbeddingConfig>& expected = std::nullopt);

}  // namespace evtrack::net

#include "evtrack/net/weights_io.hpp"

#include <fstream>
#include <map>

#include "../binary_io.hpp"
#include "evtrack/atomic_file.hpp"
#include "evtrack/error.hpp"

namespace evtrack::net {
namespace {

constexpr char kMagic[4] = {'S', 'E', 'V', 'W'};
constexpr std::uint32_t kVersion = 1;

struct RawTensor {
    std::vector<std::uint32_t> shape;
    std::vector<float> values;
};

void put_tensor(std::ostream& out, const std::string& name, const std::vector<std::uint32_t>& shape,
                const std::vector<float>& values) {
    using detail::put_le;
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) put_le<std::uint32_t>(out, d);
    for (float v : values) put_le<float>(out, v);
}

}  // namespace

void write_weights(std::ostream& out, const SiameseModel<float>& model, int bins) {
    using detail::put_le;
    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(bins));
    const auto& params = model.backbone.parameters();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size() + model.head.size()));
    for (const auto& p : params) put_tensor(out, p.name, p.shape, p.values);
    for (const auto& p : model.head) put_tensor(out, p.name, p.shape, p.values);
}

LoadedWeights read_weights(std::istream& in, const std::string& source_name,
                           const std::optional<EmbeddingConfig>& expected) {
    using detail::get_le;
    char magic[4];
    if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
        throw ParseError(source_name + ": bad magic, expected SEVW");
    }
    const auto version = get_le<std::uint32_t>(in, source_name + " version");
    if (version != kVersion) throw ParseError(source_name + ": unsupported weights version " + std::to_string(version));
    const auto bins = get_le<std::uint32_t>(in, source_name + " bins");
    const auto count = get_le<std::uint32_t>(in, source_name + " tensor count");

    std::vector<std::string> order;
    std::map<std::string, RawTensor> tensors;
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::string slot = source_name + " tensor #" + std::to_string(t);
        const auto len = get_le<std::uint16_t>(in, slot + " name length");
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw ParseError("unexpected end of file while reading " + slot + " name");
        const std::string what = source_name + " tensor " + name;
        const auto rank = get_le<std::uint8_t>(in, what + " rank");
        RawTensor raw;
        std::size_t elements = 1;
        for (std::uint8_t d = 0; d < rank; ++d) {
            raw.shape.push_back(get_le<std::uint32_t>(in, what + " shape"));
            elements *= raw.shape.back();
        }
        if (elements > (std::size_t{1} << 28)) throw ParseError(what + ": implausible tensor size");
        raw.values.resize(elements);
        for (std::size_t i = 0; i < elements; ++i) raw.values[i] = get_le<float>(in, what + " values");
        if (tensors.count(name) != 0) throw ParseError(what + ": duplicate tensor");
        order.push_back(name);
        tensors.emplace(name, std::move(raw));
    }

    auto find = [&](const std::string& name) -> const RawTensor& {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ParseError(source_name + ": missing tensor " + name);
        return it->second;
    };
    std::vector<int> widths;
    const int kernels[5] = {11, 5, 3, 3, 3};
    int in_channels = 0;
    for (int i = 1; i <= 5; ++i) {
        const RawTensor& w = find("conv" + std::to_string(i) + ".weight");
        if (w.shape.size() != 4 || w.shape[2] != static_cast<std::uint32_t>(kernels[i - 1]) || w.shape[3] != w.shape[2]) {
            throw ParseError(source_name + ": tensor conv" + std::to_string(i) + ".weight has an unexpected shape");
        }
        if (i == 1) in_channels = static_cast<int>(w.shape[1]);
        widths.push_back(static_cast<int>(w.shape[0]));
    }
    if (expected) {
        if (static_cast<int>(bins) != expected->bins) {
            throw ParseError(source_name + ": weights were trained with " + std::to_string(bins) +
                             " bins, configuration requests " + std::to_string(expected->bins));
        }
        if (in_channels != expected->channels()) {
            throw ParseError(source_name + ": first conv layer expects " + std::to_string(in_channels) +
                             " input planes, embedding produces " + std::to_string(expected->channels()));
        }
    }

    LoadedWeights loaded;
    loaded.bins = static_cast<int>(bins);
    try {
        loaded.model = SiameseModel<float>(Architecture::alexnet(in_channels, widths));
    } catch (const Error& e) {
        throw ParseError(source_name + ": inconsistent layer shapes (" + e.what() + ")");
    }
    auto assign = [&](Parameter<float>& p) {
        const RawTensor& raw = find(p.name);
        if (raw.shape != p.shape) throw ParseError(source_name + ": tensor " + p.name + " has an unexpected shape");
        p.values = raw.values;
    };
    for (auto& p : loaded.model.backbone.parameters()) assign(p);
    for (auto& p : loaded.model.head) assign(p);
    if (order.size() != loaded.model.backbone.parameters().size() + loaded.model.head.size()) {
        throw ParseError(source_name + ": unexpected extra tensors");
    }
    return loaded;
}

void save_weights(const std::filesystem::path& path, const SiameseModel<float>& model, int bins) {
    write_file_atomic(path, [&](std::ostream& out) { write_weights(out, model, bins); });
}

LoadedWeights load_weights(const std::filesystem::path& path, const std::optional<EmbeddingConfig>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open weights file " + path.string());
    return read_weights(in, path.string(), expected);
}

}  // namespace evtrack::net

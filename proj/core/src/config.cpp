#include "evtrack/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "evtrack/error.hpp"

namespace evtrack {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T number(std::string_view key, std::string_view text) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw InvalidArgument("invalid value '" + std::string(text) + "' for " + std::string(key));
    }
    return value;
}

bool boolean(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw InvalidArgument("invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string fmt_scales(const std::vector<double>& scales) {
    std::string out;
    for (std::size_t i = 0; i < scales.size(); ++i) out += (i ? "," : "") + fmt(scales[i]);
    return out;
}

std::vector<double> parse_scales(std::string_view key, std::string_view text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = text.find(',', start);
        out.push_back(number<double>(key, trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start))));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        {"embedding.method", [](RunConfig& c, std::string_view v) { c.tracker.embedding.method = parse_embedding_method(v); },
         [](const RunConfig& c) { return std::string(to_string(c.tracker.embedding.method)); }},
        {"embedding.bins", [](RunConfig& c, std::string_view v) { c.tracker.embedding.bins = number<int>("embedding.bins", v); },
         [](const RunConfig& c) { return std::to_string(c.tracker.embedding.bins); }},
        {"tracker.window_influence", [](RunConfig& c, std::string_view v) { c.tracker.window_influence = number<double>("tracker.window_influence", v); },
         [](const RunConfig& c) { return fmt(c.tracker.window_influence); }},
        {"tracker.window_us", [](RunConfig& c, std::string_view v) { c.tracker.window_us = number<TimeUs>("tracker.window_us", v); },
         [](const RunConfig& c) { return std::to_string(c.tracker.window_us); }},
        {"tracker.exemplar_policy", [](RunConfig& c, std::string_view v) { c.tracker.exemplar_policy = parse_exemplar_policy(v); },
         [](const RunConfig& c) { return std::string(to_string(c.tracker.exemplar_policy)); }},
        {"tracker.upsample", [](RunConfig& c, std::string_view v) { c.tracker.upsample = number<int>("tracker.upsample", v); },
         [](const RunConfig& c) { return std::to_string(c.tracker.upsample); }},
        {"tracker.edge_ratio", [](RunConfig& c, std::string_view v) { c.tracker.edge_ratio = number<double>("tracker.edge_ratio", v); },
         [](const RunConfig& c) { return fmt(c.tracker.edge_ratio); }},
        {"tracker.search_scale", [](RunConfig& c, std::string_view v) { c.tracker.search_scale = number<double>("tracker.search_scale", v); },
         [](const RunConfig& c) { return fmt(c.tracker.search_scale); }},
        {"tracker.scales", [](RunConfig& c, std::string_view v) { c.tracker.scales = parse_scales("tracker.scales", v); },
         [](const RunConfig& c) { return fmt_scales(c.tracker.scales); }},
        {"tracker.scale_penalty", [](RunConfig& c, std::string_view v) { c.tracker.scale_penalty = number<double>("tracker.scale_penalty", v); },
         [](const RunConfig& c) { return fmt(c.tracker.scale_penalty); }},
        {"tracker.scale_damping", [](RunConfig& c, std::string_view v) { c.tracker.scale_damping = number<double>("tracker.scale_damping", v); },
         [](const RunConfig& c) { return fmt(c.tracker.scale_damping); }},
        {"train.epochs", [](RunConfig& c, std::string_view v) { c.train.epochs = number<int>("train.epochs", v); },
         [](const RunConfig& c) { return std::to_string(c.train.epochs); }},
        {"train.lr_start", [](RunConfig& c, std::string_view v) { c.train.lr_start = number<double>("train.lr_start", v); },
         [](const RunConfig& c) { return fmt(c.train.lr_start); }},
        {"train.lr_end", [](RunConfig& c, std::string_view v) { c.train.lr_end = number<double>("train.lr_end", v); },
         [](const RunConfig& c) { return fmt(c.train.lr_end); }},
        {"train.momentum", [](RunConfig& c, std::string_view v) { c.train.momentum = number<double>("train.momentum", v); },
         [](const RunConfig& c) { return fmt(c.train.momentum); }},
        {"train.weight_decay", [](RunConfig& c, std::string_view v) { c.train.weight_decay = number<double>("train.weight_decay", v); },
         [](const RunConfig& c) { return fmt(c.train.weight_decay); }},
        {"train.pairs_per_sequence", [](RunConfig& c, std::string_view v) { c.train.pairs_per_sequence = number<int>("train.pairs_per_sequence", v); },
         [](const RunConfig& c) { return std::to_string(c.train.pairs_per_sequence); }},
        {"train.max_gap_us", [](RunConfig& c, std::string_view v) { c.train.max_gap_us = number<TimeUs>("train.max_gap_us", v); },
         [](const RunConfig& c) { return std::to_string(c.train.max_gap_us); }},
        {"train.label_radius", [](RunConfig& c, std::string_view v) { c.train.label_radius = number<double>("train.label_radius", v); },
         [](const RunConfig& c) { return fmt(c.train.label_radius); }},
        {"train.split", [](RunConfig& c, std::string_view v) { c.train.split = number<double>("train.split", v); },
         [](const RunConfig& c) { return fmt(c.train.split); }},
        {"train.width", [](RunConfig& c, std::string_view v) { c.train.width = number<double>("train.width", v); },
         [](const RunConfig& c) { return fmt(c.train.width); }},
        {"train.use_init", [](RunConfig& c, std::string_view v) { c.train.use_init = boolean("train.use_init", v); },
         [](const RunConfig& c) { return std::string(c.train.use_init ? "true" : "false"); }},
        {"sim.threshold", [](RunConfig& c, std::string_view v) {
             c.sim.positive_threshold = c.sim.negative_threshold = number<double>("sim.threshold", v);
         },
         [](const RunConfig& c) { return fmt(c.sim.positive_threshold); }},
        {"sim.negative_threshold", [](RunConfig& c, std::string_view v) { c.sim.negative_threshold = number<double>("sim.negative_threshold", v); },
         [](const RunConfig& c) { return fmt(c.sim.negative_threshold); }},
        {"sim.log_epsilon", [](RunConfig& c, std::string_view v) { c.sim.log_epsilon = number<double>("sim.log_epsilon", v); },
         [](const RunConfig& c) { return fmt(c.sim.log_epsilon); }},
        {"sim.threshold_sigma", [](RunConfig& c, std::string_view v) { c.sim.threshold_sigma = number<double>("sim.threshold_sigma", v); },
         [](const RunConfig& c) { return fmt(c.sim.threshold_sigma); }},
        {"sim.refractory_us", [](RunConfig& c, std::string_view v) { c.sim.refractory_us = number<TimeUs>("sim.refractory_us", v); },
         [](const RunConfig& c) { return std::to_string(c.sim.refractory_us); }},
        {"seed", [](RunConfig& c, std::string_view v) { c.seed = number<std::uint64_t>("seed", v); },
         [](const RunConfig& c) { return std::to_string(c.seed); }},
        {"dataset", [](RunConfig& c, std::string_view v) { c.dataset = std::string(v); },
         [](const RunConfig& c) { return c.dataset; }},
        {"weights", [](RunConfig& c, std::string_view v) { c.weights = std::string(v); },
         [](const RunConfig& c) { return c.weights; }},
    };
    return table;
}

}  // namespace

void RunConfig::validate() const {
    tracker.validate();
    if (train.epochs < 1) throw InvalidArgument("train.epochs must be at least 1");
    if (!(train.lr_start >= 0.0) || !(train.lr_end >= 0.0)) throw InvalidArgument("learning rates must be non-negative");
    if (!(train.momentum >= 0.0 && train.momentum < 1.0)) throw InvalidArgument("train.momentum must lie in [0, 1)");
    if (!(train.weight_decay >= 0.0)) throw InvalidArgument("train.weight_decay must be non-negative");
    if (train.pairs_per_sequence < 1) throw InvalidArgument("train.pairs_per_sequence must be at least 1");
    if (!(train.label_radius >= 0.0)) throw InvalidArgument("train.label_radius must be non-negative");
    if (!(train.split > 0.0 && train.split <= 1.0)) throw InvalidArgument("train.split must lie in (0, 1]");
    if (!(train.width > 0.0)) throw InvalidArgument("train.width must be positive");
    if (!(sim.positive_threshold > 0.0) || !(sim.negative_threshold > 0.0)) throw InvalidArgument("sim thresholds must be positive");
    if (!(sim.log_epsilon > 0.0)) throw InvalidArgument("sim.log_epsilon must be positive");
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
    for (const Key& k : keys()) {
        if (key == k.name) {
            k.set(config, value);
            return;
        }
    }
    throw InvalidArgument("unknown configuration key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, const std::string& source_name) {
    RunConfig config;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        const std::string where = source_name + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) throw ParseError(where + "expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        try {
            set_config_value(config, key, value);
        } catch (const InvalidArgument& e) {
            throw ParseError(where + e.what());
        }
    }
    try {
        config.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(source_name + ": " + e.what());
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::string format_config(const RunConfig& config) {
    std::string out;
    for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(config) + "\n";
    return out;
}

}  // namespace evtrack

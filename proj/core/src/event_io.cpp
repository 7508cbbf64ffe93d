#include "evtrack/event_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "binary_io.hpp"
#include "evtrack/atomic_file.hpp"
#include "evtrack/error.hpp"

namespace evtrack {
namespace {

constexpr char kMagic[4] = {'S', 'E', 'V', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T parse_field(std::string_view text, const std::string& where) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError(where + ": invalid field '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

void write_events_text(std::ostream& out, const std::vector<Event>& events) {
    for (const Event& e : events) {
        out << e.t << ',' << e.x << ',' << e.y << ',' << static_cast<int>(e.p) << '\n';
    }
}

std::vector<Event> read_events_text(std::istream& in, const std::string& source_name) {
    std::vector<Event> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = source_name + ":" + std::to_string(line_no);
        std::string_view rest(line);
        std::string_view fields[4];
        for (int i = 0; i < 4; ++i) {
            auto comma = rest.find(',');
            if (i < 3 && comma == std::string_view::npos) throw ParseError(where + ": expected 4 comma-separated fields");
            if (i == 3 && comma != std::string_view::npos) throw ParseError(where + ": too many fields");
            fields[i] = rest.substr(0, comma);
            rest = i < 3 ? rest.substr(comma + 1) : std::string_view{};
        }
        Event e;
        e.t = parse_field<std::uint64_t>(fields[0], where);
        e.x = parse_field<std::uint16_t>(fields[1], where);
        e.y = parse_field<std::uint16_t>(fields[2], where);
        int p = parse_field<int>(fields[3], where);
        if (p != 1 && p != -1) throw ParseError(where + ": polarity must be 1 or -1");
        e.p = static_cast<std::int8_t>(p);
        if (!events.empty() && e.t < events.back().t) throw ParseError(where + ": events are not time-sorted");
        events.push_back(e);
    }
    return events;
}

void write_events_binary(std::ostream& out, const EventStream& stream) {
    using detail::put_le;
    if (stream.geometry.width <= 0 || stream.geometry.height <= 0 ||
        stream.geometry.width > std::numeric_limits<std::uint16_t>::max() ||
        stream.geometry.height > std::numeric_limits<std::uint16_t>::max()) {
        throw InvalidArgument("sensor geometry does not fit the binary event format");
    }
    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.geometry.width));
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.geometry.height));
    put_le<std::uint64_t>(out, stream.events.size());
    for (const Event& e : stream.events) {
        put_le<std::uint64_t>(out, e.t);
        put_le<std::uint16_t>(out, e.x);
        put_le<std::uint16_t>(out, e.y);
        put_le<std::int8_t>(out, e.p);
    }
}

EventStream read_events_binary(std::istream& in, const std::string& source_name) {
    using detail::get_le;
    char magic[4];
    if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
        throw ParseError(source_name + ": bad magic, expected SEVT");
    }
    auto version = get_le<std::uint32_t>(in, source_name + " version");
    if (version != kVersion) throw ParseError(source_name + ": unsupported version " + std::to_string(version));
    EventStream stream;
    stream.geometry.width = get_le<std::uint16_t>(in, source_name + " width");
    stream.geometry.height = get_le<std::uint16_t>(in, source_name + " height");
    if (stream.geometry.width == 0 || stream.geometry.height == 0) throw ParseError(source_name + ": zero sensor size");
    auto count = get_le<std::uint64_t>(in, source_name + " event count");
    stream.events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::string what = source_name + " event " + std::to_string(i);
        Event e;
        e.t = get_le<std::uint64_t>(in, what);
        e.x = get_le<std::uint16_t>(in, what);
        e.y = get_le<std::uint16_t>(in, what);
        e.p = get_le<std::int8_t>(in, what);
        if (e.p != 1 && e.p != -1) throw ParseError(what + ": polarity must be +1 or -1");
        if (!stream.geometry.contains(e.x, e.y)) throw ParseError(what + ": pixel outside sensor");
        if (!stream.events.empty() && e.t < stream.events.back().t) throw ParseError(what + ": events are not time-sorted");
        stream.events.push_back(e);
    }
    return stream;
}

void save_events(const std::filesystem::path& path, const EventStream& stream) {
    write_file_atomic(path, [&](std::ostream& out) { write_events_binary(out, stream); });
}

EventStream load_events(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open event file " + path.string());
    return read_events_binary(in, path.string());
}

}  // namespace evtrack

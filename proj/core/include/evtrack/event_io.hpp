#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "evtrack/events.hpp"

namespace evtrack {

/// An event file: sensor geometry plus a time-sorted event list.
struct EventStream {
    SensorGeometry geometry;
    std::vector<Event> events;
};

// Text format: one `t_us,x,y,p` line per event, p in {1,-1}, LF endings.
// The text format has no header, so geometry must be supplied by the caller.
void write_events_text(std::ostream& out, const std::vector<Event>& events);
std::vector<Event> read_events_text(std::istream& in, const std::string& source_name = "<stream>");

// Binary format: "SEVT", u32 version=1, u16 width, u16 height, u64 count, then per event
// u64 t, u16 x, u16 y, i8 p. All little-endian.
void write_events_binary(std::ostream& out, const EventStream& stream);
EventStream read_events_binary(std::istream& in, const std::string& source_name = "<stream>");

void save_events(const std::filesystem::path& path, const EventStream& stream);
EventStream load_events(const std::filesystem::path& path);

}  // namespace evtrack

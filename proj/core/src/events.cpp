#include "evtrack/events.hpp"

#include <algorithm>
#include <string>

#include "evtrack/error.hpp"

namespace evtrack {

EventWindow::EventWindow(std::vector<Event> events, TimeUs t_start, TimeUs t_end,
                         SensorGeometry geometry)
    : events_(std::move(events)), t_start_(t_start), t_end_(t_end), geometry_(geometry) {
    if (t_start_ >= t_end_) throw InvalidArgument("event window requires t_start < t_end");
    if (!is_time_sorted(events_)) throw InvalidArgument("event window is not time-sorted");
    for (const Event& e : events_) {
        if (e.t < t_start_ || e.t >= t_end_) {
            throw InvalidArgument("event at t=" + std::to_string(e.t) + " outside window [" +
                                  std::to_string(t_start_) + ", " + std::to_string(t_end_) + ")");
        }
        if (e.p != 1 && e.p != -1) throw InvalidArgument("event polarity must be +1 or -1");
    }
}

bool is_time_sorted(std::span<const Event> stream) {
    return std::is_sorted(stream.begin(), stream.end(),
                          [](const Event& a, const Event& b) { return a.t < b.t; });
}

EventWindow slice_window(std::span<const Event> stream, TimeUs t_start, TimeUs t_end,
                         SensorGeometry geometry) {
    if (t_start >= t_end) throw InvalidArgument("slice_window requires t_start < t_end");
    if (!is_time_sorted(stream)) throw InvalidArgument("event stream violates time ordering");
    auto lo = std::lower_bound(stream.begin(), stream.end(), t_start,
                               [](const Event& e, TimeUs t) { return e.t < t; });
    auto hi = std::lower_bound(lo, stream.end(), t_end,
                               [](const Event& e, TimeUs t) { return e.t < t; });
    return EventWindow(std::vector<Event>(lo, hi), t_start, t_end, geometry);
}

}  // namespace evtrack

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace evtrack {

/// Microsecond timestamps.
using TimeUs = std::uint64_t;

/// A single polarity spike from an event sensor.
struct Event {
    TimeUs t = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t p = 1;  ///< +1 brightening, -1 darkening

    friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
    int width = 0;
    int height = 0;

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

/// Time-sorted events restricted to the half-open interval [t_start, t_end).
class EventWindow {
public:
    EventWindow() = default;

    /// Validates sortedness, interval membership and polarity values; throws InvalidArgument.
    EventWindow(std::vector<Event> events, TimeUs t_start, TimeUs t_end, SensorGeometry geometry);

    const std::vector<Event>& events() const { return events_; }
    TimeUs t_start() const { return t_start_; }
    TimeUs t_end() const { return t_end_; }
    TimeUs duration() const { return t_end_ - t_start_; }
    const SensorGeometry& geometry() const { return geometry_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

private:
    std::vector<Event> events_;
    TimeUs t_start_ = 0;
    TimeUs t_end_ = 0;
    SensorGeometry geometry_{};
};

/// True when timestamps are non-decreasing.
bool is_time_sorted(std::span<const Event> stream);

/// Returns the events with t_start <= t < t_end in their original order.
/// Throws InvalidArgument if the stream is not time-sorted or t_start >= t_end.
EventWindow slice_window(std::span<const Event> stream, TimeUs t_start, TimeUs t_end,
                         SensorGeometry geometry);

}  // namespace evtrack

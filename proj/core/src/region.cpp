#include "evtrack/region.hpp"

#include <algorithm>
#include <cmath>

#include "evtrack/error.hpp"

namespace evtrack {

bool BoundingBox::valid() const {
    return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h) &&
           w > 0.0 && h > 0.0;
}

std::pair<double, double> region_size(const BoundingBox& box) {
    if (!box.valid()) throw InvalidArgument("region_size requires a valid box");
    return {0.5 * box.h + 1.5 * box.w, 0.5 * box.w + 1.5 * box.h};
}

RegionGeometry make_region(double cx, double cy, double width, double height) {
    if (!(width > 0.0) || !(height > 0.0)) throw InvalidArgument("region extent must be positive");
    RegionGeometry r;
    r.width = width;
    r.height = height;
    r.origin_x = cx - width / 2.0;
    r.origin_y = cy - height / 2.0;
    // Integer lattice points p with origin <= p < origin + extent.
    r.grid_x = static_cast<int>(std::ceil(r.origin_x));
    r.grid_y = static_cast<int>(std::ceil(r.origin_y));
    r.grid_width = std::max(1, static_cast<int>(std::ceil(r.origin_x + width)) - r.grid_x);
    r.grid_height = std::max(1, static_cast<int>(std::ceil(r.origin_y + height)) - r.grid_y);
    return r;
}

RegionGeometry target_region(const BoundingBox& box, double scale) {
    auto [w, h] = region_size(box);
    return make_region(box.cx, box.cy, w * scale, h * scale);
}

EventWindow crop_events(const EventWindow& window, const RegionGeometry& region) {
    std::vector<Event> selected;
    for (const Event& e : window.events()) {
        if (!region.contains(e.x, e.y)) continue;
        Event local = e;
        local.x = static_cast<std::uint16_t>(e.x - region.grid_x);
        local.y = static_cast<std::uint16_t>(e.y - region.grid_y);
        selected.push_back(local);
    }
    return EventWindow(std::move(selected), window.t_start(), window.t_end(),
                       SensorGeometry{region.grid_width, region.grid_height});
}

std::pair<EventWindow, RegionGeometry> select_target_region(const EventWindow& window,
                                                            const BoundingBox& box) {
    RegionGeometry region = target_region(box);
    return {crop_events(window, region), region};
}

std::size_t count_in_region(const EventWindow& window, const RegionGeometry& region) {
    return static_cast<std::size_t>(std::count_if(
        window.events().begin(), window.events().end(),
        [&](const Event& e) { return region.contains(e.x, e.y); }));
}

}  // namespace evtrack

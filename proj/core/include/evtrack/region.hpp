#pragma once

#include <utility>

#include "evtrack/events.hpp"

namespace evtrack {

/// Axis-aligned target box given by its center and extent in sensor pixels.
struct BoundingBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 1.0;
    double h = 1.0;

    bool valid() const;
    double left() const { return cx - w / 2.0; }
    double top() const { return cy - h / 2.0; }
    double right() const { return cx + w / 2.0; }
    double bottom() const { return cy + h / 2.0; }
    double area() const { return w * h; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Extent of the context region around a target box: (h/2 + 3w/2, w/2 + 3h/2).
std::pair<double, double> region_size(const BoundingBox& box);

/// Placement of a target-centered crop.
///
/// The crop covers the real rectangle [origin_x, origin_x + width) x [origin_y, origin_y + height).
/// Events are kept at integer precision on a pixel grid whose first column/row is
/// (grid_x, grid_y); grid_width x grid_height is the number of integer lattice points
/// inside the rectangle (at least 1). The crop may extend past the sensor.
struct RegionGeometry {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double width = 0.0;
    double height = 0.0;
    int grid_x = 0;
    int grid_y = 0;
    int grid_width = 1;
    int grid_height = 1;

    bool contains(int x, int y) const {
        return x >= grid_x && x < grid_x + grid_width && y >= grid_y && y < grid_y + grid_height;
    }
};

/// Region of size `width` x `height` centered on (cx, cy).
RegionGeometry make_region(double cx, double cy, double width, double height);

/// Target-centered region of `box`, optionally scaled about its center.
RegionGeometry target_region(const BoundingBox& box, double scale = 1.0);

/// Selects the events of `window` that fall inside `region` and shifts them to region-local
/// grid coordinates. The returned window carries the region grid as its geometry.
EventWindow crop_events(const EventWindow& window, const RegionGeometry& region);

/// crop_events over the target-centered region of `box`.
std::pair<EventWindow, RegionGeometry> select_target_region(const EventWindow& window,
                                                            const BoundingBox& box);

/// Number of events of `window` inside `region` without copying them.
std::size_t count_in_region(const EventWindow& window, const RegionGeometry& region);

}  // namespace evtrack

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "evtrack/events.hpp"

namespace evtrack::test {

/// Uniformly random sorted events on a sensor over [t0, t1).
inline std::vector<Event> random_events(std::size_t count, SensorGeometry geom, TimeUs t0, TimeUs t1,
                                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<TimeUs> t(t0, t1 - 1);
    std::uniform_int_distribution<int> x(0, geom.width - 1), y(0, geom.height - 1), p(0, 1);
    std::vector<Event> events(count);
    for (auto& e : events) {
        e.t = t(rng);
        e.x = static_cast<std::uint16_t>(x(rng));
        e.y = static_cast<std::uint16_t>(y(rng));
        e.p = p(rng) ? 1 : -1;
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    return events;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("evtrack_" + tag + "_" + std::to_string(rd()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace evtrack::test

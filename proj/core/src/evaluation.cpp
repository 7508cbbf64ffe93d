#include "evtrack/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "evtrack/error.hpp"

namespace evtrack {

void TrackRun::validate() const {
    if (predicted.empty()) throw InvalidArgument("track run is empty");
    if (predicted.size() != groundtruth.size()) {
        throw InvalidArgument("track run has " + std::to_string(predicted.size()) + " predictions but " +
                              std::to_string(groundtruth.size()) + " ground-truth boxes");
    }
}

double Curve::area() const {
    double total = 0.0;
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        total += 0.5 * (values[i] + values[i - 1]) * (thresholds[i] - thresholds[i - 1]);
    }
    return total;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.left(), b.left()));
    const double iy = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top()));
    const double inter = ix * iy;
    // Ordered sum so floating-point contraction cannot make the result depend on argument order.
    const double area_a = a.area(), area_b = b.area();
    const double uni = std::min(area_a, area_b) + std::max(area_a, area_b) - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double normalized_center_distance(const BoundingBox& predicted, const BoundingBox& groundtruth) {
    const double diagonal = std::hypot(groundtruth.w, groundtruth.h);
    if (!(diagonal > 0.0)) throw InvalidArgument("ground-truth box has no extent");
    return std::hypot(predicted.cx - groundtruth.cx, predicted.cy - groundtruth.cy) / diagonal;
}

namespace {

std::vector<double> grid(int points) {
    if (points < 2) throw InvalidArgument("threshold grid needs at least two points");
    std::vector<double> t(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
    return t;
}

}  // namespace

Curve success_curve(const TrackRun& run, int points) {
    run.validate();
    std::vector<double> overlaps;
    for (std::size_t i = 0; i < run.predicted.size(); ++i) overlaps.push_back(iou(run.predicted[i], run.groundtruth[i]));
    Curve c;
    c.thresholds = grid(points);
    for (double theta : c.thresholds) {
        const auto hits = std::count_if(overlaps.begin(), overlaps.end(), [theta](double o) { return o > 0.0 && o >= theta; });
        c.values.push_back(static_cast<double>(hits) / static_cast<double>(overlaps.size()));
    }
    return c;
}

double success_score(const TrackRun& run) { return success_curve(run).area(); }

Curve precision_curve(const TrackRun& run, int points) {
    run.validate();
    std::vector<double> distances;
    for (std::size_t i = 0; i < run.predicted.size(); ++i) {
        distances.push_back(normalized_center_distance(run.predicted[i], run.groundtruth[i]));
    }
    Curve c;
    c.thresholds = grid(points);
    for (double theta : c.thresholds) {
        const auto hits = std::count_if(distances.begin(), distances.end(), [theta](double d) { return d <= theta; });
        c.values.push_back(static_cast<double>(hits) / static_cast<double>(distances.size()));
    }
    return c;
}

double precision_score(const TrackRun& run) { return precision_curve(run).area(); }

double success_rate(const TrackRun& run) {
    run.validate();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < run.predicted.size(); ++i) hits += iou(run.predicted[i], run.groundtruth[i]) > 0.5 ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(run.predicted.size());
}

MetricReport evaluate(const TrackRun& run) {
    MetricReport r;
    r.sequence = run.sequence;
    r.success_curve = success_curve(run);
    r.precision_curve = precision_curve(run);
    r.success_score = r.success_curve.area();
    r.precision_score = r.precision_curve.area();
    r.success_rate = success_rate(run);
    return r;
}

std::vector<BoundingBox> align_groundtruth(const std::vector<TimeUs>& times, const std::vector<BoundingBox>& boxes,
                                           const std::vector<TimeUs>& queries) {
    if (times.empty() || times.size() != boxes.size()) {
        throw InvalidArgument("ground truth has " + std::to_string(boxes.size()) + " boxes for " +
                              std::to_string(times.size()) + " timestamps");
    }
    std::vector<BoundingBox> out;
    out.reserve(queries.size());
    for (TimeUs q : queries) {
        if (q < times.front() || q > times.back()) {
            throw InvalidArgument("time " + std::to_string(q) + " lies outside the ground-truth range");
        }
        auto it = std::lower_bound(times.begin(), times.end(), q);
        const auto i = static_cast<std::size_t>(it - times.begin());
        if (*it == q) {
            out.push_back(boxes[i]);
            continue;
        }
        const BoundingBox& a = boxes[i - 1];
        const BoundingBox& b = boxes[i];
        const double f = static_cast<double>(q - times[i - 1]) / static_cast<double>(times[i] - times[i - 1]);
        out.push_back({a.cx + (b.cx - a.cx) * f, a.cy + (b.cy - a.cy) * f, a.w + (b.w - a.w) * f, a.h + (b.h - a.h) * f});
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string format_report_csv(const std::vector<MetricReport>& reports) {
    std::string out = "sequence,success_score,precision_score,success_rate\n";
    for (const MetricReport& r : reports) {
        out += r.sequence + "," + fmt(r.success_score) + "," + fmt(r.precision_score) + "," + fmt(r.success_rate) + "\n";
    }
    return out;
}

std::string format_curve_csv(const Curve& curve) {
    std::string out = "threshold,value\n";
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) out += fmt(curve.thresholds[i]) + "," + fmt(curve.values[i]) + "\n";
    return out;
}

std::string render_curve_pgm(const Curve& curve, int width, int height) {
    if (width < 16 || height < 16) throw InvalidArgument("plot is too small");
    std::vector<unsigned char> pixels(static_cast<std::size_t>(width) * height, 255);
    const int margin = 8;
    const int pw = width - 2 * margin;
    const int ph = height - 2 * margin;
    auto set = [&](int x, int y) {
        if (x >= 0 && y >= 0 && x < width && y < height) pixels[static_cast<std::size_t>(y) * width + x] = 0;
    };
    for (int x = margin; x < width - margin; ++x) set(x, height - margin);
    for (int y = margin; y <= height - margin; ++y) set(margin, y);
    auto to_px = [&](double t, double v) {
        return std::pair<int, int>{margin + static_cast<int>(std::lround(t * pw)),
                                   height - margin - static_cast<int>(std::lround(v * ph))};
    };
    for (std::size_t i = 1; i < curve.thresholds.size(); ++i) {
        auto [x0, y0] = to_px(curve.thresholds[i - 1], curve.values[i - 1]);
        auto [x1, y1] = to_px(curve.thresholds[i], curve.values[i]);
        const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
        for (int s = 0; s <= steps; ++s) {
            set(x0 + (x1 - x0) * s / steps, y0 + (y1 - y0) * s / steps);
        }
    }
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    return out;
}

}  // namespace evtrack

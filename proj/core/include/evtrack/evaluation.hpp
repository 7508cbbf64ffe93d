#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evtrack/events.hpp"
#include "evtrack/region.hpp"

namespace evtrack {

/// Predicted and ground-truth boxes, index-aligned.
struct TrackRun {
    std::string sequence;
    std::vector<BoundingBox> predicted;
    std::vector<BoundingBox> groundtruth;

    /// Throws InvalidArgument unless both lists are non-empty and equally long.
    void validate() const;
};

struct Curve {
    std::vector<double> thresholds;
    std::vector<double> values;

    /// Trapezoidal area under the curve.
    double area() const;
};

struct MetricReport {
    std::string sequence;
    double success_score = 0.0;
    double precision_score = 0.0;
    double success_rate = 0.0;
    Curve success_curve;
    Curve precision_curve;
};

inline constexpr int kThresholdGridPoints = 101;

/// Intersection over union of two axis-aligned boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Center distance divided by the ground-truth diagonal.
double normalized_center_distance(const BoundingBox& predicted, const BoundingBox& groundtruth);

/// Fraction of frames with IoU >= theta on a uniform grid over [0, 1]. Frames without any
/// overlap never count as successes.
Curve success_curve(const TrackRun& run, int points = kThresholdGridPoints);
double success_score(const TrackRun& run);

/// Fraction of frames with normalized center distance <= theta on a uniform grid over [0, 1].
Curve precision_curve(const TrackRun& run, int points = kThresholdGridPoints);
double precision_score(const TrackRun& run);

/// Fraction of frames with IoU strictly above 0.5.
double success_rate(const TrackRun& run);

MetricReport evaluate(const TrackRun& run);

/// Interpolates ground truth given at strictly increasing `times` to each query time. Throws
/// InvalidArgument when a query lies outside [times.front(), times.back()].
std::vector<BoundingBox> align_groundtruth(const std::vector<TimeUs>& times, const std::vector<BoundingBox>& boxes,
                                           const std::vector<TimeUs>& queries);

/// `sequence,success_score,precision_score,success_rate` with a header line.
std::string format_report_csv(const std::vector<MetricReport>& reports);
/// `threshold,value` with a header line.
std::string format_curve_csv(const Curve& curve);
/// Renders a curve as an 8-bit PGM plot (white background, black axes and line).
std::string render_curve_pgm(const Curve& curve, int width = 200, int height = 200);

}  // namespace evtrack

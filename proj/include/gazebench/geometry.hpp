#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace gazebench {

// Unit-normalized 2D point. Canonical storage is always [0,1]^2; clamping of
// parsed model output happens at the parsing edge, which keeps the raw value
// separately for diagnostics.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

// Axis-aligned head box in unit-normalized coordinates.
struct HeadBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool operator==(const HeadBox&) const = default;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    Point2 center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0}; }

    bool valid() const {
        return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
               std::isfinite(y_max) && 0.0 <= x_min && x_min < x_max && x_max <= 1.0 &&
               0.0 <= y_min && y_min < y_max && y_max <= 1.0;
    }
};

double iou(const HeadBox& a, const HeadBox& b);

namespace metrics {

// Euclidean distance in unit-normalized space.
inline double l2(const Point2& p, const Point2& q) {
    return std::hypot(p.x - q.x, p.y - q.y);
}

struct AvgMinL2 {
    double avg = 0.0;
    double min = 0.0;
};

enum class AvgL2Mode {
    per_annotation,  // mean of per-annotation distances (default)
    centroid,        // distance to the mean ground-truth point
};

// Distances of one predicted point against one or more ground-truth targets.
AvgMinL2 avg_min_l2(const Point2& pred, std::span<const Point2> gts,
                    AvgL2Mode mode = AvgL2Mode::per_annotation);

// Angle in degrees between the direction head-center -> pred and the
// direction head-center -> mean(ref_points). Returns nullopt when either
// direction is degenerate (norm <= eps); callers count those separately.
std::optional<double> angular_error_deg(const HeadBox& head, const Point2& pred,
                                        std::span<const Point2> ref_points,
                                        double eps = 1e-9);

// Average precision with step interpolation (no smoothing). Ranking is by
// score descending, ties kept in input order. Throws when there is no
// positive label.
double average_precision(std::span<const double> scores, const std::vector<bool>& labels);

struct Prf1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // Set when a zero denominator forced any of the values to 0.
    bool zero_division = false;
};

// Threshold classification metrics; prob >= threshold counts as positive
// (so the 0.5 parser fallback is deterministically positive).
Prf1 prf1(std::span<const double> probs, const std::vector<bool>& labels, double threshold = 0.5);

// Deterministic pairwise summation in input order.
double pairwise_sum(std::span<const double> v);

inline double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean of empty span");
    return pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace metrics
}  // namespace gazebench

#include "gazebench/geometry.hpp"

#include <algorithm>
#include <numeric>

namespace gazebench {

double iou(const HeadBox& a, const HeadBox& b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    if (inter <= 0.0) return 0.0;
    return inter / (a.area() + b.area() - inter);
}

namespace metrics {

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

AvgMinL2 avg_min_l2(const Point2& pred, std::span<const Point2> gts, AvgL2Mode mode) {
    if (gts.empty()) throw std::invalid_argument("avg_min_l2: empty ground-truth set");
    std::vector<double> dists;
    dists.reserve(gts.size());
    for (const Point2& g : gts) dists.push_back(l2(pred, g));
    AvgMinL2 out;
    out.min = *std::min_element(dists.begin(), dists.end());
    if (mode == AvgL2Mode::per_annotation) {
        out.avg = mean(dists);
    } else {
        Point2 centroid{};
        for (const Point2& g : gts) {
            centroid.x += g.x;
            centroid.y += g.y;
        }
        centroid.x /= static_cast<double>(gts.size());
        centroid.y /= static_cast<double>(gts.size());
        out.avg = l2(pred, centroid);
    }
    return out;
}

std::optional<double> angular_error_deg(const HeadBox& head, const Point2& pred,
                                        std::span<const Point2> ref_points, double eps) {
    if (ref_points.empty()) throw std::invalid_argument("angular_error: empty reference set");
    const Point2 c = head.center();
    Point2 ref{};
    for (const Point2& g : ref_points) {
        ref.x += g.x;
        ref.y += g.y;
    }
    ref.x /= static_cast<double>(ref_points.size());
    ref.y /= static_cast<double>(ref_points.size());

    const double dpx = pred.x - c.x, dpy = pred.y - c.y;
    const double drx = ref.x - c.x, dry = ref.y - c.y;
    const double np = std::hypot(dpx, dpy);
    const double nr = std::hypot(drx, dry);
    if (np <= eps || nr <= eps) return std::nullopt;

    const double dot = dpx * drx + dpy * dry;
    const double cross = dpx * dry - dpy * drx;
    // Exactly collinear directions get exact angles; the acos path would
    // pick up rounding noise from the norms.
    if (cross == 0.0) return dot >= 0.0 ? 0.0 : 180.0;
    double cosv = dot / (np * nr);
    cosv = std::clamp(cosv, -1.0, 1.0);
    return std::acos(cosv) * 180.0 / M_PI;
}

double average_precision(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw std::invalid_argument("average_precision: size mismatch or empty input");
    }
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    size_t total_pos = 0;
    for (size_t i = 0; i < n; ++i) total_pos += labels[i] ? 1 : 0;
    if (total_pos == 0) throw std::invalid_argument("AP undefined: no positive labels");

    // Step interpolation: sum (R_k - R_{k-1}) * P_k at ranks where recall
    // increases, i.e. at each positive.
    double ap = 0.0;
    double prev_recall = 0.0;
    size_t tp = 0;
    for (size_t k = 0; k < n; ++k) {
        if (!labels[order[k]]) continue;
        ++tp;
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

Prf1 prf1(std::span<const double> probs, const std::vector<bool>& labels, double threshold) {
    if (probs.size() != labels.size() || probs.empty()) {
        throw std::invalid_argument("prf1: size mismatch or empty input");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("prf1: threshold must be in (0,1)");
    }
    size_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
        const bool pred = probs[i] >= threshold;
        if (pred && labels[i]) ++tp;
        else if (pred && !labels[i]) ++fp;
        else if (!pred && labels[i]) ++fn;
    }
    Prf1 r;
    r.zero_division = (tp + fp == 0) || (tp + fn == 0);
    r.precision = (tp + fp == 0) ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    r.recall = (tp + fn == 0) ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    r.f1 = (r.precision == 0.0 || r.recall == 0.0)
               ? 0.0
               : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

}  // namespace metrics
}  // namespace gazebench

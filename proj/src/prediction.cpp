#include "gazebench/prediction.hpp"

#include <stdexcept>

namespace gazebench {

std::string to_string(TaskKind t) {
    switch (t) {
        case TaskKind::GFo_point: return "GFo_point";
        case TaskKind::GFo_inout: return "GFo_inout";
        case TaskKind::SG_LAEO: return "SG_LAEO";
        case TaskKind::SG_LAH: return "SG_LAH";
        case TaskKind::SG_SA: return "SG_SA";
        case TaskKind::probe: return "probe";
    }
    throw std::logic_error("bad TaskKind");
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "GFo_point") return TaskKind::GFo_point;
    if (s == "GFo_inout") return TaskKind::GFo_inout;
    if (s == "SG_LAEO") return TaskKind::SG_LAEO;
    if (s == "SG_LAH") return TaskKind::SG_LAH;
    if (s == "SG_SA") return TaskKind::SG_SA;
    if (s == "probe") return TaskKind::probe;
    throw std::runtime_error("unknown task kind: " + s);
}

std::string to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::ok: return "ok";
        case ParseStatus::clamped: return "clamped";
        case ParseStatus::fallback: return "fallback";
    }
    throw std::logic_error("bad ParseStatus");
}

namespace metrics {

PredictionRecord best_of_n(std::span<const PredictionRecord> preds, std::span<const Point2> gts) {
    if (preds.empty()) throw std::invalid_argument("best_of_n: empty prediction pool");
    if (gts.empty()) throw std::invalid_argument("best_of_n: empty ground-truth set");
    const PredictionRecord* best = nullptr;
    double best_dist = 0.0;
    for (const PredictionRecord& p : preds) {
        if (p.task != TaskKind::GFo_point || p.sample_id != preds.front().sample_id) {
            throw std::invalid_argument("best_of_n: pool must be GFo_point for one sample");
        }
        if (!p.point) throw std::invalid_argument("best_of_n: prediction without a point");
        const double d = avg_min_l2(*p.point, gts).min;
        if (!best || d < best_dist ||
            (d == best_dist && p.decode_tag.sample_index < best->decode_tag.sample_index)) {
            best = &p;
            best_dist = d;
        }
    }
    PredictionRecord out = *best;
    out.oracle = true;
    return out;
}

PredictionRecord average_of_n(std::span<const PredictionRecord> preds) {
    if (preds.empty()) throw std::invalid_argument("average_of_n: empty prediction pool");
    const TaskKind task = preds.front().task;
    PredictionRecord out = preds.front();
    double sx = 0.0, sy = 0.0, sp = 0.0;
    size_t n_point = 0, n_pio = 0;
    bool points_identical = true, pio_identical = true;
    ParseStatus status = ParseStatus::ok;
    for (const PredictionRecord& p : preds) {
        if (p.task != task || p.sample_id != out.sample_id) {
            throw std::invalid_argument("average_of_n: heterogeneous pool");
        }
        if (p.point) {
            sx += p.point->x;
            sy += p.point->y;
            ++n_point;
            points_identical = points_identical && p.point == preds.front().point;
        }
        if (p.p_io) {
            sp += *p.p_io;
            ++n_pio;
            pio_identical = pio_identical && p.p_io == preds.front().p_io;
        }
        if (p.parse_status == ParseStatus::fallback) status = ParseStatus::fallback;
        else if (p.parse_status == ParseStatus::clamped && status == ParseStatus::ok)
            status = ParseStatus::clamped;
    }
    // Keep the mean exactly idempotent on identical inputs despite rounding.
    if (n_point > 0) {
        out.point = points_identical && preds.front().point
                        ? *preds.front().point
                        : Point2{sx / static_cast<double>(n_point),
                                 sy / static_cast<double>(n_point)};
    }
    if (n_pio > 0) {
        out.p_io = pio_identical && preds.front().p_io ? *preds.front().p_io
                                                       : sp / static_cast<double>(n_pio);
    }
    if (task == TaskKind::SG_LAEO || task == TaskKind::SG_LAH || task == TaskKind::SG_SA) {
        double s = 0.0;
        bool identical = true;
        for (const PredictionRecord& p : preds) {
            s += p.p_sg.value_or(0.5);
            identical = identical && p.p_sg == preds.front().p_sg;
        }
        out.p_sg = identical && preds.front().p_sg ? *preds.front().p_sg
                                                   : s / static_cast<double>(preds.size());
    }
    out.parse_status = status;
    out.decode_tag.sample_index = 0;
    return out;
}

}  // namespace metrics
}  // namespace gazebench

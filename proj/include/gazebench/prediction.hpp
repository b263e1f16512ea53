#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazebench/geometry.hpp"

namespace gazebench {

enum class TaskKind { GFo_point, GFo_inout, SG_LAEO, SG_LAH, SG_SA, probe };

std::string to_string(TaskKind t);
TaskKind task_kind_from_string(const std::string& s);

enum class ParseStatus { ok, clamped, fallback };

std::string to_string(ParseStatus s);

struct DecodeTag {
    double temperature = 0.0;
    int sample_index = 0;

    bool operator==(const DecodeTag&) const = default;
};

// Typed result of parsing one raw model response for one sample.
struct PredictionRecord {
    std::string sample_id;
    TaskKind task = TaskKind::GFo_point;
    std::optional<double> p_io;
    std::optional<Point2> point;
    std::optional<double> p_sg;
    ParseStatus parse_status = ParseStatus::ok;
    DecodeTag decode_tag;
    // Set on aggregated records produced by an oracle selector (Best-of-N).
    bool oracle = false;

    bool operator==(const PredictionRecord&) const = default;
};

namespace metrics {

// Oracle selection: the sampled prediction whose point is closest (min over
// the ground-truth set) wins; ties go to the lowest sample_index. The result
// is flagged oracle=true so reports can mark it as an upper bound.
PredictionRecord best_of_n(std::span<const PredictionRecord> preds, std::span<const Point2> gts);

// Coordinate-wise mean of points and probabilities over a homogeneous pool.
PredictionRecord average_of_n(std::span<const PredictionRecord> preds);

}  // namespace metrics
}  // namespace gazebench

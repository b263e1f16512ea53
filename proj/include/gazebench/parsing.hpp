#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "gazebench/prediction.hpp"
#include "gazebench/prompting.hpp"

namespace gazebench::parsing {

enum class FailureReason { no_json, bad_schema, non_numeric, out_of_range_hard, empty_text };
std::string to_string(FailureReason r);

struct ParseOutcome {
    PredictionRecord prediction;
    ParseStatus status = ParseStatus::ok;
    std::optional<FailureReason> failure_reason;
    // Lenient repairs (trailing commas, single quotes, bare yes/no) are
    // accepted but flagged so strict-only metrics stay recomputable.
    bool lenient = false;
    std::string raw_excerpt;  // first 256 chars of the matched region

    // Raw values before clamping, for diagnostics.
    std::optional<double> raw_p_io;
    std::optional<Point2> raw_point;
    std::optional<double> raw_p_sg;
};

// Locates the JSON answer region. Search order: last fenced json block after
// the last task-marker heading, then the last fenced json block anywhere,
// then the last bracket-balanced array/object. Total on arbitrary strings.
std::optional<std::string> extract_json_region(std::string_view text);

// Parses a gaze-following answer ({"inout": p, "gaze_point": [x,y]}, array
// wrapper optional, either field alone for decoupled queries). Never throws;
// failures become the fixed fallback (0.5, (0.5,0.5)).
ParseOutcome parse_gaze(std::string_view text, prompting::CoordScale scale);

// Parses a social-gaze answer ({"label": p}); bare yes/no is accepted on the
// lenient path. Fallback p_sg = 0.5.
ParseOutcome parse_social(std::string_view text);

// First yes/no token decides; anything else is a fallback (counted incorrect
// in probe accuracy).
struct YesNoOutcome {
    std::optional<bool> value;
    ParseStatus status = ParseStatus::ok;
};
YesNoOutcome parse_yesno(std::string_view text);

}  // namespace gazebench::parsing

#include "gazebench/parsing.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "gazebench/jsonl.hpp"

namespace gazebench::parsing {

std::string to_string(FailureReason r) {
    switch (r) {
        case FailureReason::no_json: return "no_json";
        case FailureReason::bad_schema: return "bad_schema";
        case FailureReason::non_numeric: return "non_numeric";
        case FailureReason::out_of_range_hard: return "out_of_range_hard";
        case FailureReason::empty_text: return "empty_text";
    }
    return "unknown";
}

namespace {

constexpr std::array<std::string_view, 2> kTaskMarkers = {"### Gaze Point ###",
                                                          "### Social Gaze Label ###"};

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Last ```json fence at or after `from`; returns the inner content.
std::optional<std::string> last_fenced_json(std::string_view text, size_t from) {
    size_t best = std::string_view::npos;
    size_t pos = from;
    while (true) {
        const size_t hit = text.find("```json", pos);
        if (hit == std::string_view::npos) break;
        best = hit;
        pos = hit + 7;
    }
    if (best == std::string_view::npos) return std::nullopt;
    size_t start = best + 7;
    // Skip to the end of the fence line.
    while (start < text.size() && text[start] != '\n') ++start;
    if (start < text.size()) ++start;
    size_t end = text.find("```", start);
    if (end == std::string_view::npos) end = text.size();  // truncated generation
    return std::string(trim(text.substr(start, end - start)));
}

// Last top-level bracket-balanced [..] or {..} region, skipping brackets
// inside double-quoted strings.
std::optional<std::string> last_balanced_region(std::string_view text) {
    std::optional<std::pair<size_t, size_t>> last;
    size_t depth = 0;
    size_t open_pos = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
            continue;
        }
        if (c == '[' || c == '{') {
            if (depth == 0) open_pos = i;
            ++depth;
        } else if (c == ']' || c == '}') {
            if (depth > 0) {
                --depth;
                if (depth == 0) last = {open_pos, i};
            }
        }
    }
    if (!last) return std::nullopt;
    return std::string(text.substr(last->first, last->second - last->first + 1));
}

// Repairs common near-JSON: single-quoted strings and trailing commas.
std::string lenient_repair(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_double = false, in_single = false, escaped = false;
    for (char c : s) {
        if (escaped) {
            out += c;
            escaped = false;
            continue;
        }
        if (c == '\\') {
            out += c;
            escaped = true;
            continue;
        }
        if (in_double) {
            if (c == '"') in_double = false;
            out += c;
            continue;
        }
        if (in_single) {
            if (c == '\'') {
                in_single = false;
                out += '"';
            } else if (c == '"') {
                out += "\\\"";
            } else {
                out += c;
            }
            continue;
        }
        if (c == '"') {
            in_double = true;
            out += c;
        } else if (c == '\'') {
            in_single = true;
            out += '"';
        } else {
            out += c;
        }
    }
    // Strip trailing commas before closing brackets.
    std::string stripped;
    stripped.reserve(out.size());
    for (size_t i = 0; i < out.size(); ++i) {
        if (out[i] == ',') {
            size_t k = i + 1;
            while (k < out.size() && std::isspace(static_cast<unsigned char>(out[k]))) ++k;
            if (k < out.size() && (out[k] == '}' || out[k] == ']')) continue;
        }
        stripped += out[i];
    }
    return stripped;
}

struct JsonCandidate {
    json value;
    bool lenient = false;
};

std::optional<JsonCandidate> parse_region(const std::string& region) {
    json j = json::parse(region, nullptr, false);
    if (!j.is_discarded()) return JsonCandidate{std::move(j), false};
    json repaired = json::parse(lenient_repair(region), nullptr, false);
    if (!repaired.is_discarded()) return JsonCandidate{std::move(repaired), true};
    return std::nullopt;
}

std::string excerpt_of(std::string_view s) { return std::string(s.substr(0, 256)); }

// Unwraps the optional single-element array around the answer object.
const json* answer_object(const json& j) {
    if (j.is_object()) return &j;
    if (j.is_array() && !j.empty() && j[0].is_object()) return &j[0];
    return nullptr;
}

ParseOutcome gaze_fallback(FailureReason reason, std::string_view excerpt) {
    ParseOutcome out;
    out.status = ParseStatus::fallback;
    out.failure_reason = reason;
    out.raw_excerpt = excerpt_of(excerpt);
    out.prediction.task = TaskKind::GFo_point;
    out.prediction.p_io = 0.5;
    out.prediction.point = Point2{0.5, 0.5};
    out.prediction.parse_status = ParseStatus::fallback;
    return out;
}

ParseOutcome social_fallback(FailureReason reason, std::string_view excerpt) {
    ParseOutcome out;
    out.status = ParseStatus::fallback;
    out.failure_reason = reason;
    out.raw_excerpt = excerpt_of(excerpt);
    out.prediction.task = TaskKind::SG_LAEO;
    out.prediction.p_sg = 0.5;
    out.prediction.parse_status = ParseStatus::fallback;
    return out;
}

}  // namespace

std::optional<std::string> extract_json_region(std::string_view text) {
    size_t marker_end = std::string_view::npos;
    for (std::string_view marker : kTaskMarkers) {
        const size_t hit = text.rfind(marker);
        if (hit != std::string_view::npos) {
            const size_t end = hit + marker.size();
            if (marker_end == std::string_view::npos || end > marker_end) marker_end = end;
        }
    }
    if (marker_end != std::string_view::npos) {
        if (auto region = last_fenced_json(text, marker_end)) return region;
    }
    if (auto region = last_fenced_json(text, 0)) return region;
    return last_balanced_region(text);
}

ParseOutcome parse_gaze(std::string_view text, prompting::CoordScale scale) {
    if (trim(text).empty()) return gaze_fallback(FailureReason::empty_text, text);
    auto region = extract_json_region(text);
    if (!region) return gaze_fallback(FailureReason::no_json, text);
    auto candidate = parse_region(*region);
    if (!candidate) return gaze_fallback(FailureReason::no_json, *region);
    const json* obj = answer_object(candidate->value);
    if (!obj) return gaze_fallback(FailureReason::bad_schema, *region);

    const bool has_inout = obj->contains("inout");
    const bool has_point = obj->contains("gaze_point");
    if (!has_inout && !has_point) return gaze_fallback(FailureReason::bad_schema, *region);

    const double scale_mult = scale == prompting::CoordScale::thousand ? 1000.0 : 1.0;
    ParseOutcome out;
    out.lenient = candidate->lenient;
    out.raw_excerpt = excerpt_of(*region);
    out.prediction.task = has_point ? TaskKind::GFo_point : TaskKind::GFo_inout;
    bool clamped = false;

    if (has_inout) {
        const json& v = obj->at("inout");
        if (!v.is_number()) return gaze_fallback(FailureReason::non_numeric, *region);
        const double raw = v.get<double>();
        if (!std::isfinite(raw) || std::fabs(raw) > 10.0) {
            return gaze_fallback(FailureReason::out_of_range_hard, *region);
        }
        out.raw_p_io = raw;
        const double p = std::clamp(raw, 0.0, 1.0);
        if (p != raw) clamped = true;
        out.prediction.p_io = p;
    }
    if (has_point) {
        const json& v = obj->at("gaze_point");
        if (!v.is_array() || v.size() != 2) {
            return gaze_fallback(FailureReason::bad_schema, *region);
        }
        if (!v[0].is_number() || !v[1].is_number()) {
            return gaze_fallback(FailureReason::non_numeric, *region);
        }
        const double rx = v[0].get<double>();
        const double ry = v[1].get<double>();
        if (!std::isfinite(rx) || !std::isfinite(ry) || std::fabs(rx) > 10.0 * scale_mult ||
            std::fabs(ry) > 10.0 * scale_mult) {
            return gaze_fallback(FailureReason::out_of_range_hard, *region);
        }
        out.raw_point = Point2{rx, ry};
        double x = rx / scale_mult;
        double y = ry / scale_mult;
        const double cx = std::clamp(x, 0.0, 1.0);
        const double cy = std::clamp(y, 0.0, 1.0);
        if (cx != x || cy != y) clamped = true;
        out.prediction.point = Point2{cx, cy};
    }
    out.status = clamped ? ParseStatus::clamped : ParseStatus::ok;
    out.prediction.parse_status = out.status;
    return out;
}

ParseOutcome parse_social(std::string_view text) {
    const std::string_view trimmed = trim(text);
    if (trimmed.empty()) return social_fallback(FailureReason::empty_text, text);

    // Lenient path: a bare yes/no answer (<= 8 chars after trim).
    if (trimmed.size() <= 8) {
        std::string low;
        for (char c : trimmed) {
            if (std::isalpha(static_cast<unsigned char>(c))) {
                low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            } else if (!std::ispunct(static_cast<unsigned char>(c)) &&
                       !std::isspace(static_cast<unsigned char>(c))) {
                low.clear();
                break;
            }
        }
        if (low == "yes" || low == "no") {
            ParseOutcome out;
            out.lenient = true;
            out.raw_excerpt = excerpt_of(trimmed);
            out.prediction.task = TaskKind::SG_LAEO;
            out.prediction.p_sg = low == "yes" ? 1.0 : 0.0;
            out.raw_p_sg = out.prediction.p_sg;
            return out;
        }
    }

    auto region = extract_json_region(text);
    if (!region) return social_fallback(FailureReason::no_json, text);
    auto candidate = parse_region(*region);
    if (!candidate) return social_fallback(FailureReason::no_json, *region);
    const json* obj = answer_object(candidate->value);
    if (!obj || !obj->contains("label")) return social_fallback(FailureReason::bad_schema, *region);

    const json& v = obj->at("label");
    if (!v.is_number()) return social_fallback(FailureReason::non_numeric, *region);
    const double raw = v.get<double>();
    if (!std::isfinite(raw) || std::fabs(raw) > 10.0) {
        return social_fallback(FailureReason::out_of_range_hard, *region);
    }
    ParseOutcome out;
    out.lenient = candidate->lenient;
    out.raw_excerpt = excerpt_of(*region);
    out.raw_p_sg = raw;
    const double p = std::clamp(raw, 0.0, 1.0);
    out.status = p != raw ? ParseStatus::clamped : ParseStatus::ok;
    out.prediction.task = TaskKind::SG_LAEO;
    out.prediction.p_sg = p;
    out.prediction.parse_status = out.status;
    return out;
}

YesNoOutcome parse_yesno(std::string_view text) {
    std::string token;
    for (size_t i = 0; i <= text.size(); ++i) {
        const bool alpha = i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]));
        if (alpha) {
            token += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
            continue;
        }
        if (!token.empty()) {
            if (token == "yes") return {true, ParseStatus::ok};
            if (token == "no") return {false, ParseStatus::ok};
            token.clear();
        }
    }
    return {std::nullopt, ParseStatus::fallback};
}

}  // namespace gazebench::parsing

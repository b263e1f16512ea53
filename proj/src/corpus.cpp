#include "gazebench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gazebench/rng.hpp"

namespace gazebench::corpus {

namespace {

double round_half_up(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::floor(v * scale + 0.5) / scale;
}

std::optional<double> get_number(const json& row, const std::string& col) {
    if (col.empty() || !row.contains(col)) return std::nullopt;
    const json& v = row.at(col);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        try {
            size_t pos = 0;
            double d = std::stod(v.get<std::string>(), &pos);
            if (pos == v.get<std::string>().size()) return d;
        } catch (...) {
        }
    }
    return std::nullopt;
}

std::optional<std::string> get_string(const json& row, const std::string& col) {
    if (col.empty() || !row.contains(col)) return std::nullopt;
    const json& v = row.at(col);
    if (v.is_string()) return v.get<std::string>();
    return std::nullopt;
}

// Normalizes one coordinate with a 1 px clamping tolerance. Returns nullopt
// when the value lies outside the image by more than the tolerance.
std::optional<double> normalize_coord(double v, double extent, bool pixel_space) {
    const double tol = pixel_space ? 1.0 : 1.0 / extent;
    double unit = pixel_space ? v / extent : v;
    const double unit_tol = pixel_space ? tol / extent : tol;
    if (unit < -unit_tol || unit > 1.0 + unit_tol) return std::nullopt;
    unit = std::clamp(unit, 0.0, 1.0);
    if (pixel_space) unit = round_half_up(unit, 4);
    return unit;
}

struct BoxParse {
    std::optional<HeadBox> box;
    std::string error;
};

BoxParse parse_box(const json& row, const std::vector<std::string>& cols, bool pixel_space,
                   int width, int height) {
    if (cols.size() != 4) return {std::nullopt, "mapping must list 4 box columns"};
    double raw[4];
    for (int i = 0; i < 4; ++i) {
        auto v = get_number(row, cols[i]);
        if (!v) return {std::nullopt, "missing box column '" + cols[i] + "'"};
        raw[i] = *v;
    }
    auto x0 = normalize_coord(raw[0], width, pixel_space);
    auto y0 = normalize_coord(raw[1], height, pixel_space);
    auto x1 = normalize_coord(raw[2], width, pixel_space);
    auto y1 = normalize_coord(raw[3], height, pixel_space);
    if (!x0 || !y0 || !x1 || !y1) return {std::nullopt, "box outside image"};
    HeadBox b{*x0, *y0, *x1, *y1};
    if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max)) return {std::nullopt, "degenerate box"};
    return {b, {}};
}

std::optional<std::pair<int, int>> resolve_size(const json& row, const ColumnMapping& m,
                                                const std::string& image_ref,
                                                const ImageSizeLookup& lookup) {
    auto w = get_number(row, m.width);
    auto h = get_number(row, m.height);
    if (w && h && *w > 0 && *h > 0) return std::make_pair(static_cast<int>(*w), static_cast<int>(*h));
    if (lookup) return lookup(image_ref);
    return std::nullopt;
}

}  // namespace

ColumnMapping ColumnMapping::from_json(const json& j) {
    ColumnMapping m;
    if (j.contains("image")) m.image = j.at("image").get<std::string>();
    if (j.contains("head_box")) m.head_box = j.at("head_box").get<std::vector<std::string>>();
    if (j.contains("coords")) m.coords = j.at("coords").get<std::string>();
    if (j.contains("gaze_x")) m.gaze_x = j.at("gaze_x").get<std::string>();
    if (j.contains("gaze_y")) m.gaze_y = j.at("gaze_y").get<std::string>();
    if (j.contains("gaze_points")) m.gaze_points = j.at("gaze_points").get<std::string>();
    if (j.contains("inout")) m.inout = j.at("inout").get<std::string>();
    if (j.contains("split")) m.split = j.at("split").get<std::string>();
    if (j.contains("frame")) m.frame = j.at("frame").get<std::string>();
    if (j.contains("video")) m.video = j.at("video").get<std::string>();
    if (j.contains("id")) m.id = j.at("id").get<std::string>();
    if (j.contains("width")) m.width = j.at("width").get<std::string>();
    if (j.contains("height")) m.height = j.at("height").get<std::string>();
    if (j.contains("default_split")) m.default_split = j.at("default_split").get<std::string>();
    return m;
}

IngestResult ingest_gaze_annotations(const std::vector<json>& rows, DatasetId dataset_id,
                                     const ColumnMapping& mapping,
                                     const ImageSizeLookup& size_lookup) {
    IngestResult out;
    const bool pixel_space = mapping.coords == "pixel";

    struct Pending {
        GazeSample sample;
        size_t first_row;
    };
    // Group multi-annotator rows by (image_ref, head box).
    std::map<std::tuple<std::string, double, double, double, double>, Pending> groups;

    for (size_t i = 0; i < rows.size(); ++i) {
        const json& row = rows[i];
        if (!row.is_object()) {
            out.rejections.push_back({i, "row is not an object"});
            continue;
        }
        auto image_ref = get_string(row, mapping.image);
        if (!image_ref) {
            out.rejections.push_back({i, "missing image column '" + mapping.image + "'"});
            continue;
        }
        auto size = resolve_size(row, mapping, *image_ref, size_lookup);
        if (!size) {
            out.rejections.push_back({i, "unresolved image dimensions for " + *image_ref});
            continue;
        }
        auto [w, h] = *size;
        auto box = parse_box(row, mapping.head_box, pixel_space, w, h);
        if (!box.box) {
            out.rejections.push_back({i, box.error});
            continue;
        }

        std::vector<Point2> gaze;
        if (!mapping.gaze_points.empty() && row.contains(mapping.gaze_points)) {
            const json& pts = row.at(mapping.gaze_points);
            if (!pts.is_array()) {
                out.rejections.push_back({i, "gaze_points column is not an array"});
                continue;
            }
            bool bad = false;
            for (const auto& p : pts) {
                if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                    bad = true;
                    break;
                }
                auto gx = normalize_coord(p[0].get<double>(), w, pixel_space);
                auto gy = normalize_coord(p[1].get<double>(), h, pixel_space);
                if (!gx || !gy) {
                    bad = true;
                    break;
                }
                gaze.push_back(Point2{*gx, *gy});
            }
            if (bad) {
                out.rejections.push_back({i, "malformed gaze point"});
                continue;
            }
        } else {
            auto gx = get_number(row, mapping.gaze_x);
            auto gy = get_number(row, mapping.gaze_y);
            if (gx && gy) {
                auto nx = normalize_coord(*gx, w, pixel_space);
                auto ny = normalize_coord(*gy, h, pixel_space);
                if (!nx || !ny) {
                    out.rejections.push_back({i, "gaze point outside image"});
                    continue;
                }
                gaze.push_back(Point2{*nx, *ny});
            }
        }

        std::optional<bool> inout;
        if (!mapping.inout.empty() && row.contains(mapping.inout)) {
            const json& v = row.at(mapping.inout);
            if (v.is_boolean()) inout = v.get<bool>();
            else if (v.is_number()) inout = v.get<double>() >= 0.5;
            else {
                out.rejections.push_back({i, "inout column is neither bool nor number"});
                continue;
            }
        }
        if (gaze.empty() && (!inout || *inout)) {
            out.rejections.push_back({i, "no gaze point on an in-frame (or unlabeled) sample"});
            continue;
        }

        const HeadBox& b = *box.box;
        auto key = std::make_tuple(*image_ref, b.x_min, b.y_min, b.x_max, b.y_max);
        auto it = groups.find(key);
        if (it == groups.end()) {
            GazeSample s;
            s.dataset_id = dataset_id;
            s.image_ref = *image_ref;
            s.image_width = w;
            s.image_height = h;
            s.head = b;
            s.gaze_points = gaze;
            s.inout_label = inout;
            auto split_str = get_string(row, mapping.split);
            s.split = split_from_string(split_str.value_or(mapping.default_split));
            if (auto f = get_number(row, mapping.frame)) s.frame_index = static_cast<int64_t>(*f);
            if (auto v = get_string(row, mapping.video)) s.video_id = *v;
            if (auto id = get_string(row, mapping.id)) s.sample_id = *id;
            groups.emplace(key, Pending{std::move(s), i});
        } else {
            // Additional annotator row for the same person.
            for (const Point2& p : gaze) it->second.sample.gaze_points.push_back(p);
            if (inout && !it->second.sample.inout_label) it->second.sample.inout_label = inout;
        }
    }

    for (auto& [key, pending] : groups) out.samples.push_back(std::move(pending.sample));
    std::sort(out.samples.begin(), out.samples.end(),
              [](const GazeSample& a, const GazeSample& b) { return canonical_less(a, b); });
    // Synthesize stable ids for rows that brought none.
    const std::string ds = to_string(dataset_id);
    for (size_t i = 0; i < out.samples.size(); ++i) {
        if (out.samples[i].sample_id.empty()) {
            out.samples[i].sample_id = ds + ":" + std::to_string(i);
        }
    }
    return out;
}

SocialColumnMapping SocialColumnMapping::from_json(const json& j) {
    SocialColumnMapping m;
    if (j.contains("image")) m.image = j.at("image").get<std::string>();
    if (j.contains("head_a")) m.head_a = j.at("head_a").get<std::vector<std::string>>();
    if (j.contains("head_b")) m.head_b = j.at("head_b").get<std::vector<std::string>>();
    if (j.contains("coords")) m.coords = j.at("coords").get<std::string>();
    if (j.contains("task")) m.task = j.at("task").get<std::string>();
    if (j.contains("label")) m.label = j.at("label").get<std::string>();
    if (j.contains("frame")) m.frame = j.at("frame").get<std::string>();
    if (j.contains("video")) m.video = j.at("video").get<std::string>();
    if (j.contains("id")) m.id = j.at("id").get<std::string>();
    if (j.contains("width")) m.width = j.at("width").get<std::string>();
    if (j.contains("height")) m.height = j.at("height").get<std::string>();
    return m;
}

SocialIngestResult ingest_social_annotations(const std::vector<json>& rows, DatasetId dataset_id,
                                             const SocialColumnMapping& mapping,
                                             const ImageSizeLookup& size_lookup) {
    SocialIngestResult out;
    const bool pixel_space = mapping.coords == "pixel";
    for (size_t i = 0; i < rows.size(); ++i) {
        const json& row = rows[i];
        if (!row.is_object()) {
            out.rejections.push_back({i, "row is not an object"});
            continue;
        }
        auto image_ref = get_string(row, mapping.image);
        if (!image_ref) {
            out.rejections.push_back({i, "missing image column"});
            continue;
        }
        auto w = get_number(row, mapping.width);
        auto h = get_number(row, mapping.height);
        std::optional<std::pair<int, int>> size;
        if (w && h && *w > 0 && *h > 0) size = std::make_pair((int)*w, (int)*h);
        else if (size_lookup) size = size_lookup(*image_ref);
        if (!size) {
            out.rejections.push_back({i, "unresolved image dimensions for " + *image_ref});
            continue;
        }
        auto a = parse_box(row, mapping.head_a, pixel_space, size->first, size->second);
        auto b = parse_box(row, mapping.head_b, pixel_space, size->first, size->second);
        if (!a.box || !b.box) {
            out.rejections.push_back({i, !a.box ? "head_a: " + a.error : "head_b: " + b.error});
            continue;
        }
        if (*a.box == *b.box) {
            out.rejections.push_back({i, "identical head boxes"});
            continue;
        }
        auto task_str = get_string(row, mapping.task);
        if (!task_str) {
            out.rejections.push_back({i, "missing task column"});
            continue;
        }
        SocialPair p;
        try {
            p.task = social_task_from_string(*task_str);
        } catch (const std::exception&) {
            out.rejections.push_back({i, "unknown task '" + *task_str + "'"});
            continue;
        }
        const json& lv = row.contains(mapping.label) ? row.at(mapping.label) : json();
        if (lv.is_boolean()) p.label = lv.get<bool>();
        else if (lv.is_number()) p.label = lv.get<double>() >= 0.5;
        else {
            out.rejections.push_back({i, "missing or non-boolean label"});
            continue;
        }
        p.dataset_id = dataset_id;
        p.image_ref = *image_ref;
        p.image_width = size->first;
        p.image_height = size->second;
        p.head_a = *a.box;
        p.head_b = *b.box;
        p.ordered = p.task == SocialTask::LAH;
        if (auto f = get_number(row, mapping.frame)) p.frame_index = static_cast<int64_t>(*f);
        if (auto v = get_string(row, mapping.video)) p.video_id = *v;
        if (auto id = get_string(row, mapping.id)) p.pair_id = *id;
        out.pairs.push_back(std::move(p));
    }
    std::sort(out.pairs.begin(), out.pairs.end(),
              [](const SocialPair& a, const SocialPair& b) { return canonical_less(a, b); });
    const std::string ds = to_string(dataset_id);
    for (size_t i = 0; i < out.pairs.size(); ++i) {
        if (out.pairs[i].pair_id.empty()) out.pairs[i].pair_id = ds + ":pair:" + std::to_string(i);
    }
    return out;
}

namespace {

const std::string& record_id(const GazeSample& s) { return s.sample_id; }
const std::string& record_id(const SocialPair& p) { return p.pair_id; }

template <typename Record>
std::vector<Record> subsample_impl(const std::vector<Record>& records, int stride,
                                   const char* what) {
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    if (stride == 1) return records;
    std::vector<Record> out;
    out.reserve(records.size() / stride + 1);
    for (const Record& r : records) {
        if (!r.frame_index) {
            std::ostringstream ss;
            ss << "subsample_frames: " << what << " '" << record_id(r) << "' has no frame_index";
            throw std::runtime_error(ss.str());
        }
        if (*r.frame_index % stride == 0) out.push_back(r);
    }
    return out;
}

}  // namespace

std::vector<GazeSample> subsample_frames(const std::vector<GazeSample>& samples, int stride) {
    return subsample_impl(samples, stride, "sample");
}

std::vector<SocialPair> subsample_frames(const std::vector<SocialPair>& pairs, int stride) {
    return subsample_impl(pairs, stride, "pair");
}

FilterResult filter_social_annotations(const std::vector<SocialPair>& pairs,
                                       const EventLookup& events, const SamplingConfig& cfg) {
    FilterResult out;
    for (const SocialPair& p : pairs) {
        const double min_area = std::min(p.head_a.area(), p.head_b.area());
        if (min_area < cfg.min_head_area_frac) {
            ++out.counts.removed_small_head;
            continue;
        }
        if (p.label && cfg.boundary_margin_frames > 0 && p.frame_index) {
            auto it = events.find(p.pair_id);
            bool near_boundary = false;
            if (it != events.end()) {
                for (const EventInterval& ev : it->second) {
                    if (std::llabs(*p.frame_index - ev.start) <= cfg.boundary_margin_frames ||
                        std::llabs(*p.frame_index - ev.end) <= cfg.boundary_margin_frames) {
                        near_boundary = true;
                        break;
                    }
                }
            }
            if (near_boundary) {
                ++out.counts.removed_event_boundary;
                continue;
            }
        }
        out.pairs.push_back(p);
        ++out.counts.kept;
    }
    return out;
}

DedupResult dedup_unordered(const std::vector<SocialPair>& pairs) {
    DedupResult out;
    out.ordered_count = pairs.size();
    std::set<std::tuple<std::string, int64_t, std::string, double, double, double, double, double,
                        double, double, double, bool>>
        seen;
    for (const SocialPair& p : pairs) {
        if (p.task == SocialTask::LAH) {
            out.pairs.push_back(p);
            continue;
        }
        const HeadBox* lo = &p.head_a;
        const HeadBox* hi = &p.head_b;
        auto key_of = [](const HeadBox& b) {
            return std::make_tuple(b.x_min, b.y_min, b.x_max, b.y_max);
        };
        if (key_of(*hi) < key_of(*lo)) std::swap(lo, hi);
        auto key = std::make_tuple(p.image_ref, p.frame_index.value_or(-1), to_string(p.task),
                                   lo->x_min, lo->y_min, lo->x_max, lo->y_max, hi->x_min,
                                   hi->y_min, hi->x_max, hi->y_max, p.label);
        if (seen.insert(key).second) {
            SocialPair q = p;
            q.ordered = false;
            out.pairs.push_back(std::move(q));
        }
    }
    out.unordered_count = out.pairs.size();
    return out;
}

BalancedSample sample_balanced_pairs(const std::vector<SocialPair>& positives,
                                     const std::vector<SocialPair>& candidate_negatives,
                                     const SamplingConfig& cfg) {
    if (cfg.negatives_per_positive <= 0.0) {
        throw std::invalid_argument("negatives_per_positive must be > 0");
    }
    BalancedSample out;
    Rng rng(cfg.rng_seed);
    for (SocialTask task : {SocialTask::LAEO, SocialTask::LAH, SocialTask::SA}) {
        std::vector<SocialPair> pos, neg;
        for (const SocialPair& p : positives) {
            if (p.task == task) {
                if (!p.label) throw std::invalid_argument("negative pair in positives input");
                pos.push_back(p);
            }
        }
        for (const SocialPair& p : candidate_negatives) {
            if (p.task == task) {
                if (p.label) throw std::invalid_argument("positive pair in negatives input");
                neg.push_back(p);
            }
        }
        const std::string task_name = to_string(task);
        out.positives_per_task[task_name] = pos.size();
        if (pos.empty()) {
            out.negatives_per_task[task_name] = 0;
            continue;
        }
        const auto needed = static_cast<size_t>(
            std::ceil(cfg.negatives_per_positive * static_cast<double>(pos.size())));
        if (neg.size() < needed) {
            std::ostringstream ss;
            ss << "insufficient negatives for " << task_name << ": need " << needed << ", have "
               << neg.size() << " (deficit " << needed - neg.size() << ")";
            throw std::runtime_error(ss.str());
        }
        // Partial Fisher-Yates: the first `needed` slots are a uniform draw
        // without replacement.
        for (size_t i = 0; i < needed; ++i) {
            size_t j = i + static_cast<size_t>(rng.below(neg.size() - i));
            std::swap(neg[i], neg[j]);
        }
        neg.resize(needed);
        out.negatives_per_task[task_name] = needed;
        for (auto& p : pos) out.pairs.push_back(std::move(p));
        for (auto& p : neg) out.pairs.push_back(std::move(p));
    }
    rng.shuffle(out.pairs);
    return out;
}

std::vector<ProbeBox> generate_probe_negatives(const std::vector<HeadBox>& gt_heads,
                                               const std::string& image_ref, int image_width,
                                               int image_height, uint64_t rng_seed) {
    if (gt_heads.empty()) throw std::invalid_argument("generate_probe_negatives: no heads");
    for (const HeadBox& h : gt_heads) {
        if (!h.valid()) throw std::invalid_argument("generate_probe_negatives: invalid head box");
    }
    const double diag = std::hypot(static_cast<double>(image_width),
                                   static_cast<double>(image_height));
    Rng rng(rng_seed);
    std::vector<ProbeBox> out;
    out.reserve(gt_heads.size() * 2);
    int index = 0;
    for (const HeadBox& head : gt_heads) {
        ProbeBox pos;
        pos.probe_id = image_ref + "#pos" + std::to_string(index);
        pos.image_ref = image_ref;
        pos.image_width = image_width;
        pos.image_height = image_height;
        pos.box = head;
        pos.is_positive = true;
        pos.distance_to_nearest_gt = 0.0;
        out.push_back(pos);

        const double bw = head.width();
        const double bh = head.height();
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            const double x0 = rng.next_double() * (1.0 - bw);
            const double y0 = rng.next_double() * (1.0 - bh);
            HeadBox cand{x0, y0, x0 + bw, y0 + bh};
            bool overlaps = false;
            for (const HeadBox& gt : gt_heads) {
                if (iou(cand, gt) > 0.0) {
                    overlaps = true;
                    break;
                }
            }
            if (overlaps) continue;
            double best = std::numeric_limits<double>::infinity();
            for (const HeadBox& gt : gt_heads) {
                const Point2 a = cand.center();
                const Point2 b = gt.center();
                const double d = std::hypot((a.x - b.x) * image_width, (a.y - b.y) * image_height);
                best = std::min(best, d);
            }
            ProbeBox neg;
            neg.probe_id = image_ref + "#neg" + std::to_string(index);
            neg.image_ref = image_ref;
            neg.image_width = image_width;
            neg.image_height = image_height;
            neg.box = cand;
            neg.is_positive = false;
            neg.distance_to_nearest_gt = best / diag;
            out.push_back(std::move(neg));
            placed = true;
        }
        if (!placed) {
            throw std::runtime_error("no disjoint placement for a probe negative in " + image_ref);
        }
        ++index;
    }
    return out;
}

std::vector<ProbeBox> generate_probe_corpus(const std::vector<GazeSample>& samples,
                                            uint64_t rng_seed) {
    std::map<std::string, std::pair<std::vector<HeadBox>, std::pair<int, int>>> per_image;
    for (const GazeSample& s : samples) {
        auto& entry = per_image[s.image_ref];
        entry.second = {s.image_width, s.image_height};
        if (std::find(entry.first.begin(), entry.first.end(), s.head) == entry.first.end()) {
            entry.first.push_back(s.head);
        }
    }
    std::vector<ProbeBox> out;
    for (const auto& [image_ref, entry] : per_image) {
        auto boxes = generate_probe_negatives(entry.first, image_ref, entry.second.first,
                                              entry.second.second,
                                              derive_seed(rng_seed, image_ref));
        out.insert(out.end(), boxes.begin(), boxes.end());
    }
    return out;
}

}  // namespace gazebench::corpus

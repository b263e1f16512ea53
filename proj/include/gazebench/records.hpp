#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gazebench/geometry.hpp"
#include "gazebench/jsonl.hpp"

namespace gazebench {

enum class DatasetId { GF, VAT, CP, custom };
enum class Split { train, val, test };
enum class SocialTask { LAEO, LAH, SA };

std::string to_string(DatasetId d);
std::string to_string(Split s);
std::string to_string(SocialTask t);
DatasetId dataset_from_string(const std::string& s);
Split split_from_string(const std::string& s);
SocialTask social_task_from_string(const std::string& s);

// One annotated person: the query handle for gaze following.
struct GazeSample {
    std::string sample_id;
    DatasetId dataset_id = DatasetId::custom;
    std::string image_ref;
    int image_width = 0;
    int image_height = 0;
    HeadBox head;
    std::vector<Point2> gaze_points;  // multi-annotator on GF test
    std::optional<bool> inout_label;
    Split split = Split::test;
    std::optional<int64_t> frame_index;
    std::optional<std::string> video_id;

    bool operator==(const GazeSample&) const = default;
};

// One directed or unordered pair of head boxes with a social-gaze label.
struct SocialPair {
    std::string pair_id;
    DatasetId dataset_id = DatasetId::custom;
    std::string image_ref;
    int image_width = 0;
    int image_height = 0;
    HeadBox head_a;
    HeadBox head_b;
    SocialTask task = SocialTask::LAEO;
    bool label = false;
    bool ordered = false;  // LAH pairs are directed: A looks at B
    std::optional<int64_t> frame_index;
    std::optional<std::string> video_id;

    bool operator==(const SocialPair&) const = default;
};

// Head-localization probe record (positive = annotated head, negative =
// same-size box with zero IoU against every ground-truth head).
struct ProbeBox {
    std::string probe_id;
    std::string image_ref;
    int image_width = 0;
    int image_height = 0;
    HeadBox box;
    bool is_positive = false;
    double distance_to_nearest_gt = 0.0;  // center distance / image diagonal

    bool operator==(const ProbeBox&) const = default;
};

struct SamplingConfig {
    int frame_stride = 3;
    double min_head_area_frac = 0.0005;  // ~10x10 px at 448^2
    int boundary_margin_frames = 2;
    double negatives_per_positive = 1.0;
    uint64_t rng_seed = 0;
};

// Canonical JSONL ({"kind": "gaze"|"social"|"probe", ...}). Round-trips
// field-identically for any valid record.
ojson to_json(const GazeSample& s);
ojson to_json(const SocialPair& p);
ojson to_json(const ProbeBox& b);
GazeSample gaze_sample_from_json(const json& j);
SocialPair social_pair_from_json(const json& j);
ProbeBox probe_box_from_json(const json& j);

// Canonical ordering: (image_ref, head box coordinates), then sample_id.
bool canonical_less(const GazeSample& a, const GazeSample& b);
bool canonical_less(const SocialPair& a, const SocialPair& b);


struct Corpus {
    std::vector<GazeSample> gaze;
    std::vector<SocialPair> social;
    std::vector<ProbeBox> probes;
};

Corpus load_corpus(const std::filesystem::path& jsonl_path);
void save_corpus(const std::filesystem::path& jsonl_path, const Corpus& c);

}  // namespace gazebench

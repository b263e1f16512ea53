#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gazebench/records.hpp"

namespace gazebench::corpus {

// Maps source-row column names onto the canonical schema. Raw annotation
// formats vary per dataset, so every adapter is this mapping plus the shared
// normalization code below.
struct ColumnMapping {
    std::string image = "image";
    // Box columns, in order x_min, y_min, x_max, y_max.
    std::vector<std::string> head_box = {"x_min", "y_min", "x_max", "y_max"};
    std::string coords = "pixel";  // "pixel" or "unit"
    std::string gaze_x = "gaze_x";
    std::string gaze_y = "gaze_y";
    // Optional columns; used when present in a row, ignored otherwise.
    std::string gaze_points = "gaze_points";  // array-of-[x,y], overrides gaze_x/gaze_y
    std::string inout = "inout";
    std::string split = "split";
    std::string frame = "frame";
    std::string video = "video";
    std::string id = "id";
    std::string width = "width";
    std::string height = "height";
    std::string default_split = "test";

    static ColumnMapping from_json(const json& j);
};

struct Rejection {
    size_t row_index = 0;
    std::string reason;
};

struct IngestResult {
    std::vector<GazeSample> samples;
    std::vector<Rejection> rejections;
};

using ImageSizeLookup =
    std::function<std::optional<std::pair<int, int>>(const std::string& image_ref)>;

// Normalizes tabular gaze rows into canonical GazeSamples. Multi-annotator
// rows for the same (image, head) collapse into one sample with several gaze
// points; output is in canonical order. Malformed rows become rejection
// records, never exceptions.
IngestResult ingest_gaze_annotations(const std::vector<json>& rows, DatasetId dataset_id,
                                     const ColumnMapping& mapping,
                                     const ImageSizeLookup& size_lookup = nullptr);

struct SocialIngestResult {
    std::vector<SocialPair> pairs;
    std::vector<Rejection> rejections;
};

struct SocialColumnMapping {
    std::string image = "image";
    std::vector<std::string> head_a = {"a_x_min", "a_y_min", "a_x_max", "a_y_max"};
    std::vector<std::string> head_b = {"b_x_min", "b_y_min", "b_x_max", "b_y_max"};
    std::string coords = "pixel";
    std::string task = "task";
    std::string label = "label";
    std::string frame = "frame";
    std::string video = "video";
    std::string id = "id";
    std::string width = "width";
    std::string height = "height";

    static SocialColumnMapping from_json(const json& j);
};

SocialIngestResult ingest_social_annotations(const std::vector<json>& rows, DatasetId dataset_id,
                                             const SocialColumnMapping& mapping,
                                             const ImageSizeLookup& size_lookup = nullptr);

// Keeps records whose frame_index % stride == 0, per video; stride 1 is the
// identity. Records on video datasets must carry a frame index.
std::vector<GazeSample> subsample_frames(const std::vector<GazeSample>& samples, int stride);
std::vector<SocialPair> subsample_frames(const std::vector<SocialPair>& pairs, int stride);

// [start_frame, end_frame] inclusive spans of one annotated gaze event.
struct EventInterval {
    int64_t start = 0;
    int64_t end = 0;
};
using EventLookup = std::map<std::string, std::vector<EventInterval>>;  // pair_id -> intervals

struct FilterCounts {
    size_t kept = 0;
    size_t removed_small_head = 0;
    size_t removed_event_boundary = 0;
};

struct FilterResult {
    std::vector<SocialPair> pairs;
    FilterCounts counts;
};

// Drops pairs with a head smaller than min_head_area_frac and positive pairs
// whose frame lies within boundary_margin_frames of a gaze-event edge.
FilterResult filter_social_annotations(const std::vector<SocialPair>& pairs,
                                       const EventLookup& events, const SamplingConfig& cfg);

// Collapses (A,B)/(B,A) duplicates for unordered tasks (LAEO, SA); reports
// the ordered count alongside for auditing.
struct DedupResult {
    std::vector<SocialPair> pairs;
    size_t ordered_count = 0;
    size_t unordered_count = 0;
};
DedupResult dedup_unordered(const std::vector<SocialPair>& pairs);

struct BalancedSample {
    std::vector<SocialPair> pairs;
    std::map<std::string, size_t> positives_per_task;
    std::map<std::string, size_t> negatives_per_task;
};

// Per task, draws ceil(negatives_per_positive * n_pos) negatives uniformly
// without replacement (seeded) and shuffles the union deterministically.
// Throws with the per-task deficit when candidates run short.
BalancedSample sample_balanced_pairs(const std::vector<SocialPair>& positives,
                                     const std::vector<SocialPair>& candidate_negatives,
                                     const SamplingConfig& cfg);

// For every ground-truth head emits the positive box plus one same-size
// negative placed uniformly at random among zero-IoU positions.
std::vector<ProbeBox> generate_probe_negatives(const std::vector<HeadBox>& gt_heads,
                                               const std::string& image_ref, int image_width,
                                               int image_height, uint64_t rng_seed);

// Convenience: probe corpus for a whole gaze corpus, grouped per image.
std::vector<ProbeBox> generate_probe_corpus(const std::vector<GazeSample>& samples,
                                            uint64_t rng_seed);

}  // namespace gazebench::corpus

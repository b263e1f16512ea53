#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gazebench/gateway.hpp"
#include "gazebench/prompting.hpp"
#include "gazebench/report.hpp"

namespace gazebench::harness {

enum class Aggregation { none, best_of_n, average_of_n };
std::string to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string& s);

enum class BackendKind { mock, http };

struct RunConfig {
    std::filesystem::path corpus_path;
    std::vector<DatasetId> datasets;  // empty = all
    std::vector<Split> splits;        // empty = all
    std::optional<size_t> take_first_n;
    // Closed-model subset runs: per task, a seeded uniform draw of this many
    // positives plus as many negatives from the balanced pool.
    std::optional<size_t> social_subset_per_task;
    // Task selection: "GFo" evaluates gaze samples; social task names select
    // social pairs of that task.
    std::vector<std::string> tasks = {"GFo"};

    prompting::PromptSpec prompt;
    std::optional<std::filesystem::path> exemplar_dir;

    BackendKind backend = BackendKind::mock;
    gateway::MockBehavior mock;
    gateway::ModelEndpoint endpoint;

    gateway::DecodeParams decode;
    Aggregation aggregation = Aggregation::none;
    metrics::AvgL2Mode avg_mode = metrics::AvgL2Mode::per_annotation;
    double threshold = 0.5;
    uint64_t run_seed = 0;

    std::optional<std::filesystem::path> cache_dir;
    std::filesystem::path out_dir = "runs/out";
    std::filesystem::path assets_root = ".";  // image_ref resolution for HTTP runs

    // Probe runs: evaluate both coordinate scales in one pass.
    bool probe_both_scales = false;

    static RunConfig from_json(const json& j);
    ojson fingerprint() const;  // behavior-affecting fields only
    void validate() const;
};

struct SampleStatus {
    std::string sample_id;
    std::string status;  // ok | fallback | clamped | error
    std::string error;
};

struct RunManifest {
    std::string fingerprint_hash;
    std::vector<SampleStatus> samples;
    int64_t requests = 0;
    int64_t cache_hits = 0;
    int64_t fallbacks = 0;
    int64_t truncated = 0;
    int64_t wall_clock_ms = 0;
    std::string version;

    ojson to_json() const;
};

enum class RunStatus { complete = 0, error = 1, partial = 2 };

struct RunResult {
    RunStatus status = RunStatus::complete;
    metrics::MetricsReport report;
    RunManifest manifest;
    std::filesystem::path out_dir;
};

// Full pipeline: select -> render -> complete -> parse -> aggregate ->
// report. Writes report.{json,csv,md}, manifest.json and parse_log.jsonl
// into cfg.out_dir. Cached samples are never re-requested.
// backend_override (tests) replaces the configured backend; the cache layer
// still applies.
RunResult run_eval(const RunConfig& cfg, gateway::ChatBackend* backend_override = nullptr);

// Head-localization probe pipeline: accuracy, sensitivity and distance-bucketed
// positive-answer rates; one row per coordinate scale.
struct ProbeRow {
    std::string scale;  // "unit" or "thousand"
    size_t n = 0;
    size_t n_fallback = 0;
    double accuracy = 0.0;
    double sensitivity = 0.0;
};

struct ProbeBucket {
    double lo = 0.0;
    double hi = 0.0;
    size_t n = 0;
    double yes_rate = 0.0;
};

struct ProbeResult {
    RunStatus status = RunStatus::complete;
    std::vector<ProbeRow> rows;
    std::vector<ProbeBucket> buckets;  // from the first scale run
    std::filesystem::path out_dir;
};

ProbeResult run_probe(const RunConfig& cfg, gateway::ChatBackend* backend_override = nullptr);

// ---- fine-tuning dataset composition ---------------------------------------

enum class FtStrategy { FTspec_stage1_GF, FTspec_stage2, AllD_GFo, AllD_GFo_plus_SG };
std::string to_string(FtStrategy s);
FtStrategy ft_strategy_from_string(const std::string& s);

struct FtPlanConfig {
    FtStrategy strategy = FtStrategy::FTspec_stage1_GF;
    DatasetId stage2_target = DatasetId::VAT;  // FTspec_stage2 only
    std::vector<std::string> stage2_tasks = {"GFo"};
    prompting::CoordScale scale = prompting::CoordScale::unit;
    int decimals = 3;
    int epochs = 1;
    uint64_t seed = 0;
    std::optional<size_t> subsample_n;  // data-scale ablation (1k/3k/5k/10k/50k)
    prompting::SftFormat format = prompting::SftFormat::plain;
};

struct FtStagePlan {
    std::string name;
    std::filesystem::path out_path;
    size_t n_gaze_samples = 0;
    size_t n_social_pairs = 0;
    size_t n_qa_pairs = 0;
    size_t n_lines = 0;
};

struct FtPlan {
    std::vector<FtStagePlan> stages;
    ojson to_json() const;
};

// Emits one manifest per stage and drives the SFT export for each.
FtPlan compose_ft_dataset(const FtPlanConfig& cfg, const Corpus& corpus,
                          const std::filesystem::path& out_dir);

extern const char* kVersion;

}  // namespace gazebench::harness

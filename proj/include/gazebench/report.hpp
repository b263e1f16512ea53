#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gazebench/geometry.hpp"
#include "gazebench/jsonl.hpp"
#include "gazebench/prediction.hpp"
#include "gazebench/records.hpp"

namespace gazebench::metrics {

struct TaskMetrics {
    std::string dataset;
    std::string task;
    size_t n_samples = 0;
    size_t n_fallback = 0;
    size_t n_clamped = 0;

    std::optional<double> avg_l2;
    std::optional<double> min_l2;
    std::optional<double> ang_err_deg;
    size_t n_degenerate_direction = 0;

    std::optional<double> ap_inout;
    std::optional<double> f1_inout;
    std::optional<double> precision_inout;
    std::optional<double> recall_inout;

    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    bool zero_division = false;
    bool oracle = false;
};

struct MetricsReport {
    std::vector<TaskMetrics> rows;  // sorted by (dataset, task)
    ojson fingerprint;              // behavior-affecting config, stamped by the harness
    std::string fingerprint_hash;
    bool partial = false;
    size_t n_errors = 0;

    ojson to_json() const;
    std::string to_csv() const;
    std::string to_markdown() const;
};

struct ReportConfig {
    AvgL2Mode avg_mode = AvgL2Mode::per_annotation;
    double threshold = 0.5;
    ojson fingerprint;
};

// Joins predictions to ground truth by sample_id and aggregates per
// (dataset, task). Pure: identical inputs produce identical bytes.
MetricsReport build_report(const std::vector<PredictionRecord>& records, const Corpus& truth,
                           const ReportConfig& cfg);

}  // namespace gazebench::metrics

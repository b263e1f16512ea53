#include "gazebench/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gazebench/digest.hpp"

namespace gazebench::metrics {

namespace {

std::string fmt(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string cell(const std::optional<double>& v, int decimals) {
    return v ? fmt(*v, decimals) : std::string();
}

struct GazeJoin {
    const PredictionRecord* record;
    const GazeSample* truth;
};

struct SocialJoin {
    const PredictionRecord* record;
    const SocialPair* truth;
};

}  // namespace

MetricsReport build_report(const std::vector<PredictionRecord>& records, const Corpus& truth,
                           const ReportConfig& cfg) {
    if (records.empty()) throw std::invalid_argument("build_report: no records");

    std::map<std::string, const GazeSample*> gaze_by_id;
    std::map<std::string, const SocialPair*> social_by_id;
    std::map<std::string, const ProbeBox*> probe_by_id;
    for (const auto& s : truth.gaze) gaze_by_id.emplace(s.sample_id, &s);
    for (const auto& p : truth.social) social_by_id.emplace(p.pair_id, &p);
    for (const auto& b : truth.probes) probe_by_id.emplace(b.probe_id, &b);

    // (dataset, task) -> joined rows
    std::map<std::pair<std::string, std::string>, std::vector<GazeJoin>> gaze_groups;
    std::map<std::pair<std::string, std::string>, std::vector<SocialJoin>> social_groups;
    std::vector<std::string> orphans;

    for (const PredictionRecord& r : records) {
        switch (r.task) {
            case TaskKind::GFo_point:
            case TaskKind::GFo_inout: {
                auto it = gaze_by_id.find(r.sample_id);
                if (it == gaze_by_id.end()) {
                    orphans.push_back(r.sample_id);
                    break;
                }
                gaze_groups[{to_string(it->second->dataset_id), to_string(r.task)}].push_back(
                    {&r, it->second});
                break;
            }
            case TaskKind::SG_LAEO:
            case TaskKind::SG_LAH:
            case TaskKind::SG_SA: {
                auto it = social_by_id.find(r.sample_id);
                if (it == social_by_id.end()) {
                    orphans.push_back(r.sample_id);
                    break;
                }
                social_groups[{to_string(it->second->dataset_id), to_string(r.task)}].push_back(
                    {&r, it->second});
                break;
            }
            case TaskKind::probe: {
                if (!probe_by_id.count(r.sample_id)) orphans.push_back(r.sample_id);
                break;
            }
        }
    }
    if (!orphans.empty()) {
        std::sort(orphans.begin(), orphans.end());
        std::string msg = "unmatched sample ids:";
        for (size_t i = 0; i < orphans.size() && i < 10; ++i) msg += " " + orphans[i];
        if (orphans.size() > 10) msg += " (+" + std::to_string(orphans.size() - 10) + " more)";
        throw std::runtime_error(msg);
    }

    MetricsReport report;
    report.fingerprint = cfg.fingerprint;
    report.fingerprint_hash = sha256_hex(cfg.fingerprint.dump());

    for (auto& [key, group] : gaze_groups) {
        // Canonical sample order keeps floating-point aggregation stable.
        std::stable_sort(group.begin(), group.end(), [](const GazeJoin& a, const GazeJoin& b) {
            return canonical_less(*a.truth, *b.truth);
        });
        TaskMetrics row;
        row.dataset = key.first;
        row.task = key.second;
        row.n_samples = group.size();
        for (const auto& g : group) {
            if (g.record->parse_status == ParseStatus::fallback) ++row.n_fallback;
            if (g.record->parse_status == ParseStatus::clamped) ++row.n_clamped;
            if (g.record->oracle) row.oracle = true;
        }

        if (key.second == to_string(TaskKind::GFo_point)) {
            std::vector<double> avgs, mins, angles;
            for (const auto& g : group) {
                if (!g.record->point) {
                    throw std::invalid_argument("GFo_point record without point: " +
                                                g.record->sample_id);
                }
                if (g.truth->gaze_points.empty()) continue;  // out-of-frame truth
                const AvgMinL2 d = avg_min_l2(*g.record->point, g.truth->gaze_points, cfg.avg_mode);
                avgs.push_back(d.avg);
                mins.push_back(d.min);
                auto ang = angular_error_deg(g.truth->head, *g.record->point,
                                             g.truth->gaze_points);
                if (ang) angles.push_back(*ang);
                else ++row.n_degenerate_direction;
            }
            if (!avgs.empty()) {
                row.avg_l2 = mean(avgs);
                row.min_l2 = mean(mins);
            }
            if (!angles.empty()) row.ang_err_deg = mean(angles);
        } else {
            std::vector<double> scores;
            std::vector<bool> labels;
            for (const auto& g : group) {
                if (!g.record->p_io) {
                    throw std::invalid_argument("GFo_inout record without p_io: " +
                                                g.record->sample_id);
                }
                if (!g.truth->inout_label) continue;  // unlabeled dataset (GF)
                scores.push_back(*g.record->p_io);
                labels.push_back(*g.truth->inout_label);
            }
            const bool any_pos = std::find(labels.begin(), labels.end(), true) != labels.end();
            if (!scores.empty() && any_pos) {
                row.ap_inout = average_precision(scores, labels);
                const Prf1 f = prf1(scores, labels, cfg.threshold);
                row.f1_inout = f.f1;
                row.precision_inout = f.precision;
                row.recall_inout = f.recall;
                row.zero_division = row.zero_division || f.zero_division;
            }
        }
        report.rows.push_back(std::move(row));
    }

    for (auto& [key, group] : social_groups) {
        std::stable_sort(group.begin(), group.end(), [](const SocialJoin& a, const SocialJoin& b) {
            return canonical_less(*a.truth, *b.truth);
        });
        TaskMetrics row;
        row.dataset = key.first;
        row.task = key.second;
        row.n_samples = group.size();
        std::vector<double> probs;
        std::vector<bool> labels;
        for (const auto& g : group) {
            if (g.record->parse_status == ParseStatus::fallback) ++row.n_fallback;
            if (g.record->parse_status == ParseStatus::clamped) ++row.n_clamped;
            if (!g.record->p_sg) {
                throw std::invalid_argument("social record without p_sg: " + g.record->sample_id);
            }
            probs.push_back(*g.record->p_sg);
            labels.push_back(g.truth->label);
        }
        const Prf1 f = prf1(probs, labels, cfg.threshold);
        row.precision = f.precision;
        row.recall = f.recall;
        row.f1 = f.f1;
        row.zero_division = f.zero_division;
        report.rows.push_back(std::move(row));
    }

    std::sort(report.rows.begin(), report.rows.end(), [](const TaskMetrics& a, const TaskMetrics& b) {
        return std::tie(a.dataset, a.task) < std::tie(b.dataset, b.task);
    });
    return report;
}

ojson MetricsReport::to_json() const {
    ojson j;
    j["fingerprint_hash"] = fingerprint_hash;
    j["fingerprint"] = fingerprint;
    j["partial"] = partial;
    j["n_errors"] = n_errors;
    ojson rows_json = ojson::array();
    for (const TaskMetrics& r : rows) {
        ojson row;
        row["dataset"] = r.dataset;
        row["task"] = r.task;
        row["n_samples"] = r.n_samples;
        row["n_fallback"] = r.n_fallback;
        row["n_clamped"] = r.n_clamped;
        auto put = [&row](const char* name, const std::optional<double>& v) {
            if (v) row[name] = *v;
        };
        put("avg_l2", r.avg_l2);
        put("min_l2", r.min_l2);
        put("ang_err_deg", r.ang_err_deg);
        if (r.n_degenerate_direction > 0) row["n_degenerate_direction"] = r.n_degenerate_direction;
        put("ap_inout", r.ap_inout);
        put("f1_inout", r.f1_inout);
        put("precision_inout", r.precision_inout);
        put("recall_inout", r.recall_inout);
        put("precision", r.precision);
        put("recall", r.recall);
        put("f1", r.f1);
        if (r.zero_division) row["zero_division"] = true;
        if (r.oracle) row["oracle"] = true;
        rows_json.push_back(std::move(row));
    }
    j["rows"] = std::move(rows_json);
    return j;
}

namespace {

// Pivots rows into one line per dataset with the headline column names.
struct PivotRow {
    std::optional<double> avg_l2, min_l2, ang_err, ap_inout, f1_inout, f1_lah, f1_laeo, f1_sa;
};

std::map<std::string, PivotRow> pivot(const std::vector<TaskMetrics>& rows) {
    std::map<std::string, PivotRow> out;
    for (const TaskMetrics& r : rows) {
        PivotRow& p = out[r.dataset];
        if (r.task == "GFo_point") {
            p.avg_l2 = r.avg_l2;
            p.min_l2 = r.min_l2;
            p.ang_err = r.ang_err_deg;
        } else if (r.task == "GFo_inout") {
            p.ap_inout = r.ap_inout;
            p.f1_inout = r.f1_inout;
        } else if (r.task == "SG_LAH") {
            p.f1_lah = r.f1;
        } else if (r.task == "SG_LAEO") {
            p.f1_laeo = r.f1;
        } else if (r.task == "SG_SA") {
            p.f1_sa = r.f1;
        }
    }
    return out;
}

}  // namespace

std::string MetricsReport::to_csv() const {
    std::ostringstream ss;
    ss << "Dataset,Avg L2,Min L2,Ang Err,AP_inout,F1_inout,F1_LAH,F1_LAEO,F1_SA\n";
    for (const auto& [dataset, p] : pivot(rows)) {
        ss << dataset << ',' << cell(p.avg_l2, 4) << ',' << cell(p.min_l2, 4) << ','
           << cell(p.ang_err, 1) << ',' << cell(p.ap_inout, 4) << ',' << cell(p.f1_inout, 4) << ','
           << cell(p.f1_lah, 4) << ',' << cell(p.f1_laeo, 4) << ',' << cell(p.f1_sa, 4) << '\n';
    }
    return ss.str();
}

std::string MetricsReport::to_markdown() const {
    std::ostringstream ss;
    ss << "# Evaluation report\n\n";
    if (partial) {
        ss << "> **Incomplete run:** " << n_errors
           << " sample(s) failed; metrics cover completed samples only.\n\n";
    }
    ss << "| Dataset | Avg L2 | Min L2 | Ang Err | AP_inout | F1_inout | F1_LAH | F1_LAEO | F1_SA |\n";
    ss << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& [dataset, p] : pivot(rows)) {
        ss << "| " << dataset << " | " << cell(p.avg_l2, 4) << " | " << cell(p.min_l2, 4) << " | "
           << cell(p.ang_err, 1) << " | " << cell(p.ap_inout, 4) << " | " << cell(p.f1_inout, 4)
           << " | " << cell(p.f1_lah, 4) << " | " << cell(p.f1_laeo, 4) << " | " << cell(p.f1_sa, 4)
           << " |\n";
    }
    ss << "\n## Per-task detail\n\n";
    ss << "| Dataset | Task | n | fallback | clamped | precision | recall | f1 |\n";
    ss << "|---|---|---|---|---|---|---|---|\n";
    for (const TaskMetrics& r : rows) {
        ss << "| " << r.dataset << " | " << r.task << " | " << r.n_samples << " | " << r.n_fallback
           << " | " << r.n_clamped << " | " << cell(r.precision, 4) << " | " << cell(r.recall, 4)
           << " | " << cell(r.f1, 4) << " |";
        if (r.oracle) ss << " (oracle upper bound)";
        ss << "\n";
    }
    ss << "\n## Config fingerprint\n\n`" << fingerprint_hash << "`\n\n```json\n"
       << fingerprint.dump(2) << "\n```\n";
    return ss.str();
}

}  // namespace gazebench::metrics

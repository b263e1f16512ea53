#include "gazebench/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gazebench/corpus.hpp"
#include "gazebench/digest.hpp"
#include "gazebench/parsing.hpp"
#include "gazebench/rng.hpp"

namespace gazebench::harness {

const char* kVersion = "0.1.0";

std::string to_string(Aggregation a) {
    switch (a) {
        case Aggregation::none: return "none";
        case Aggregation::best_of_n: return "best_of_n";
        case Aggregation::average_of_n: return "average_of_n";
    }
    throw std::logic_error("bad Aggregation");
}

Aggregation aggregation_from_string(const std::string& s) {
    if (s == "none") return Aggregation::none;
    if (s == "best_of_n") return Aggregation::best_of_n;
    if (s == "average_of_n") return Aggregation::average_of_n;
    throw std::runtime_error("unknown aggregation: " + s);
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig cfg;
    cfg.corpus_path = j.at("corpus").get<std::string>();
    if (j.contains("datasets")) {
        for (const auto& d : j.at("datasets")) cfg.datasets.push_back(dataset_from_string(d));
    }
    if (j.contains("splits")) {
        for (const auto& s : j.at("splits")) cfg.splits.push_back(split_from_string(s));
    }
    if (j.contains("take_first_n")) cfg.take_first_n = j.at("take_first_n").get<size_t>();
    if (j.contains("social_subset_per_task")) {
        cfg.social_subset_per_task = j.at("social_subset_per_task").get<size_t>();
    }
    if (j.contains("tasks")) cfg.tasks = j.at("tasks").get<std::vector<std::string>>();

    if (j.contains("prompt")) {
        const json& p = j.at("prompt");
        if (p.contains("strategy")) {
            cfg.prompt.strategy = prompting::strategy_from_string(p.at("strategy"));
        }
        if (p.contains("coord_scale")) {
            cfg.prompt.coord_scale = prompting::coord_scale_from_string(p.at("coord_scale"));
        }
        if (p.contains("decimals")) cfg.prompt.decimals = p.at("decimals").get<int>();
        if (p.contains("n_exemplars")) cfg.prompt.n_exemplars = p.at("n_exemplars").get<int>();
    }
    if (j.contains("exemplar_dir")) cfg.exemplar_dir = j.at("exemplar_dir").get<std::string>();

    if (j.contains("mock")) {
        cfg.backend = BackendKind::mock;
        cfg.mock = gateway::MockBehavior::parse(j.at("mock").get<std::string>());
    }
    if (j.contains("endpoint")) {
        cfg.backend = BackendKind::http;
        const json& e = j.at("endpoint");
        cfg.endpoint.base_url = e.at("base_url").get<std::string>();
        cfg.endpoint.model_name = e.at("model").get<std::string>();
        if (e.contains("auth_token_env_var")) {
            cfg.endpoint.auth_token_env_var = e.at("auth_token_env_var").get<std::string>();
        }
        if (e.contains("timeout_seconds")) {
            cfg.endpoint.timeout_seconds = e.at("timeout_seconds").get<double>();
        }
        if (e.contains("max_parallel")) {
            cfg.endpoint.max_parallel_requests = e.at("max_parallel").get<int>();
        }
        if (e.contains("max_attempts")) {
            cfg.endpoint.retry.max_attempts = e.at("max_attempts").get<int>();
        }
        if (e.contains("backoff_base_ms")) {
            cfg.endpoint.retry.backoff_base_ms = e.at("backoff_base_ms").get<int>();
        }
        if (e.contains("supports_n")) cfg.endpoint.supports_n = e.at("supports_n").get<bool>();
    }

    if (j.contains("decode")) {
        const json& d = j.at("decode");
        if (d.contains("temperature")) cfg.decode.temperature = d.at("temperature").get<double>();
        if (d.contains("n_samples")) cfg.decode.n_samples = d.at("n_samples").get<int>();
        if (d.contains("max_new_tokens")) {
            cfg.decode.max_new_tokens = d.at("max_new_tokens").get<int>();
        }
    }
    if (j.contains("aggregation")) cfg.aggregation = aggregation_from_string(j.at("aggregation"));
    if (j.contains("avg_mode")) {
        cfg.avg_mode = j.at("avg_mode").get<std::string>() == "centroid"
                           ? metrics::AvgL2Mode::centroid
                           : metrics::AvgL2Mode::per_annotation;
    }
    if (j.contains("threshold")) cfg.threshold = j.at("threshold").get<double>();
    if (j.contains("run_seed")) cfg.run_seed = j.at("run_seed").get<uint64_t>();
    if (j.contains("cache_dir")) cfg.cache_dir = j.at("cache_dir").get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("assets_root")) cfg.assets_root = j.at("assets_root").get<std::string>();
    if (j.contains("probe_both_scales")) {
        cfg.probe_both_scales = j.at("probe_both_scales").get<bool>();
    }
    return cfg;
}

ojson RunConfig::fingerprint() const {
    ojson j;
    j["corpus"] = corpus_path.generic_string();
    ojson ds = ojson::array();
    for (DatasetId d : datasets) ds.push_back(gazebench::to_string(d));
    j["datasets"] = std::move(ds);
    ojson sp = ojson::array();
    for (Split s : splits) sp.push_back(gazebench::to_string(s));
    j["splits"] = std::move(sp);
    if (take_first_n) j["take_first_n"] = *take_first_n;
    if (social_subset_per_task) j["social_subset_per_task"] = *social_subset_per_task;
    j["tasks"] = tasks;
    j["strategy"] = prompting::to_string(prompt.strategy);
    j["coord_scale"] = prompting::to_string(prompt.coord_scale);
    j["decimals"] = prompt.decimals;
    j["n_exemplars"] = prompt.n_exemplars;
    if (backend == BackendKind::mock) {
        j["backend"] = "mock:" + mock.to_string();
    } else {
        j["backend"] = "http";
        j["base_url"] = endpoint.base_url;
        j["model"] = endpoint.model_name;
        j["supports_n"] = endpoint.supports_n;
    }
    j["temperature"] = decode.temperature;
    j["n_samples"] = decode.n_samples;
    j["max_new_tokens"] = decode.max_new_tokens;
    j["aggregation"] = to_string(aggregation);
    j["avg_mode"] = avg_mode == metrics::AvgL2Mode::centroid ? "centroid" : "per_annotation";
    j["threshold"] = threshold;
    j["run_seed"] = run_seed;
    j["probe_both_scales"] = probe_both_scales;
    j["version"] = kVersion;
    return j;
}

void RunConfig::validate() const {
    decode.validate();
    if (aggregation != Aggregation::none && decode.n_samples <= 1) {
        throw std::invalid_argument("aggregation requires n_samples > 1");
    }
    if (aggregation == Aggregation::none && decode.n_samples != 1) {
        throw std::invalid_argument("n_samples > 1 requires an aggregation mode");
    }
    if (aggregation == Aggregation::best_of_n) {
        for (const auto& t : tasks) {
            if (t != "GFo") {
                throw std::invalid_argument("best_of_n aggregation applies to GFo only");
            }
        }
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("threshold must be in (0,1)");
    }
    if (prompt.strategy == prompting::Strategy::PrInContextCoT && !exemplar_dir) {
        throw std::invalid_argument("PrInContextCoT requires exemplar_dir");
    }
}

ojson RunManifest::to_json() const {
    ojson j;
    j["fingerprint_hash"] = fingerprint_hash;
    j["version"] = version;
    j["counters"] = ojson{{"requests", requests},
                          {"cache_hits", cache_hits},
                          {"fallbacks", fallbacks},
                          {"truncated", truncated}};
    j["wall_clock_ms"] = wall_clock_ms;
    ojson arr = ojson::array();
    for (const SampleStatus& s : samples) {
        ojson e;
        e["sample_id"] = s.sample_id;
        e["status"] = s.status;
        if (!s.error.empty()) e["error"] = s.error;
        arr.push_back(std::move(e));
    }
    j["samples"] = std::move(arr);
    return j;
}

namespace {

using gateway::BatchItem;
using gateway::BatchOutcome;
using gateway::CompletionRequest;

bool dataset_selected(const RunConfig& cfg, DatasetId d) {
    return cfg.datasets.empty() ||
           std::find(cfg.datasets.begin(), cfg.datasets.end(), d) != cfg.datasets.end();
}

bool split_selected(const RunConfig& cfg, Split s) {
    return cfg.splits.empty() ||
           std::find(cfg.splits.begin(), cfg.splits.end(), s) != cfg.splits.end();
}

bool task_selected(const RunConfig& cfg, const std::string& name) {
    return std::find(cfg.tasks.begin(), cfg.tasks.end(), name) != cfg.tasks.end();
}

std::vector<GazeSample> select_gaze(const RunConfig& cfg, const Corpus& corpus) {
    std::vector<GazeSample> out;
    if (!task_selected(cfg, "GFo")) return out;
    for (const GazeSample& s : corpus.gaze) {
        if (dataset_selected(cfg, s.dataset_id) && split_selected(cfg, s.split)) out.push_back(s);
    }
    std::sort(out.begin(), out.end(),
              [](const GazeSample& a, const GazeSample& b) { return canonical_less(a, b); });
    if (cfg.take_first_n && out.size() > *cfg.take_first_n) out.resize(*cfg.take_first_n);
    return out;
}

std::vector<SocialPair> select_social(const RunConfig& cfg, const Corpus& corpus) {
    std::vector<SocialPair> out;
    for (const SocialPair& p : corpus.social) {
        if (!dataset_selected(cfg, p.dataset_id)) continue;
        if (!task_selected(cfg, gazebench::to_string(p.task))) continue;
        out.push_back(p);
    }
    std::sort(out.begin(), out.end(),
              [](const SocialPair& a, const SocialPair& b) { return canonical_less(a, b); });
    if (cfg.social_subset_per_task) {
        // Seeded uniform draw per (task, label) stratum of the balanced pool.
        std::map<std::pair<SocialTask, bool>, std::vector<SocialPair>> strata;
        for (auto& p : out) strata[{p.task, p.label}].push_back(std::move(p));
        out.clear();
        for (auto& [key, bucket] : strata) {
            Rng rng(derive_seed(cfg.run_seed,
                                "social_subset/" + gazebench::to_string(key.first) +
                                    (key.second ? "/pos" : "/neg")));
            const size_t n = std::min(*cfg.social_subset_per_task, bucket.size());
            for (size_t i = 0; i < n; ++i) {
                const size_t j = i + static_cast<size_t>(rng.below(bucket.size() - i));
                std::swap(bucket[i], bucket[j]);
            }
            bucket.resize(n);
            for (auto& p : bucket) out.push_back(std::move(p));
        }
        std::sort(out.begin(), out.end(),
                  [](const SocialPair& a, const SocialPair& b) { return canonical_less(a, b); });
    }
    if (cfg.take_first_n && out.size() > *cfg.take_first_n) out.resize(*cfg.take_first_n);
    return out;
}

// Owns whichever backend stack the config selects.
struct BackendStack {
    std::unique_ptr<gateway::ChatBackend> inner;
    gateway::ChatBackend* external = nullptr;
    std::unique_ptr<gateway::CachingBackend> caching;

    gateway::ChatBackend& top() {
        if (caching) return *caching;
        return external ? *external : *inner;
    }
};

BackendStack make_backend(const RunConfig& cfg, const Corpus& corpus,
                          gateway::ChatBackend* backend_override) {
    BackendStack stack;
    if (backend_override) {
        stack.external = backend_override;
    } else if (cfg.backend == BackendKind::mock) {
        stack.inner = std::make_unique<gateway::MockBackend>(corpus, cfg.mock,
                                                             cfg.prompt.coord_scale);
    } else {
        stack.inner = std::make_unique<gateway::HttpBackend>(cfg.endpoint);
    }
    if (cfg.cache_dir) {
        stack.caching = std::make_unique<gateway::CachingBackend>(
            stack.external ? *stack.external : *stack.inner,
            gateway::ResponseCache(*cfg.cache_dir));
    }
    return stack;
}

// Image payload preparation for HTTP runs; mock runs never read pixels.
struct ImagePayloads {
    std::map<std::string, std::string> uris;    // image_ref -> data URI
    std::map<std::string, std::string> hashes;  // image_ref -> source hash
};

void prepare_payloads(const RunConfig& cfg, const std::vector<std::string>& refs,
                      gateway::ResizeMode mode, ImagePayloads& payloads) {
    for (const std::string& ref : refs) {
        if (payloads.uris.count(ref)) continue;
        const auto prepared =
            gateway::prepare_image_file(cfg.assets_root / ref, gateway::kDefaultPixelCap, mode);
        payloads.uris[ref] = gateway::to_data_uri(prepared);
        payloads.hashes[ref] = prepared.source_hash;
    }
}

void attach_payloads(CompletionRequest& req, const ImagePayloads& payloads) {
    for (const std::string& ref : req.prompt.image_refs()) {
        req.image_payloads[ref] = payloads.uris.at(ref);
        req.image_hashes.push_back(payloads.hashes.at(ref));
    }
}

std::string worst_status(const std::vector<ParseStatus>& statuses) {
    bool clamped = false;
    for (ParseStatus s : statuses) {
        if (s == ParseStatus::fallback) return "fallback";
        if (s == ParseStatus::clamped) clamped = true;
    }
    return clamped ? "clamped" : "ok";
}

ojson parse_log_line(const std::string& sample_id, TaskKind task, int sample_index,
                     const parsing::ParseOutcome& outcome) {
    ojson line;
    line["sample_id"] = sample_id;
    line["task"] = gazebench::to_string(task);
    line["sample_index"] = sample_index;
    line["status"] = gazebench::to_string(outcome.status);
    if (outcome.failure_reason) {
        line["failure_reason"] = parsing::to_string(*outcome.failure_reason);
    }
    if (outcome.lenient) line["lenient"] = true;
    if (outcome.prediction.p_io) line["p_io"] = *outcome.prediction.p_io;
    if (outcome.prediction.point) {
        line["point"] = ojson::array({outcome.prediction.point->x, outcome.prediction.point->y});
    }
    if (outcome.prediction.p_sg) line["p_sg"] = *outcome.prediction.p_sg;
    line["raw_excerpt"] = outcome.raw_excerpt;
    return line;
}

void write_parse_log(const std::filesystem::path& path, const std::vector<ojson>& lines) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const ojson& line : lines) {
        out << line.dump(-1, ' ', false, nlohmann::detail::error_handler_t::replace) << '\n';
    }
}

}  // namespace

RunResult run_eval(const RunConfig& cfg, gateway::ChatBackend* backend_override) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const Corpus corpus = load_corpus(cfg.corpus_path);
    const std::vector<GazeSample> gaze = select_gaze(cfg, corpus);
    const std::vector<SocialPair> social = select_social(cfg, corpus);
    if (gaze.empty() && social.empty()) {
        throw std::runtime_error("no records selected from " + cfg.corpus_path.string());
    }

    std::optional<prompting::ExemplarBank> bank;
    if (cfg.prompt.strategy == prompting::Strategy::PrInContextCoT) {
        bank = prompting::ExemplarBank::load(*cfg.exemplar_dir);
    }

    // Render all prompts up front, in canonical order.
    std::vector<BatchItem> items;
    items.reserve(gaze.size() + social.size());
    for (const GazeSample& s : gaze) {
        prompting::PromptSpec spec = cfg.prompt;
        spec.task = prompting::PromptTask::GFo;
        CompletionRequest req;
        req.sample_id = s.sample_id;
        req.prompt = prompting::render_prompt(spec, s, bank ? &*bank : nullptr);
        req.seed = derive_seed(cfg.run_seed, s.sample_id);
        items.push_back({std::move(req), cfg.decode});
    }
    for (const SocialPair& p : social) {
        prompting::PromptSpec spec = cfg.prompt;
        spec.task = prompting::prompt_task_from_string(gazebench::to_string(p.task));
        CompletionRequest req;
        req.sample_id = p.pair_id;
        req.prompt = prompting::render_prompt(spec, p, bank ? &*bank : nullptr);
        req.seed = derive_seed(cfg.run_seed, p.pair_id);
        items.push_back({std::move(req), cfg.decode});
    }

    if (cfg.backend == BackendKind::http) {
        ImagePayloads payloads;
        for (BatchItem& item : items) {
            prepare_payloads(cfg, item.request.prompt.image_refs(), gateway::ResizeMode::cap_total,
                             payloads);
            attach_payloads(item.request, payloads);
        }
    }

    BackendStack backend = make_backend(cfg, corpus, backend_override);
    const std::vector<BatchOutcome> outcomes =
        gateway::run_batch(backend.top(), items, cfg.endpoint.max_parallel_requests);

    // Truth lookups for aggregation and task resolution.
    std::map<std::string, const GazeSample*> gaze_by_id;
    for (const GazeSample& s : gaze) gaze_by_id.emplace(s.sample_id, &s);
    std::map<std::string, const SocialPair*> social_by_id;
    for (const SocialPair& p : social) social_by_id.emplace(p.pair_id, &p);

    std::vector<PredictionRecord> records;
    std::vector<ojson> log_lines;
    RunManifest manifest;
    manifest.version = kVersion;
    int64_t truncated = 0;

    for (size_t i = 0; i < items.size(); ++i) {
        const BatchItem& item = items[i];
        const BatchOutcome& outcome = outcomes[i];
        const bool is_gaze = gaze_by_id.count(item.request.sample_id) > 0;
        SampleStatus status;
        status.sample_id = item.request.sample_id;
        if (!outcome.ok) {
            status.status = "error";
            status.error = outcome.error;
            manifest.samples.push_back(std::move(status));
            continue;
        }
        for (const auto& r : outcome.responses) {
            if (r.finish_reason == "length") ++truncated;
        }

        std::vector<ParseStatus> statuses;
        if (is_gaze) {
            std::vector<PredictionRecord> points, inouts;
            for (size_t k = 0; k < outcome.responses.size(); ++k) {
                parsing::ParseOutcome po =
                    parsing::parse_gaze(outcome.responses[k].text, cfg.prompt.coord_scale);
                statuses.push_back(po.status);
                log_lines.push_back(parse_log_line(item.request.sample_id, TaskKind::GFo_point,
                                                   static_cast<int>(k), po));
                PredictionRecord point_rec;
                point_rec.sample_id = item.request.sample_id;
                point_rec.task = TaskKind::GFo_point;
                point_rec.point = po.prediction.point.value_or(Point2{0.5, 0.5});
                point_rec.parse_status = po.status;
                point_rec.decode_tag = {cfg.decode.temperature, static_cast<int>(k)};
                points.push_back(point_rec);

                PredictionRecord inout_rec;
                inout_rec.sample_id = item.request.sample_id;
                inout_rec.task = TaskKind::GFo_inout;
                inout_rec.p_io = po.prediction.p_io.value_or(0.5);
                inout_rec.parse_status = po.status;
                inout_rec.decode_tag = {cfg.decode.temperature, static_cast<int>(k)};
                inouts.push_back(inout_rec);
            }
            if (cfg.aggregation == Aggregation::none) {
                records.push_back(points.front());
                records.push_back(inouts.front());
            } else if (cfg.aggregation == Aggregation::average_of_n) {
                records.push_back(metrics::average_of_n(points));
                records.push_back(metrics::average_of_n(inouts));
            } else {
                const GazeSample* truth = gaze_by_id.at(item.request.sample_id);
                records.push_back(metrics::best_of_n(points, truth->gaze_points));
                // Best-of-N is defined on the gaze point; the in/out estimate
                // of the selected sample rides along.
                const int chosen = records.back().decode_tag.sample_index;
                records.push_back(inouts[static_cast<size_t>(chosen)]);
            }
        } else {
            TaskKind task = TaskKind::SG_LAEO;
            switch (social_by_id.at(item.request.sample_id)->task) {
                case SocialTask::LAEO: task = TaskKind::SG_LAEO; break;
                case SocialTask::LAH: task = TaskKind::SG_LAH; break;
                case SocialTask::SA: task = TaskKind::SG_SA; break;
            }
            std::vector<PredictionRecord> preds;
            for (size_t k = 0; k < outcome.responses.size(); ++k) {
                parsing::ParseOutcome po = parsing::parse_social(outcome.responses[k].text);
                statuses.push_back(po.status);
                PredictionRecord rec = po.prediction;
                rec.sample_id = item.request.sample_id;
                rec.task = task;
                rec.decode_tag = {cfg.decode.temperature, static_cast<int>(k)};
                preds.push_back(rec);
                log_lines.push_back(
                    parse_log_line(item.request.sample_id, task, static_cast<int>(k), po));
            }
            if (cfg.aggregation == Aggregation::average_of_n) {
                records.push_back(metrics::average_of_n(preds));
            } else {
                records.push_back(preds.front());
            }
        }
        status.status = worst_status(statuses);
        if (status.status == "fallback") ++manifest.fallbacks;
        manifest.samples.push_back(std::move(status));
    }

    metrics::ReportConfig rc;
    rc.avg_mode = cfg.avg_mode;
    rc.threshold = cfg.threshold;
    rc.fingerprint = cfg.fingerprint();

    RunResult result;
    result.out_dir = cfg.out_dir;
    result.report = metrics::build_report(records, corpus, rc);
    const size_t n_errors =
        static_cast<size_t>(std::count_if(manifest.samples.begin(), manifest.samples.end(),
                                          [](const SampleStatus& s) { return s.status == "error"; }));
    result.report.partial = n_errors > 0;
    result.report.n_errors = n_errors;
    result.status = n_errors > 0 ? RunStatus::partial : RunStatus::complete;

    manifest.fingerprint_hash = result.report.fingerprint_hash;
    manifest.cache_hits = backend.caching ? backend.caching->hits() : 0;
    manifest.requests = backend.caching ? backend.caching->misses()
                                        : static_cast<int64_t>(items.size());
    manifest.truncated = truncated;
    manifest.wall_clock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
    result.manifest = std::move(manifest);

    std::filesystem::create_directories(cfg.out_dir);
    write_file(cfg.out_dir / "report.json", result.report.to_json().dump(2) + "\n");
    write_file(cfg.out_dir / "report.csv", result.report.to_csv());
    write_file(cfg.out_dir / "report.md", result.report.to_markdown());
    write_file(cfg.out_dir / "manifest.json", result.manifest.to_json().dump(2) + "\n");
    write_parse_log(cfg.out_dir / "parse_log.jsonl", log_lines);
    return result;
}

namespace {

struct ProbeScaleOutcome {
    ProbeRow row;
    std::vector<ProbeBucket> buckets;
    std::vector<ojson> log_lines;
};

ProbeScaleOutcome run_probe_scale(const RunConfig& cfg, const Corpus& corpus,
                                  const std::vector<ProbeBox>& probes,
                                  prompting::CoordScale scale,
                                  gateway::ChatBackend* backend_override) {
    std::vector<BatchItem> items;
    items.reserve(probes.size());
    for (const ProbeBox& b : probes) {
        CompletionRequest req;
        req.sample_id = b.probe_id;
        req.prompt = prompting::render_probe_prompt(b, scale, cfg.prompt.decimals);
        req.seed = derive_seed(cfg.run_seed, b.probe_id);
        items.push_back({std::move(req), cfg.decode});
    }
    if (cfg.backend == BackendKind::http) {
        ImagePayloads payloads;
        for (BatchItem& item : items) {
            // Probe runs resize to a 448 px longest side.
            prepare_payloads(cfg, item.request.prompt.image_refs(),
                             gateway::ResizeMode::longest_side, payloads);
            attach_payloads(item.request, payloads);
        }
    }
    BackendStack backend = make_backend(cfg, corpus, backend_override);
    const auto outcomes = gateway::run_batch(backend.top(), items, cfg.endpoint.max_parallel_requests);

    ProbeScaleOutcome out;
    out.row.scale = prompting::to_string(scale);

    // Positive-answer rate vs distance to the nearest GT head (positives sit
    // in the zero bucket).
    constexpr double kBucketWidth = 0.05;
    struct Acc {
        size_t n = 0;
        size_t yes = 0;
    };
    std::map<int, Acc> hist;

    size_t correct = 0, positives = 0, true_positives = 0;
    for (size_t i = 0; i < probes.size(); ++i) {
        const ProbeBox& truth = probes[i];
        if (truth.is_positive) ++positives;
        if (!outcomes[i].ok) {
            throw std::runtime_error("probe request failed for " + truth.probe_id + ": " +
                                     outcomes[i].error);
        }
        const auto yn = parsing::parse_yesno(outcomes[i].responses.front().text);
        ++out.row.n;
        if (yn.status == ParseStatus::fallback) ++out.row.n_fallback;
        const bool said_yes = yn.value.value_or(false);
        // Fallbacks count as incorrect and never enter the sensitivity
        // numerator.
        const bool is_correct = yn.value && *yn.value == truth.is_positive;
        if (is_correct) ++correct;
        if (truth.is_positive && yn.value && *yn.value) ++true_positives;

        const int bucket = truth.distance_to_nearest_gt <= 0.0
                               ? -1
                               : static_cast<int>(truth.distance_to_nearest_gt / kBucketWidth);
        Acc& acc = hist[bucket];
        ++acc.n;
        if (said_yes) ++acc.yes;

        ojson line;
        line["sample_id"] = truth.probe_id;
        line["task"] = "probe";
        line["scale"] = out.row.scale;
        line["status"] = gazebench::to_string(yn.status);
        if (yn.value) line["yes"] = *yn.value;
        line["raw_excerpt"] = outcomes[i].responses.front().text.substr(0, 256);
        out.log_lines.push_back(std::move(line));
    }
    out.row.accuracy = out.row.n == 0 ? 0.0 : static_cast<double>(correct) / out.row.n;
    out.row.sensitivity =
        positives == 0 ? 0.0 : static_cast<double>(true_positives) / positives;
    for (const auto& [bucket, acc] : hist) {
        ProbeBucket b;
        b.lo = bucket < 0 ? 0.0 : bucket * kBucketWidth;
        b.hi = bucket < 0 ? 0.0 : (bucket + 1) * kBucketWidth;
        b.n = acc.n;
        b.yes_rate = acc.n == 0 ? 0.0 : static_cast<double>(acc.yes) / acc.n;
        out.buckets.push_back(b);
    }
    return out;
}

}  // namespace

ProbeResult run_probe(const RunConfig& cfg, gateway::ChatBackend* backend_override) {
    cfg.validate();
    const Corpus corpus = load_corpus(cfg.corpus_path);
    std::vector<ProbeBox> probes = corpus.probes;
    if (probes.empty()) throw std::runtime_error("empty probe corpus");
    std::sort(probes.begin(), probes.end(), [](const ProbeBox& a, const ProbeBox& b) {
        return std::tie(a.image_ref, a.probe_id) < std::tie(b.image_ref, b.probe_id);
    });
    if (cfg.take_first_n && probes.size() > *cfg.take_first_n) probes.resize(*cfg.take_first_n);

    std::vector<prompting::CoordScale> scales;
    if (cfg.probe_both_scales) {
        scales = {prompting::CoordScale::unit, prompting::CoordScale::thousand};
    } else {
        scales = {cfg.prompt.coord_scale};
    }

    ProbeResult result;
    result.out_dir = cfg.out_dir;
    std::vector<ojson> log_lines;
    for (size_t i = 0; i < scales.size(); ++i) {
        ProbeScaleOutcome out = run_probe_scale(cfg, corpus, probes, scales[i], backend_override);
        result.rows.push_back(out.row);
        if (i == 0) result.buckets = out.buckets;
        for (auto& line : out.log_lines) log_lines.push_back(std::move(line));
    }

    ojson j;
    j["fingerprint"] = cfg.fingerprint();
    ojson rows = ojson::array();
    for (const ProbeRow& r : result.rows) {
        rows.push_back(ojson{{"scale", r.scale},
                             {"n", r.n},
                             {"n_fallback", r.n_fallback},
                             {"accuracy", r.accuracy},
                             {"sensitivity", r.sensitivity}});
    }
    j["rows"] = std::move(rows);
    ojson buckets = ojson::array();
    for (const ProbeBucket& b : result.buckets) {
        buckets.push_back(
            ojson{{"lo", b.lo}, {"hi", b.hi}, {"n", b.n}, {"yes_rate", b.yes_rate}});
    }
    j["distance_buckets"] = std::move(buckets);

    std::ostringstream csv;
    csv << "bucket_lo,bucket_hi,n,yes_rate\n";
    for (const ProbeBucket& b : result.buckets) {
        csv << b.lo << ',' << b.hi << ',' << b.n << ',' << b.yes_rate << '\n';
    }
    std::ostringstream md;
    md << "# Head-localization probe report\n\n| Setting | Accuracy | Sensitivity | n | fallback |\n"
       << "|---|---|---|---|---|\n";
    for (const ProbeRow& r : result.rows) {
        md << "| Normalized " << (r.scale == "unit" ? "0-1" : "0-1000") << " | " << r.accuracy
           << " | " << r.sensitivity << " | " << r.n << " | " << r.n_fallback << " |\n";
    }

    std::filesystem::create_directories(cfg.out_dir);
    write_file(cfg.out_dir / "report.json", j.dump(2) + "\n");
    write_file(cfg.out_dir / "report.csv", csv.str());
    write_file(cfg.out_dir / "report.md", md.str());
    write_parse_log(cfg.out_dir / "parse_log.jsonl", log_lines);
    return result;
}

// ---- fine-tuning dataset composition ---------------------------------------

std::string to_string(FtStrategy s) {
    switch (s) {
        case FtStrategy::FTspec_stage1_GF: return "FTspec_stage1_GF";
        case FtStrategy::FTspec_stage2: return "FTspec_stage2";
        case FtStrategy::AllD_GFo: return "AllD_GFo";
        case FtStrategy::AllD_GFo_plus_SG: return "AllD_GFo_plus_SG";
    }
    throw std::logic_error("bad FtStrategy");
}

FtStrategy ft_strategy_from_string(const std::string& s) {
    if (s == "FTspec_stage1_GF" || s == "ftspec1") return FtStrategy::FTspec_stage1_GF;
    if (s == "FTspec_stage2" || s == "ftspec2") return FtStrategy::FTspec_stage2;
    if (s == "AllD_GFo" || s == "alld_gfo") return FtStrategy::AllD_GFo;
    if (s == "AllD_GFo_plus_SG" || s == "alld_gfo_sg") return FtStrategy::AllD_GFo_plus_SG;
    throw std::runtime_error("unknown FT strategy: " + s);
}

ojson FtPlan::to_json() const {
    ojson j;
    ojson arr = ojson::array();
    for (const FtStagePlan& s : stages) {
        arr.push_back(ojson{{"name", s.name},
                            {"out_path", s.out_path.generic_string()},
                            {"n_gaze_samples", s.n_gaze_samples},
                            {"n_social_pairs", s.n_social_pairs},
                            {"n_qa_pairs", s.n_qa_pairs},
                            {"n_lines", s.n_lines}});
    }
    j["stages"] = std::move(arr);
    return j;
}

namespace {

std::vector<GazeSample> train_gaze(const Corpus& corpus, const std::set<DatasetId>& datasets) {
    std::vector<GazeSample> out;
    for (const GazeSample& s : corpus.gaze) {
        if (s.split == Split::train && datasets.count(s.dataset_id)) out.push_back(s);
    }
    std::sort(out.begin(), out.end(),
              [](const GazeSample& a, const GazeSample& b) { return canonical_less(a, b); });
    return out;
}

FtStagePlan export_stage(const FtPlanConfig& cfg, const std::string& name,
                         std::vector<GazeSample> gaze, std::vector<SocialPair> social,
                         const std::filesystem::path& out_dir) {
    const uint64_t stage_seed = derive_seed(cfg.seed, name);
    if (cfg.subsample_n) {
        // Data-scale ablation: a seeded uniform subset of the gaze samples.
        Rng rng(derive_seed(stage_seed, "subsample"));
        rng.shuffle(gaze);
        if (gaze.size() > *cfg.subsample_n) gaze.resize(*cfg.subsample_n);
    }

    Rng rng(derive_seed(stage_seed, "qa"));
    std::vector<prompting::QAPair> pairs;
    pairs.reserve(gaze.size() * 2 + social.size());
    for (const GazeSample& s : gaze) {
        for (auto& p : prompting::build_qa_pairs(s, rng, cfg.scale, cfg.decimals)) {
            pairs.push_back(std::move(p));
        }
    }
    for (const SocialPair& p : social) {
        for (auto& q : prompting::build_qa_pairs(p, rng, cfg.scale, cfg.decimals)) {
            pairs.push_back(std::move(q));
        }
    }
    if (!social.empty()) {
        // Gaze and social supervision are interleaved under the run seed.
        Rng shuffle_rng(derive_seed(stage_seed, "interleave"));
        shuffle_rng.shuffle(pairs);
    }
    if (pairs.empty()) throw std::runtime_error("FT stage '" + name + "' selected no records");

    FtStagePlan plan;
    plan.name = name;
    plan.out_path = out_dir / (name + ".jsonl");
    plan.n_gaze_samples = gaze.size();
    plan.n_social_pairs = social.size();
    plan.n_qa_pairs = pairs.size();
    plan.n_lines = prompting::export_sft(pairs, cfg.epochs, derive_seed(stage_seed, "export"),
                                         plan.out_path, cfg.format)
                       .lines;
    return plan;
}

}  // namespace

FtPlan compose_ft_dataset(const FtPlanConfig& cfg, const Corpus& corpus,
                          const std::filesystem::path& out_dir) {
    FtPlan plan;
    const std::set<DatasetId> all = {DatasetId::GF, DatasetId::VAT, DatasetId::CP,
                                     DatasetId::custom};
    switch (cfg.strategy) {
        case FtStrategy::FTspec_stage1_GF: {
            plan.stages.push_back(export_stage(cfg, "stage1_gf",
                                               train_gaze(corpus, {DatasetId::GF}), {}, out_dir));
            break;
        }
        case FtStrategy::FTspec_stage2: {
            std::vector<GazeSample> gaze;
            std::vector<SocialPair> social;
            for (const std::string& task : cfg.stage2_tasks) {
                if (task == "GFo") {
                    gaze = train_gaze(corpus, {cfg.stage2_target});
                } else {
                    const SocialTask st = social_task_from_string(task);
                    for (const SocialPair& p : corpus.social) {
                        if (p.dataset_id == cfg.stage2_target && p.task == st) social.push_back(p);
                    }
                }
            }
            plan.stages.push_back(export_stage(
                cfg, "stage2_" + gazebench::to_string(cfg.stage2_target), std::move(gaze),
                std::move(social), out_dir));
            break;
        }
        case FtStrategy::AllD_GFo: {
            plan.stages.push_back(
                export_stage(cfg, "alld_gfo", train_gaze(corpus, all), {}, out_dir));
            break;
        }
        case FtStrategy::AllD_GFo_plus_SG: {
            plan.stages.push_back(export_stage(cfg, "alld_gfo_sg", train_gaze(corpus, all),
                                               corpus.social, out_dir));
            break;
        }
    }
    write_file(out_dir / "ft_plan.json", plan.to_json().dump(2) + "\n");
    return plan;
}

}  // namespace gazebench::harness

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "gazebench/corpus.hpp"
#include "gazebench/harness.hpp"
#include "gazebench/jsonl.hpp"

namespace gb = gazebench;
namespace fs = std::filesystem;

namespace {

gb::corpus::ImageSizeLookup size_lookup_from_file(const std::string& path) {
    if (path.empty()) return nullptr;
    auto table = std::make_shared<std::map<std::string, std::pair<int, int>>>();
    const gb::json j = gb::json::parse(gb::read_file(path));
    for (const auto& [ref, wh] : j.items()) {
        (*table)[ref] = {wh.at(0).get<int>(), wh.at(1).get<int>()};
    }
    return [table](const std::string& ref) -> std::optional<std::pair<int, int>> {
        auto it = table->find(ref);
        if (it == table->end()) return std::nullopt;
        return it->second;
    };
}

int cmd_ingest(const std::string& input, const std::string& dataset, const std::string& mapping_path,
               const std::string& sizes_path, const std::string& kind, const std::string& out) {
    const auto rows = gb::read_jsonl(input);
    const gb::DatasetId ds = gb::dataset_from_string(dataset);
    const auto lookup = size_lookup_from_file(sizes_path);
    gb::Corpus corpus;
    size_t rejected = 0;

    if (kind == "gaze") {
        gb::corpus::ColumnMapping mapping;
        if (!mapping_path.empty()) {
            mapping = gb::corpus::ColumnMapping::from_json(gb::json::parse(gb::read_file(mapping_path)));
        }
        auto result = gb::corpus::ingest_gaze_annotations(rows, ds, mapping, lookup);
        corpus.gaze = std::move(result.samples);
        rejected = result.rejections.size();
        for (const auto& r : result.rejections) {
            std::cerr << "reject row " << r.row_index << ": " << r.reason << "\n";
        }
    } else if (kind == "social") {
        gb::corpus::SocialColumnMapping mapping;
        if (!mapping_path.empty()) {
            mapping = gb::corpus::SocialColumnMapping::from_json(
                gb::json::parse(gb::read_file(mapping_path)));
        }
        auto result = gb::corpus::ingest_social_annotations(rows, ds, mapping, lookup);
        corpus.social = std::move(result.pairs);
        rejected = result.rejections.size();
        for (const auto& r : result.rejections) {
            std::cerr << "reject row " << r.row_index << ": " << r.reason << "\n";
        }
    } else {
        std::cerr << "unknown --kind " << kind << " (gaze|social)\n";
        return 1;
    }
    gb::save_corpus(out, corpus);
    std::cout << "ingested " << (corpus.gaze.size() + corpus.social.size()) << " records ("
              << rejected << " rejected) -> " << out << "\n";
    return 0;
}

int cmd_sample_sg(const std::string& input, int stride, uint64_t seed, double min_head_area,
                  int boundary_margin, double npp, const std::string& events_path,
                  const std::string& out) {
    const gb::Corpus corpus = gb::load_corpus(input);
    gb::SamplingConfig cfg;
    cfg.frame_stride = stride;
    cfg.rng_seed = seed;
    cfg.min_head_area_frac = min_head_area;
    cfg.boundary_margin_frames = boundary_margin;
    cfg.negatives_per_positive = npp;

    std::vector<gb::SocialPair> pairs = corpus.social;
    if (stride > 1) pairs = gb::corpus::subsample_frames(pairs, stride);

    gb::corpus::EventLookup events;
    if (!events_path.empty()) {
        for (const gb::json& row : gb::read_jsonl(events_path)) {
            auto& list = events[row.at("pair_id").get<std::string>()];
            list.push_back({row.at("start").get<int64_t>(), row.at("end").get<int64_t>()});
        }
    }
    auto filtered = gb::corpus::filter_social_annotations(pairs, events, cfg);
    std::cerr << "filtered: kept " << filtered.counts.kept << ", small-head "
              << filtered.counts.removed_small_head << ", event-boundary "
              << filtered.counts.removed_event_boundary << "\n";

    auto dedup = gb::corpus::dedup_unordered(filtered.pairs);
    std::cerr << "pairs: ordered " << dedup.ordered_count << ", after unordered dedup "
              << dedup.unordered_count << "\n";

    std::vector<gb::SocialPair> positives, negatives;
    for (const auto& p : dedup.pairs) (p.label ? positives : negatives).push_back(p);
    auto balanced = gb::corpus::sample_balanced_pairs(positives, negatives, cfg);
    for (const auto& [task, n_pos] : balanced.positives_per_task) {
        std::cerr << task << ": " << n_pos << "/" << balanced.negatives_per_task[task] << "\n";
    }

    gb::Corpus out_corpus;
    out_corpus.social = std::move(balanced.pairs);
    gb::save_corpus(out, out_corpus);
    std::cout << "balanced set of " << out_corpus.social.size() << " pairs -> " << out << "\n";
    return 0;
}

int cmd_gen_probe(const std::string& input, uint64_t seed, const std::string& out) {
    const gb::Corpus corpus = gb::load_corpus(input);
    gb::Corpus out_corpus;
    out_corpus.probes = gb::corpus::generate_probe_corpus(corpus.gaze, seed);
    gb::save_corpus(out, out_corpus);
    size_t positives = 0;
    for (const auto& b : out_corpus.probes) positives += b.is_positive ? 1 : 0;
    std::cout << out_corpus.probes.size() << " probe records (" << positives << " positive) -> "
              << out << "\n";
    return 0;
}

int cmd_gen_qa(const std::string& input, const std::string& scale_str, int epochs, uint64_t seed,
               const std::string& format_str, const std::string& out) {
    const gb::Corpus corpus = gb::load_corpus(input);
    const auto scale = gb::prompting::coord_scale_from_string(scale_str);
    gb::Rng rng(seed);
    std::vector<gb::prompting::QAPair> pairs;
    for (const auto& s : corpus.gaze) {
        for (auto& p : gb::prompting::build_qa_pairs(s, rng, scale)) pairs.push_back(std::move(p));
    }
    for (const auto& p : corpus.social) {
        for (auto& q : gb::prompting::build_qa_pairs(p, rng, scale)) pairs.push_back(std::move(q));
    }
    const auto stats = gb::prompting::export_sft(pairs, epochs, seed, out,
                                                 gb::prompting::sft_format_from_string(format_str));
    std::cout << stats.lines << " conversation lines (" << stats.epochs << " epoch passes) -> "
              << out << "\n";
    return 0;
}

int cmd_render_prompt(const std::string& input, const std::string& sample_id,
                      const std::string& strategy, const std::string& scale,
                      const std::string& exemplar_dir) {
    const gb::Corpus corpus = gb::load_corpus(input);
    gb::prompting::PromptSpec spec;
    spec.strategy = gb::prompting::strategy_from_string(strategy);
    spec.coord_scale = gb::prompting::coord_scale_from_string(scale);

    std::optional<gb::prompting::ExemplarBank> bank;
    if (spec.strategy == gb::prompting::Strategy::PrInContextCoT) {
        bank = gb::prompting::ExemplarBank::load(exemplar_dir);
    }
    for (const auto& s : corpus.gaze) {
        if (s.sample_id == sample_id) {
            spec.task = gb::prompting::PromptTask::GFo;
            std::cout << gb::prompting::serialize(
                gb::prompting::render_prompt(spec, s, bank ? &*bank : nullptr));
            return 0;
        }
    }
    for (const auto& p : corpus.social) {
        if (p.pair_id == sample_id) {
            spec.task = gb::prompting::prompt_task_from_string(gb::to_string(p.task));
            std::cout << gb::prompting::serialize(
                gb::prompting::render_prompt(spec, p, bank ? &*bank : nullptr));
            return 0;
        }
    }
    for (const auto& b : corpus.probes) {
        if (b.probe_id == sample_id) {
            std::cout << gb::prompting::serialize(gb::prompting::render_probe_prompt(b, spec.coord_scale));
            return 0;
        }
    }
    std::cerr << "sample not found: " << sample_id << "\n";
    return 1;
}

gb::harness::RunConfig load_run_config(const std::string& config_path) {
    return gb::harness::RunConfig::from_json(gb::json::parse(gb::read_file(config_path)));
}

void apply_overrides(gb::harness::RunConfig& cfg, const std::string& corpus,
                     const std::string& endpoint, const std::string& model,
                     const std::string& mock, int parallel, double temperature, int n,
                     int max_tokens, const std::string& cache_dir, const std::string& out_dir,
                     uint64_t seed, bool seed_set) {
    if (!corpus.empty()) cfg.corpus_path = corpus;
    if (!endpoint.empty()) {
        cfg.backend = gb::harness::BackendKind::http;
        cfg.endpoint.base_url = endpoint;
    }
    if (!model.empty()) cfg.endpoint.model_name = model;
    if (!mock.empty()) {
        cfg.backend = gb::harness::BackendKind::mock;
        cfg.mock = gb::gateway::MockBehavior::parse(mock);
    }
    if (parallel > 0) cfg.endpoint.max_parallel_requests = parallel;
    if (temperature >= 0) cfg.decode.temperature = temperature;
    if (n > 0) cfg.decode.n_samples = n;
    if (max_tokens > 0) cfg.decode.max_new_tokens = max_tokens;
    if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_set) cfg.run_seed = seed;
}

int cmd_report(const std::string& run_dir) {
    const gb::json j = gb::json::parse(gb::read_file(fs::path(run_dir) / "report.json"));
    std::cout << gb::read_file(fs::path(run_dir) / "report.md");
    std::cout << "\n(fingerprint " << j.value("fingerprint_hash", "?") << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gazebench: VLM gaze-understanding evaluation harness"};
    app.require_subcommand(1);

    // ingest
    std::string in_path, dataset = "custom", mapping_path, sizes_path, kind = "gaze", out_path;
    auto* ingest = app.add_subcommand("ingest", "Normalize raw annotation JSONL into canonical records");
    ingest->add_option("--in", in_path, "source JSONL")->required();
    ingest->add_option("--dataset", dataset, "GF|VAT|CP|custom");
    ingest->add_option("--mapping", mapping_path, "column mapping JSON");
    ingest->add_option("--sizes", sizes_path, "image size lookup JSON (ref -> [w,h])");
    ingest->add_option("--kind", kind, "gaze|social");
    ingest->add_option("--out", out_path, "output canonical JSONL")->required();

    // sample-sg
    std::string sg_in, sg_out, events_path;
    int stride = 3, boundary_margin = 2;
    uint64_t seed = 0;
    double min_head_area = 0.0005, npp = 1.0;
    auto* sample_sg = app.add_subcommand("sample-sg", "Balanced social-gaze sampling and filtering");
    sample_sg->add_option("--in", sg_in, "canonical social JSONL")->required();
    sample_sg->add_option("--stride", stride, "frame stride (default 3)");
    sample_sg->add_option("--seed", seed, "rng seed");
    sample_sg->add_option("--min-head-area", min_head_area, "min head area fraction");
    sample_sg->add_option("--boundary-margin", boundary_margin, "event boundary margin (frames)");
    sample_sg->add_option("--negatives-per-positive", npp, "negative:positive ratio");
    sample_sg->add_option("--events", events_path, "gaze-event intervals JSONL");
    sample_sg->add_option("--out", sg_out, "output JSONL")->required();

    // gen-probe
    std::string probe_in, probe_out;
    uint64_t probe_seed = 0;
    auto* gen_probe = app.add_subcommand("gen-probe", "Generate head-localization probe boxes");
    gen_probe->add_option("--in", probe_in, "canonical gaze JSONL")->required();
    gen_probe->add_option("--seed", probe_seed, "rng seed");
    gen_probe->add_option("--out", probe_out, "output probe JSONL")->required();

    // gen-qa
    std::string qa_in, qa_out, qa_scale = "unit", qa_format = "plain";
    int epochs = 1;
    uint64_t qa_seed = 0;
    auto* gen_qa = app.add_subcommand("gen-qa", "Generate SFT QA-pair conversations");
    gen_qa->add_option("--in", qa_in, "canonical JSONL")->required();
    gen_qa->add_option("--scale", qa_scale, "unit|thousand");
    gen_qa->add_option("--epochs", epochs, "export passes");
    gen_qa->add_option("--seed", qa_seed, "rng seed");
    gen_qa->add_option("--format", qa_format, "plain|parts");
    gen_qa->add_option("--out", qa_out, "output conversation JSONL")->required();

    // render-prompt
    std::string rp_in, rp_id, rp_strategy = "PrBase", rp_scale = "unit",
                rp_exemplars = "assets/exemplars";
    auto* render = app.add_subcommand("render-prompt", "Debug-render one prompt");
    render->add_option("--in", rp_in, "canonical JSONL")->required();
    render->add_option("--id", rp_id, "sample/pair/probe id")->required();
    render->add_option("--strategy", rp_strategy, "PrBase|PrCoTBase|PrCoTStruct|PrInContextCoT");
    render->add_option("--scale", rp_scale, "unit|thousand");
    render->add_option("--exemplars", rp_exemplars, "exemplar bank directory");

    // run-eval / run-probe
    std::string config_path, ov_corpus, ov_endpoint, ov_model, ov_mock, ov_cache, ov_out;
    int ov_parallel = 0, ov_n = 0, ov_max_tokens = 0;
    double ov_temp = -1;
    uint64_t ov_seed = 0;
    bool ov_seed_set = false;
    auto add_run_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run config JSON")->required();
        cmd->add_option("--corpus", ov_corpus, "override corpus path");
        cmd->add_option("--endpoint", ov_endpoint, "override endpoint base URL");
        cmd->add_option("--model", ov_model, "override model name");
        cmd->add_option("--mock", ov_mock, "mock behavior, e.g. echo_gt or fixed_offset(0.1,0)");
        cmd->add_option("--parallel", ov_parallel, "max parallel requests");
        cmd->add_option("--temperature", ov_temp, "sampling temperature");
        cmd->add_option("--n", ov_n, "samples per query");
        cmd->add_option("--max-tokens", ov_max_tokens, "max new tokens");
        cmd->add_option("--cache-dir", ov_cache, "response cache directory");
        cmd->add_option("--out", ov_out, "output directory");
        cmd->add_option("--seed", ov_seed, "run seed")->each([&](const std::string&) {
            ov_seed_set = true;
        });
    };
    auto* run_eval_cmd = app.add_subcommand("run-eval", "Run a full evaluation");
    add_run_flags(run_eval_cmd);
    auto* run_probe_cmd = app.add_subcommand("run-probe", "Run the head-localization probe");
    add_run_flags(run_probe_cmd);

    // report
    std::string report_dir;
    auto* report_cmd = app.add_subcommand("report", "Print the report of a finished run");
    report_cmd->add_option("--run-dir", report_dir, "run output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            return cmd_ingest(in_path, dataset, mapping_path, sizes_path, kind, out_path);
        }
        if (sample_sg->parsed()) {
            return cmd_sample_sg(sg_in, stride, seed, min_head_area, boundary_margin, npp,
                                 events_path, sg_out);
        }
        if (gen_probe->parsed()) return cmd_gen_probe(probe_in, probe_seed, probe_out);
        if (gen_qa->parsed()) {
            return cmd_gen_qa(qa_in, qa_scale, epochs, qa_seed, qa_format, qa_out);
        }
        if (render->parsed()) {
            return cmd_render_prompt(rp_in, rp_id, rp_strategy, rp_scale, rp_exemplars);
        }
        if (run_eval_cmd->parsed()) {
            auto cfg = load_run_config(config_path);
            apply_overrides(cfg, ov_corpus, ov_endpoint, ov_model, ov_mock, ov_parallel, ov_temp,
                            ov_n, ov_max_tokens, ov_cache, ov_out, ov_seed, ov_seed_set);
            const auto result = gb::harness::run_eval(cfg);
            std::cout << result.report.to_markdown();
            return static_cast<int>(result.status);
        }
        if (run_probe_cmd->parsed()) {
            auto cfg = load_run_config(config_path);
            apply_overrides(cfg, ov_corpus, ov_endpoint, ov_model, ov_mock, ov_parallel, ov_temp,
                            ov_n, ov_max_tokens, ov_cache, ov_out, ov_seed, ov_seed_set);
            const auto result = gb::harness::run_probe(cfg);
            for (const auto& row : result.rows) {
                std::cout << "scale=" << row.scale << " accuracy=" << row.accuracy
                          << " sensitivity=" << row.sensitivity << " n=" << row.n << "\n";
            }
            return static_cast<int>(result.status);
        }
        if (report_cmd->parsed()) return cmd_report(report_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// Acceptance suite: one pass/fail line per criterion, each with a runtime
// budget. Exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gazebench/corpus.hpp"
#include "gazebench/digest.hpp"
#include "gazebench/harness.hpp"
#include "gazebench/image.hpp"
#include "gazebench/parsing.hpp"
#include "gazebench/prompting.hpp"
#include "gazebench/report.hpp"
#include "gazebench/rng.hpp"

using namespace gazebench;

namespace {

const std::filesystem::path kSourceDir = GAZEBENCH_SOURCE_DIR;
const std::filesystem::path kExemplarDir = kSourceDir / "assets/exemplars";
const std::filesystem::path kWorkDir =
    std::filesystem::temp_directory_path() / "gazebench_acceptance";

struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void expect_near(double got, double want, double tol, const std::string& what) {
        if (!(std::fabs(got - want) <= tol)) {
            std::ostringstream ss;
            ss << what << ": got " << got << ", want " << want << " +/- " << tol;
            failures.push_back(ss.str());
        }
    }
};

std::string golden(const std::string& name) {
    std::string text = read_file(kSourceDir / "tests/fixtures/prompts" / (name + ".golden.txt"));
    const std::string placeholder = "{EXEMPLAR_DIR}";
    const std::string dir = kExemplarDir.generic_string();
    size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), dir);
        pos += dir.size();
    }
    return text;
}

// Synthetic evaluation corpus: gaze targets stay clear of the head center
// and of the frame border so offsets neither clamp nor degenerate.
Corpus synthetic_corpus(int n_gaze, int per_task) {
    Corpus c;
    Rng rng(0xACCE97);
    for (int i = 0; i < n_gaze; ++i) {
        GazeSample s;
        s.sample_id = "gf:" + std::to_string(i);
        s.dataset_id = DatasetId::GF;
        s.image_ref = "vid" + std::to_string(i % 5) + "/f" + std::to_string(i) + ".ppm";
        s.image_width = 640;
        s.image_height = 480;
        s.head = {0.40, 0.05, 0.55, 0.20};
        s.gaze_points = {{0.05 + 0.8 * rng.next_double(), 0.45 + 0.4 * rng.next_double()}};
        s.inout_label = i % 4 != 0;
        s.split = Split::test;
        c.gaze.push_back(s);
    }
    int id = 0;
    for (SocialTask task : {SocialTask::LAEO, SocialTask::LAH, SocialTask::SA}) {
        for (int i = 0; i < per_task; ++i) {
            SocialPair p;
            p.pair_id = "sg:" + std::to_string(id++);
            p.dataset_id = DatasetId::VAT;
            p.image_ref = "pair" + std::to_string(i) + ".ppm";
            p.image_width = 640;
            p.image_height = 480;
            p.head_a = {0.1, 0.1, 0.2, 0.2};
            p.head_b = {0.6, 0.6, 0.7, 0.7};
            p.task = task;
            p.label = i % 2 == 0;
            p.ordered = task == SocialTask::LAH;
            c.social.push_back(p);
        }
    }
    return c;
}

harness::RunConfig run_config(const Corpus& corpus, const std::string& name) {
    std::filesystem::create_directories(kWorkDir);
    const auto corpus_path = kWorkDir / (name + "_corpus.jsonl");
    save_corpus(corpus_path, corpus);
    harness::RunConfig cfg;
    cfg.corpus_path = corpus_path;
    cfg.out_dir = kWorkDir / (name + "_out");
    cfg.backend = harness::BackendKind::mock;
    return cfg;
}

const metrics::TaskMetrics* find_row(const metrics::MetricsReport& report,
                                     const std::string& task) {
    for (const auto& r : report.rows) {
        if (r.task == task) return &r;
    }
    return nullptr;
}

// ---- criteria --------------------------------------------------------------

void criterion_prompt_fidelity(Check& check) {
    using namespace prompting;
    const auto bank = ExemplarBank::load(kExemplarDir);
    GazeSample gaze;
    gaze.sample_id = "fix:gaze";
    gaze.dataset_id = DatasetId::GF;
    gaze.image_ref = "images/query.ppm";
    gaze.image_width = 640;
    gaze.image_height = 480;
    gaze.head = {0.25, 0.1, 0.5, 0.5};
    gaze.gaze_points = {{0.81, 0.24}};
    SocialPair laeo;
    laeo.pair_id = "fix:pair";
    laeo.dataset_id = DatasetId::VAT;
    laeo.image_ref = "images/pair.ppm";
    laeo.image_width = 640;
    laeo.image_height = 480;
    laeo.head_a = {0.1, 0.2, 0.3, 0.4};
    laeo.head_b = {0.5, 0.25, 0.7, 0.55};
    laeo.task = SocialTask::LAEO;
    laeo.label = true;

    const std::pair<Strategy, const char*> gfo_cases[] = {
        {Strategy::PrBase, "gfo_prbase"},
        {Strategy::PrCoTBase, "gfo_prcotbase"},
        {Strategy::PrCoTStruct, "gfo_prcotstruct"},
        {Strategy::PrInContextCoT, "gfo_princontext"},
    };
    for (const auto& [strategy, fixture] : gfo_cases) {
        PromptSpec spec;
        spec.task = PromptTask::GFo;
        spec.strategy = strategy;
        check.expect(serialize(render_prompt(spec, gaze, &bank)) == golden(fixture),
                     std::string("GFo render differs from fixture ") + fixture);
    }
    const std::pair<Strategy, const char*> sg_cases[] = {
        {Strategy::PrBase, "sg_laeo_prbase"},
        {Strategy::PrCoTBase, "sg_laeo_prcotbase"},
        {Strategy::PrCoTStruct, "sg_laeo_prcotstruct"},
        {Strategy::PrInContextCoT, "sg_laeo_princontext"},
    };
    for (const auto& [strategy, fixture] : sg_cases) {
        PromptSpec spec;
        spec.task = PromptTask::LAEO;
        spec.strategy = strategy;
        check.expect(serialize(render_prompt(spec, laeo, &bank)) == golden(fixture),
                     std::string("SG render differs from fixture ") + fixture);
    }
    ProbeBox probe;
    probe.probe_id = "fix:probe";
    probe.image_ref = "images/query.ppm";
    probe.box = {0.25, 0.1, 0.5, 0.5};
    check.expect(serialize(render_probe_prompt(probe, CoordScale::unit)) == golden("probe"),
                 "probe render differs from fixture");
}

void criterion_parser_fixtures(Check& check) {
    using namespace parsing;
    using prompting::CoordScale;

    struct GazeCase {
        const char* text;
        CoordScale scale;
        ParseStatus status;
        double p_io;
        double x, y;
    };
    // Fallbacks must land exactly on (0.5, (0.5, 0.5)).
    const GazeCase gaze_cases[] = {
        {"[{\"inout\": 1.0, \"gaze_point\": [0.81, 0.24]}]", CoordScale::unit, ParseStatus::ok, 1.0, 0.81, 0.24},
        {"[{\"inout\": 1.0, \"gaze_point\": [810, 240]}]", CoordScale::thousand, ParseStatus::ok, 1.0, 0.81, 0.24},
        {"### Reasoning ###\n1. Faces right.\n\n### Gaze Point ###\n```json\n[\n{\"inout\": 0.9, \"gaze_point\": [0.3, 0.4]}\n]\n```", CoordScale::unit, ParseStatus::ok, 0.9, 0.3, 0.4},
        {"```json\n[{\"inout\": 1.0, \"gaze_point\": [0.14, 0.23]}]\n```\n### Gaze Point ###\n```json\n[{\"inout\": 0.6, \"gaze_point\": [0.5, 0.9]}]\n```", CoordScale::unit, ParseStatus::ok, 0.6, 0.5, 0.9},
        {"{\"inout\": 0.7, \"gaze_point\": [0.1, 0.2]}", CoordScale::unit, ParseStatus::ok, 0.7, 0.1, 0.2},
        {"[{'inout': 0.8, 'gaze_point': [0.2, 0.3],}]", CoordScale::unit, ParseStatus::ok, 0.8, 0.2, 0.3},
        {"{\"inout\": 1, \"gaze_point\": [1, 0]}", CoordScale::unit, ParseStatus::ok, 1.0, 1.0, 0.0},
        {"[{\"inout\": 1.4, \"gaze_point\": [0.2, -0.1]}]", CoordScale::unit, ParseStatus::clamped, 1.0, 0.2, 0.0},
        {"{\"inout\": -0.25, \"gaze_point\": [1200, 500]}", CoordScale::thousand, ParseStatus::clamped, 0.0, 1.0, 0.5},
        {"The person is looking left.", CoordScale::unit, ParseStatus::fallback, 0.5, 0.5, 0.5},
        {"", CoordScale::unit, ParseStatus::fallback, 0.5, 0.5, 0.5},
        {"   \n\t  ", CoordScale::unit, ParseStatus::fallback, 0.5, 0.5, 0.5},
        {"I cannot determine this.", CoordScale::unit, ParseStatus::fallback, 0.5, 0.5, 0.5},
        {"{\"inout\": 1.0, \"gaze_point\": [400, 12]}", CoordScale::unit, ParseStatus::fallback, 0.5, 0.5, 0.5},
        {"{\"inout\": \"0.9 (high)\", \"gaze_point\": [0.1, 0.2]}", CoordScale::unit, ParseStatus::fallback, 0.5, 0.5, 0.5},
        {"{\"gaze_point\": [0.1]}", CoordScale::unit, ParseStatus::fallback, 0.5, 0.5, 0.5},
        {"{\"answer\": 42}", CoordScale::unit, ParseStatus::fallback, 0.5, 0.5, 0.5},
        {"### Gaze Point ###\n```json\n[{\"inout\": 0.5, \"gaze_p", CoordScale::unit, ParseStatus::fallback, 0.5, 0.5, 0.5},
        {"{\"inout\": NaN, \"gaze_point\": [0.1, 0.2]}", CoordScale::unit, ParseStatus::fallback, 0.5, 0.5, 0.5},
    };
    int i = 0;
    for (const auto& tc : gaze_cases) {
        const ParseOutcome out = parse_gaze(tc.text, tc.scale);
        const std::string tag = "gaze fixture #" + std::to_string(i++);
        check.expect(out.status == tc.status, tag + " status");
        check.expect_near(out.prediction.p_io.value_or(-1), tc.p_io, 1e-12, tag + " p_io");
        check.expect(out.prediction.point.has_value(), tag + " point present");
        if (out.prediction.point) {
            check.expect_near(out.prediction.point->x, tc.x, 1e-12, tag + " x");
            check.expect_near(out.prediction.point->y, tc.y, 1e-12, tag + " y");
        }
    }

    struct SocialCase {
        const char* text;
        ParseStatus status;
        double p_sg;
    };
    const SocialCase social_cases[] = {
        {"[{\"label\": 1}]", ParseStatus::ok, 1.0},
        {"[{\"label\": 0.85}]", ParseStatus::ok, 0.85},
        {"### Social Gaze Label ###\n```json\n[\n{\"label\": 0.25}\n]\n```", ParseStatus::ok, 0.25},
        {"no", ParseStatus::ok, 0.0},
        {"  Yes. ", ParseStatus::ok, 1.0},
        {"[{'label': 0.75}]", ParseStatus::ok, 0.75},
        {"{\"label\": 1.6}", ParseStatus::clamped, 1.0},
        {"", ParseStatus::fallback, 0.5},
        {"I cannot determine this.", ParseStatus::fallback, 0.5},
        {"{\"label\": 160}", ParseStatus::fallback, 0.5},
        {"{\"inout\": 0.5}", ParseStatus::fallback, 0.5},
    };
    i = 0;
    for (const auto& tc : social_cases) {
        const ParseOutcome out = parse_social(tc.text);
        const std::string tag = "social fixture #" + std::to_string(i++);
        check.expect(out.status == tc.status, tag + " status");
        check.expect_near(out.prediction.p_sg.value_or(-1), tc.p_sg, 1e-12, tag + " p_sg");
    }

    struct YesNoCase {
        const char* text;
        int expected;  // 1 yes, 0 no, -1 fallback
    };
    const YesNoCase yesno_cases[] = {
        {"Yes.", 1}, {"yes", 1}, {"YES!", 1},  {"No, there is no head.", 0},
        {"no", 0},   {"Unclear.", -1}, {"", -1}, {"nose to nose", -1},
        {"The answer is Yes", 1},
    };
    i = 0;
    for (const auto& tc : yesno_cases) {
        const YesNoOutcome out = parse_yesno(tc.text);
        const std::string tag = "yesno fixture #" + std::to_string(i++);
        if (tc.expected < 0) {
            check.expect(!out.value.has_value() && out.status == ParseStatus::fallback,
                         tag + " fallback");
        } else {
            check.expect(out.value.has_value() && *out.value == (tc.expected == 1), tag);
        }
    }

    // Fuzz: 1e5 random strings through every parser without an exception.
    Rng rng(0xF0220);
    const std::string pieces[] = {"{",  "}",     "[",   "]",    "\"",   "json", "```", "0.5",
                                  "inout", "gaze_point", "label", ":", ",", "\n", "yes", "No",
                                  "###", "Gaze Point", "\\", "'", "e9", "-"};
    size_t exceptions = 0;
    for (int k = 0; k < 100000; ++k) {
        std::string s;
        const size_t len = rng.below(48);
        for (size_t j = 0; j < len; ++j) {
            if (rng.below(3) == 0) s += pieces[rng.below(std::size(pieces))];
            else s += static_cast<char>(rng.below(256));
        }
        try {
            (void)parse_gaze(s, CoordScale::unit);
            (void)parse_gaze(s, CoordScale::thousand);
            (void)parse_social(s);
            (void)parse_yesno(s);
        } catch (...) {
            ++exceptions;
        }
    }
    check.expect(exceptions == 0,
                 "parser fuzzing raised " + std::to_string(exceptions) + " exceptions");
}

void criterion_metric_oracles(Check& check) {
    using namespace metrics;
    // AP vs the exhaustive positive-rank oracle, 1e4 random instances, n <= 12.
    Rng rng(0x0AC3);
    for (int t = 0; t < 10000; ++t) {
        const size_t n = 1 + rng.below(12);
        std::vector<double> scores(n);
        std::vector<bool> labels(n);
        bool any = false;
        for (size_t k = 0; k < n; ++k) {
            scores[k] = static_cast<double>(rng.below(6)) / 5.0;
            labels[k] = rng.below(2) == 0;
            any = any || labels[k];
        }
        if (!any) labels[rng.below(n)] = true;

        std::vector<size_t> order(n);
        for (size_t k = 0; k < n; ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return scores[a] > scores[b]; });
        size_t total_pos = 0;
        for (bool l : labels) total_pos += l ? 1 : 0;
        double oracle = 0.0;
        for (size_t k = 0; k < n; ++k) {
            if (!labels[order[k]]) continue;
            size_t pos_at_k = 0;
            for (size_t j = 0; j <= k; ++j) pos_at_k += labels[order[j]] ? 1 : 0;
            oracle += static_cast<double>(pos_at_k) / static_cast<double>(k + 1);
        }
        oracle /= static_cast<double>(total_pos);

        const double got = average_precision(scores, labels);
        if (std::fabs(got - oracle) > 1e-12) {
            check.expect(false, "AP diverged from the oracle at trial " + std::to_string(t));
            return;
        }
    }

    // l2 metric axioms at 1e-9.
    Rng prng(0x12D);
    for (int t = 0; t < 5000; ++t) {
        const Point2 p{prng.next_double(), prng.next_double()};
        const Point2 q{prng.next_double(), prng.next_double()};
        const Point2 r{prng.next_double(), prng.next_double()};
        check.expect(std::fabs(l2(p, q) - l2(q, p)) <= 1e-9, "l2 symmetry");
        check.expect(l2(p, p) <= 1e-9, "l2 identity");
        check.expect(l2(p, r) <= l2(p, q) + l2(q, r) + 1e-9, "l2 triangle inequality");
        if (!check.failures.empty()) return;
    }
    check.expect_near(l2({0.5, 0.5}, {0.8, 0.9}), 0.5, 1e-12, "l2 worked example");

    // Angular constructions at 1e-9.
    const HeadBox head{0.4, 0.4, 0.6, 0.6};
    const std::vector<Point2> gt = {{0.5, 1.0}};
    check.expect_near(*angular_error_deg(head, {1.0, 0.5}, gt), 90.0, 1e-9,
                      "90-degree construction");
    check.expect_near(*angular_error_deg(head, {0.5, 0.9}, gt), 0.0, 1e-9, "parallel construction");
    check.expect_near(*angular_error_deg(head, {0.5, 0.1}, gt), 180.0, 1e-9,
                      "antiparallel construction");
    check.expect(!angular_error_deg(head, {0.5, 0.5}, gt).has_value(),
                 "degenerate direction must be excluded");
}

void criterion_mock_end_to_end(Check& check) {
    const Corpus corpus = synthetic_corpus(200, 30);

    {
        harness::RunConfig cfg = run_config(corpus, "acc_echo");
        cfg.tasks = {"GFo", "LAEO", "LAH", "SA"};
        cfg.mock = gateway::MockBehavior::parse("echo_gt");
        const auto result = harness::run_eval(cfg);
        const auto* point = find_row(result.report, "GFo_point");
        check.expect(point != nullptr && point->n_samples == 200, "echo run covers 200 samples");
        if (point) {
            check.expect_near(*point->avg_l2, 0.0, 0.0, "echo Avg L2 == 0");
            check.expect_near(*point->min_l2, 0.0, 0.0, "echo Min L2 == 0");
            check.expect_near(*point->ang_err_deg, 0.0, 0.0, "echo Ang Err == 0");
        }
    }
    {
        harness::RunConfig cfg = run_config(corpus, "acc_offset");
        cfg.mock = gateway::MockBehavior::parse("fixed_offset(0.1,0)");
        const auto result = harness::run_eval(cfg);
        const auto* point = find_row(result.report, "GFo_point");
        check.expect(point != nullptr, "offset run has a point row");
        if (point) check.expect_near(*point->avg_l2, 0.1, 1e-9, "fixed_offset Avg L2");
    }
    {
        harness::RunConfig cfg = run_config(corpus, "acc_biased");
        cfg.tasks = {"LAEO", "LAH", "SA"};
        cfg.mock = gateway::MockBehavior::parse("biased_sg(0.5)");
        const auto result = harness::run_eval(cfg);
        for (const char* task : {"SG_LAEO", "SG_LAH", "SG_SA"}) {
            const auto* row = find_row(result.report, task);
            check.expect(row != nullptr, std::string(task) + " row present");
            if (!row) continue;
            check.expect_near(*row->recall, 1.0, 1e-9, std::string(task) + " recall");
            check.expect_near(*row->precision, 0.5, 1e-9, std::string(task) + " precision");
            check.expect_near(*row->f1, 2.0 / 3.0, 1e-9, std::string(task) + " F1");
        }
    }
}

void criterion_sampling_invariants(Check& check) {
    Rng rng(0x5A11);
    auto make_pair = [&](int id, SocialTask task, bool label) {
        SocialPair p;
        p.pair_id = "p" + std::to_string(id);
        p.dataset_id = DatasetId::VAT;
        p.image_ref = "v/f" + std::to_string(id) + ".ppm";
        p.image_width = 640;
        p.image_height = 480;
        const double x0 = rng.next_double() * 0.4, y0 = rng.next_double() * 0.4;
        p.head_a = {x0, y0, x0 + 0.1, y0 + 0.1};
        p.head_b = {x0 + 0.3, y0 + 0.3, x0 + 0.4, y0 + 0.4};
        p.task = task;
        p.label = label;
        p.frame_index = id;
        return p;
    };

    // Exact parity per task on 100 random corpora.
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<SocialPair> pos, neg;
        int id = 0;
        for (SocialTask task : {SocialTask::LAEO, SocialTask::LAH, SocialTask::SA}) {
            const uint64_t n_pos = rng.below(25);
            const uint64_t n_neg = n_pos + rng.below(40);
            for (uint64_t k = 0; k < n_pos; ++k) pos.push_back(make_pair(id++, task, true));
            for (uint64_t k = 0; k < n_neg; ++k) neg.push_back(make_pair(id++, task, false));
        }
        SamplingConfig cfg;
        cfg.rng_seed = trial;
        const auto out = corpus::sample_balanced_pairs(pos, neg, cfg);
        std::map<std::string, std::pair<size_t, size_t>> counts;
        for (const auto& p : out.pairs) {
            auto& c = counts[to_string(p.task)];
            (p.label ? c.first : c.second) += 1;
        }
        for (const auto& [task, c] : counts) {
            if (c.first != c.second) {
                check.expect(false, "positive/negative parity broke for " + task + " at trial " +
                                        std::to_string(trial));
                return;
            }
        }
    }

    // Stride-3 subsampling keeps exactly ceil(n/3) per video.
    for (int n : {1, 2, 3, 7, 9, 100, 101}) {
        std::vector<SocialPair> video;
        for (int f = 0; f < n; ++f) {
            SocialPair p = make_pair(f, SocialTask::LAEO, true);
            p.frame_index = f;
            video.push_back(p);
        }
        const auto kept = corpus::subsample_frames(video, 3);
        check.expect(kept.size() == static_cast<size_t>((n + 2) / 3),
                     "stride-3 kept " + std::to_string(kept.size()) + " of " + std::to_string(n));
    }

    // Same seed, byte-identical output.
    std::vector<SocialPair> pos, neg;
    for (int k = 0; k < 40; ++k) pos.push_back(make_pair(k, SocialTask::SA, true));
    for (int k = 0; k < 90; ++k) neg.push_back(make_pair(1000 + k, SocialTask::SA, false));
    SamplingConfig cfg;
    cfg.rng_seed = 0xBEEF;
    const auto a = corpus::sample_balanced_pairs(pos, neg, cfg);
    const auto b = corpus::sample_balanced_pairs(pos, neg, cfg);
    std::string bytes_a, bytes_b;
    for (const auto& p : a.pairs) bytes_a += to_json(p).dump() + "\n";
    for (const auto& p : b.pairs) bytes_b += to_json(p).dump() + "\n";
    check.expect(bytes_a == bytes_b, "seeded balanced sampling must be byte-identical");
}

void criterion_image_prep(Check& check) {
    using namespace gateway;
    check.expect(fit_pixel_cap(896, 896) == Dims{448, 448}, "896x896 must map to 448x448");
    check.expect(fit_pixel_cap(1280, 720) == Dims{597, 336}, "1280x720 must map to 597x336");

    Rng rng(0x1196);
    for (int i = 0; i < 10000; ++i) {
        const int w = 1 + static_cast<int>(rng.below(8192));
        const int h = 1 + static_cast<int>(rng.below(8192));
        const Dims d = fit_pixel_cap(w, h);
        if (static_cast<int64_t>(d.width) * d.height > kDefaultPixelCap) {
            check.expect(false, "pixel cap exceeded at " + std::to_string(w) + "x" +
                                    std::to_string(h));
            return;
        }
        const double deviation =
            std::fabs((static_cast<double>(d.width) / d.height) /
                          (static_cast<double>(w) / h) -
                      1.0);
        if (deviation > 0.01) {
            check.expect(false, "aspect deviation " + std::to_string(deviation) + " at " +
                                    std::to_string(w) + "x" + std::to_string(h));
            return;
        }
    }
}

void criterion_qa_round_trip(Check& check) {
    using namespace prompting;
    Rng rng(0x0A9A);
    Rng gen(0x09AD);
    int checked = 0;
    while (checked < 10000) {
        GazeSample s;
        s.sample_id = "qa:" + std::to_string(checked);
        s.dataset_id = DatasetId::GF;
        s.image_ref = "img.ppm";
        s.image_width = 640;
        s.image_height = 480;
        s.head = {0.2, 0.2, 0.4, 0.4};
        s.gaze_points = {{gen.next_double(), gen.next_double()}};
        s.inout_label = gen.below(2) == 0;
        const CoordScale scale = gen.below(2) == 0 ? CoordScale::unit : CoordScale::thousand;
        const auto pairs = build_qa_pairs(s, rng, scale);
        const auto io = parsing::parse_gaze(pairs[0].answer, scale);
        const auto pt = parsing::parse_gaze(pairs[1].answer, scale);
        const bool ok = io.status == ParseStatus::ok && pt.status == ParseStatus::ok &&
                        *io.prediction.p_io == (*s.inout_label ? 1.0 : 0.0) &&
                        std::fabs(pt.prediction.point->x - s.gaze_points[0].x) <= 0.0005 &&
                        std::fabs(pt.prediction.point->y - s.gaze_points[0].y) <= 0.0005;
        if (!ok) {
            check.expect(false, "QA round-trip failed for " + s.sample_id);
            return;
        }
        checked += 2;

        SocialPair p;
        p.pair_id = "qp:" + std::to_string(checked);
        p.dataset_id = DatasetId::VAT;
        p.image_ref = "img.ppm";
        p.image_width = 640;
        p.image_height = 480;
        p.head_a = {0.1, 0.1, 0.2, 0.2};
        p.head_b = {0.5, 0.5, 0.7, 0.7};
        p.task = static_cast<SocialTask>(gen.below(3));
        p.label = gen.below(2) == 0;
        const auto sp = build_qa_pairs(p, rng, scale);
        const auto so = parsing::parse_social(sp[0].answer);
        if (!(so.status == ParseStatus::ok && *so.prediction.p_sg == (p.label ? 1.0 : 0.0))) {
            check.expect(false, "QA social round-trip failed for " + p.pair_id);
            return;
        }
        ++checked;
    }

    // Two-epoch export changes at least 90% of question texts at n = 1000.
    std::vector<QAPair> pairs;
    Rng qa_rng(0x2E30);
    for (int i = 0; i < 500; ++i) {
        GazeSample s;
        s.sample_id = "ep:" + std::to_string(i);
        s.dataset_id = DatasetId::GF;
        s.image_ref = "img.ppm";
        s.image_width = 640;
        s.image_height = 480;
        s.head = {0.2, 0.2, 0.4, 0.4};
        s.gaze_points = {{0.6, 0.7}};
        for (auto& p : build_qa_pairs(s, qa_rng, CoordScale::unit)) pairs.push_back(std::move(p));
    }
    std::filesystem::create_directories(kWorkDir);
    const auto path = kWorkDir / "acc_epochs.jsonl";
    export_sft(pairs, 2, 0xE70C, path);
    const auto rows = read_jsonl(path);
    size_t differing = 0;
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto q1 = rows[i].at("messages").at(0).at("content").get<std::string>();
        const auto q2 = rows[i + pairs.size()].at("messages").at(0).at("content").get<std::string>();
        if (q1 != q2) ++differing;
    }
    check.expect(differing * 10 >= pairs.size() * 9,
                 "only " + std::to_string(differing) + " of " + std::to_string(pairs.size()) +
                     " questions changed across epochs");
}

void criterion_aggregation(Check& check) {
    using namespace metrics;
    Rng rng(0xA99);
    const std::vector<Point2> gt = {{0.5, 0.5}};
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<PredictionRecord> pool;
        double prev = std::numeric_limits<double>::infinity();
        for (int n = 0; n < 8; ++n) {
            PredictionRecord r;
            r.sample_id = "s";
            r.task = TaskKind::GFo_point;
            r.point = Point2{rng.next_double(), rng.next_double()};
            r.decode_tag = {0.7, n};
            pool.push_back(r);
            const auto best = best_of_n(pool, gt);
            const double d = avg_min_l2(*best.point, gt).min;
            if (d > prev + 1e-15) {
                check.expect(false, "best_of_n distance increased with pool growth");
                return;
            }
            prev = d;
        }
    }

    // Hand-computed centroid.
    std::vector<PredictionRecord> preds;
    const Point2 points[] = {{0.1, 0.9}, {0.3, 0.7}, {0.8, 0.2}};
    for (int i = 0; i < 3; ++i) {
        PredictionRecord r;
        r.sample_id = "s";
        r.task = TaskKind::GFo_point;
        r.point = points[i];
        r.decode_tag = {0.7, i};
        preds.push_back(r);
    }
    const auto avg = average_of_n(preds);
    check.expect_near(avg.point->x, (0.1 + 0.3 + 0.8) / 3.0, 1e-12, "centroid x");
    check.expect_near(avg.point->y, (0.9 + 0.7 + 0.2) / 3.0, 1e-12, "centroid y");
}

void criterion_probe_pipeline(Check& check) {
    Rng rng(0x9B0E);
    // Exhaustive zero-IoU check over generated probe sets.
    std::vector<GazeSample> gaze;
    for (int i = 0; i < 60; ++i) {
        GazeSample s;
        s.sample_id = "pg:" + std::to_string(i);
        s.dataset_id = DatasetId::VAT;
        s.image_ref = "img" + std::to_string(i / 3) + ".ppm";
        s.image_width = 640;
        s.image_height = 480;
        const double x0 = rng.next_double() * 0.5, y0 = rng.next_double() * 0.5;
        s.head = {x0, y0, x0 + 0.08 + rng.next_double() * 0.1, y0 + 0.08 + rng.next_double() * 0.1};
        s.gaze_points = {{0.9, 0.9}};
        gaze.push_back(s);
    }
    Corpus corpus;
    corpus.probes = corpus::generate_probe_corpus(gaze, 0x9B0E);
    std::map<std::string, std::vector<HeadBox>> heads_by_image;
    for (const auto& s : gaze) heads_by_image[s.image_ref].push_back(s.head);
    size_t positives = 0;
    for (const auto& probe : corpus.probes) {
        if (probe.is_positive) {
            ++positives;
            continue;
        }
        for (const auto& head : heads_by_image[probe.image_ref]) {
            if (iou(probe.box, head) != 0.0) {
                check.expect(false, "negative probe overlaps a head in " + probe.image_ref);
                return;
            }
        }
    }
    check.expect(positives * 2 == corpus.probes.size(), "probe corpus must be balanced 1:1");

    harness::RunConfig cfg = run_config(corpus, "acc_probe");
    cfg.mock = gateway::MockBehavior::parse("biased_sg(1.0)");  // always yes
    const auto result = harness::run_probe(cfg);
    check.expect(result.rows.size() == 1, "one probe row per scale");
    if (!result.rows.empty()) {
        check.expect_near(result.rows[0].accuracy, 0.5, 1e-12, "always-yes accuracy");
        check.expect_near(result.rows[0].sensitivity, 1.0, 1e-12, "always-yes sensitivity");
    }
}

void criterion_resumability(Check& check) {
    const Corpus corpus = synthetic_corpus(80, 15);
    harness::RunConfig cfg = run_config(corpus, "acc_resume");
    cfg.tasks = {"GFo", "LAEO", "LAH", "SA"};
    cfg.mock = gateway::MockBehavior::parse("echo_gt");
    cfg.cache_dir = kWorkDir / "acc_resume_cache";
    std::filesystem::remove_all(*cfg.cache_dir);

    harness::RunConfig half = cfg;
    half.take_first_n = 40;
    half.out_dir = kWorkDir / "acc_resume_half";
    harness::run_eval(half);

    harness::RunConfig resumed = cfg;
    resumed.out_dir = kWorkDir / "acc_resume_full";
    const auto resumed_result = harness::run_eval(resumed);
    check.expect(resumed_result.manifest.cache_hits > 0, "resume must hit the cache");

    harness::RunConfig control = cfg;
    control.cache_dir = kWorkDir / "acc_resume_cache_b";
    std::filesystem::remove_all(*control.cache_dir);
    control.out_dir = kWorkDir / "acc_resume_control";
    harness::run_eval(control);

    check.expect(read_file(resumed.out_dir / "report.json") ==
                     read_file(control.out_dir / "report.json"),
                 "resumed report.json differs from the uninterrupted run");
    check.expect(read_file(resumed.out_dir / "report.csv") ==
                     read_file(control.out_dir / "report.csv"),
                 "resumed report.csv differs from the uninterrupted run");
    check.expect(read_file(resumed.out_dir / "report.md") ==
                     read_file(control.out_dir / "report.md"),
                 "resumed report.md differs from the uninterrupted run");

    harness::RunConfig warm = cfg;
    warm.out_dir = kWorkDir / "acc_resume_warm";
    const auto warm_result = harness::run_eval(warm);
    check.expect(warm_result.manifest.requests == 0,
                 "a fully cached rerun must issue zero backend calls");
    check.expect(read_file(warm.out_dir / "report.json") ==
                     read_file(control.out_dir / "report.json"),
                 "cached rerun must reproduce the report byte-for-byte");
}

struct Criterion {
    int number;
    const char* name;
    double budget_seconds;
    std::function<void(Check&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "prompt fidelity: 9 golden renders byte-exact", 1.0, criterion_prompt_fidelity},
        {2, "parser fixtures and 1e5-string fuzz", 10.0, criterion_parser_fixtures},
        {3, "metric oracles: AP vs exhaustive, l2/angular axioms", 30.0, criterion_metric_oracles},
        {4, "end-to-end mock runs on a 200-sample corpus", 60.0, criterion_mock_end_to_end},
        {5, "sampling invariants: parity, stride, determinism", 10.0, criterion_sampling_invariants},
        {6, "image prep: pixel cap and aspect over 1e4 dims", 10.0, criterion_image_prep},
        {7, "QA round-trip and per-epoch resampling", 30.0, criterion_qa_round_trip},
        {8, "aggregation: Best-of-N monotone, Average-of-N centroid", 10.0, criterion_aggregation},
        {9, "probe pipeline: zero-IoU negatives, balanced accuracy", 10.0, criterion_probe_pipeline},
        {10, "resumability: cache-backed byte-identical reports", 60.0, criterion_resumability},
    };

    std::filesystem::remove_all(kWorkDir);
    int failures = 0;
    for (const auto& criterion : criteria) {
        Check check;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criterion.run(check);
        } catch (const std::exception& e) {
            check.failures.push_back(std::string("exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (elapsed > criterion.budget_seconds) {
            std::ostringstream ss;
            ss << "runtime " << elapsed << "s exceeds budget " << criterion.budget_seconds << "s";
            check.failures.push_back(ss.str());
        }
        const bool ok = check.failures.empty();
        std::printf("[%s] criterion %2d: %s (%.2fs)\n", ok ? "PASS" : "FAIL", criterion.number,
                    criterion.name, elapsed);
        for (const auto& f : check.failures) std::printf("       - %s\n", f.c_str());
        failures += ok ? 0 : 1;
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
    return 0;
}

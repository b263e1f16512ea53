#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gazebench/jsonl.hpp"
#include "gazebench/records.hpp"
#include "gazebench/rng.hpp"

namespace gazebench::prompting {

enum class PromptTask { GFo, LAEO, LAH, SA, probe };
enum class Strategy { PrBase, PrCoTBase, PrCoTStruct, PrInContextCoT };
enum class CoordScale { unit, thousand };

std::string to_string(PromptTask t);
std::string to_string(Strategy s);
std::string to_string(CoordScale s);
PromptTask prompt_task_from_string(const std::string& s);
Strategy strategy_from_string(const std::string& s);
CoordScale coord_scale_from_string(const std::string& s);

struct PromptSpec {
    PromptTask task = PromptTask::GFo;
    Strategy strategy = Strategy::PrBase;
    CoordScale coord_scale = CoordScale::unit;
    int decimals = 3;  // unit scale only; thousand scale renders integers
    // In-context ablation: 1 keeps only the first exemplar.
    int n_exemplars = 2;
};

struct TextPart {
    std::string text;
    bool operator==(const TextPart&) const = default;
};
struct ImagePart {
    std::string image_ref;
    bool operator==(const ImagePart&) const = default;
};
using Part = std::variant<TextPart, ImagePart>;

enum class Role { system, user, assistant };
std::string to_string(Role r);

struct Message {
    Role role = Role::user;
    std::vector<Part> parts;
};

struct RenderedPrompt {
    std::vector<Message> messages;
    std::string template_hash;  // sha256 of serialize()

    std::vector<std::string> image_refs() const;
};

// Canonical text form: "role:\n<parts>" blocks joined by blank lines, image
// parts as <image:REF>. Golden fixtures pin this byte-for-byte.
std::string serialize(const RenderedPrompt& prompt);

// Coordinate formatting at the model-facing edge. Unit scale renders fixed
// decimals, thousand scale renders round-to-nearest integers.
std::string format_value(double v, CoordScale scale, int decimals = 3);
std::string format_box(const HeadBox& b, CoordScale scale, int decimals = 3);
std::string format_point(const Point2& p, CoordScale scale, int decimals = 3);

// One worked gaze-following example (image, box, reasoning, answer).
struct GfoExemplar {
    std::string image_ref;
    HeadBox box;
    std::string box_text_unit;  // verbatim unit-scale formatting
    std::string reasoning;
    std::string inout_text;
    Point2 gaze_point;
    std::string gaze_point_text_unit;
};

struct SgExemplar {
    std::string image_ref;
    HeadBox box_a;
    HeadBox box_b;
    std::string box_a_text_unit;
    std::string box_b_text_unit;
    std::string user_template;  // contains {B1} and {B2}
    std::string assistant_text;
};

struct ExemplarBank {
    std::vector<GfoExemplar> gfo;
    std::map<std::string, std::vector<SgExemplar>> sg;  // keyed by task name

    // Loads <dir>/exemplars.json; image refs become dir-relative paths.
    static ExemplarBank load(const std::filesystem::path& dir);
};

// Renders the zero-shot protocol prompt for one gaze sample.
RenderedPrompt render_prompt(const PromptSpec& spec, const GazeSample& sample,
                             const ExemplarBank* exemplars = nullptr);
// Renders the zero-shot protocol prompt for one social pair.
RenderedPrompt render_prompt(const PromptSpec& spec, const SocialPair& pair,
                             const ExemplarBank* exemplars = nullptr);
// Head-localization probe (single fixed template).
RenderedPrompt render_probe_prompt(const ProbeBox& probe, CoordScale scale, int decimals = 3);

// One phrasing of "the person whose head is ..." with independently sampled
// template and noun.
struct PersonPhrase {
    std::string text;
    int template_index = 0;
    int noun_index = 0;
};
PersonPhrase phrase_one_person(const std::string& box_text, Rng& rng);
PersonPhrase phrase_two_persons(const std::string& box_a_text, const std::string& box_b_text,
                                Rng& rng);

enum class QueryKind { inout, gaze_point, laeo, lah, sa };
std::string to_string(QueryKind k);
QueryKind query_kind_from_string(const std::string& s);

struct QAPair {
    std::string sample_id;
    QueryKind query_kind = QueryKind::inout;
    std::string image_ref;
    std::vector<std::string> box_texts;  // formatted in the active scale
    std::string question;
    std::string answer;  // valid JSON text
    int question_template = 0;
    std::vector<int> phrase_templates;
    std::vector<int> phrase_nouns;
    uint64_t rng_seed = 0;
};

// A gaze sample yields decoupled inout + gaze_point pairs; a social pair
// yields one pair for its task.
std::vector<QAPair> build_qa_pairs(const GazeSample& sample, Rng& rng, CoordScale scale,
                                   int decimals = 3);
std::vector<QAPair> build_qa_pairs(const SocialPair& pair, Rng& rng, CoordScale scale,
                                   int decimals = 3);

enum class SftFormat { plain, parts };
SftFormat sft_format_from_string(const std::string& s);

struct SftExportStats {
    size_t lines = 0;
    size_t epochs = 0;
};

// Writes `epochs` passes over the corpus, resampling the question of each
// pair per pass under a per-(pair, epoch) derived seed. Answers never change
// across epochs.
SftExportStats export_sft(const std::vector<QAPair>& pairs, int epochs, uint64_t rng_seed,
                          const std::filesystem::path& out_path,
                          SftFormat format = SftFormat::plain);

// Question banks (10 each) exposed for tests; SA is derived from LAEO by the
// stated substitution.
const std::vector<std::string>& inout_question_bank();
const std::vector<std::string>& gaze_point_question_bank();
const std::vector<std::string>& laeo_question_bank();
const std::vector<std::string>& lah_question_bank();
const std::vector<std::string>& sa_question_bank();

// Re-renders the question text of a pair under an explicit seed (the export
// path); exposed for the epoch-resampling tests.
std::string render_question(const QAPair& pair, uint64_t seed);

}  // namespace gazebench::prompting

#include "gazebench/prompting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gazebench/digest.hpp"
#include "gazebench/prompt_texts.hpp"

namespace gazebench::prompting {

std::string to_string(PromptTask t) {
    switch (t) {
        case PromptTask::GFo: return "GFo";
        case PromptTask::LAEO: return "LAEO";
        case PromptTask::LAH: return "LAH";
        case PromptTask::SA: return "SA";
        case PromptTask::probe: return "probe";
    }
    throw std::logic_error("bad PromptTask");
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::PrBase: return "PrBase";
        case Strategy::PrCoTBase: return "PrCoTBase";
        case Strategy::PrCoTStruct: return "PrCoTStruct";
        case Strategy::PrInContextCoT: return "PrInContextCoT";
    }
    throw std::logic_error("bad Strategy");
}

std::string to_string(CoordScale s) {
    return s == CoordScale::unit ? "unit" : "thousand";
}

PromptTask prompt_task_from_string(const std::string& s) {
    if (s == "GFo") return PromptTask::GFo;
    if (s == "LAEO") return PromptTask::LAEO;
    if (s == "LAH") return PromptTask::LAH;
    if (s == "SA") return PromptTask::SA;
    if (s == "probe") return PromptTask::probe;
    throw std::runtime_error("unknown prompt task: " + s);
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "PrBase") return Strategy::PrBase;
    if (s == "PrCoTBase") return Strategy::PrCoTBase;
    if (s == "PrCoTStruct") return Strategy::PrCoTStruct;
    if (s == "PrInContextCoT" || s == "PrInContext-CoT") return Strategy::PrInContextCoT;
    throw std::runtime_error("unknown strategy: " + s);
}

CoordScale coord_scale_from_string(const std::string& s) {
    if (s == "unit") return CoordScale::unit;
    if (s == "thousand") return CoordScale::thousand;
    throw std::runtime_error("unknown coord scale: " + s);
}

std::string to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    throw std::logic_error("bad Role");
}

std::vector<std::string> RenderedPrompt::image_refs() const {
    std::vector<std::string> refs;
    for (const Message& m : messages) {
        for (const Part& p : m.parts) {
            if (const auto* img = std::get_if<ImagePart>(&p)) refs.push_back(img->image_ref);
        }
    }
    return refs;
}

std::string serialize(const RenderedPrompt& prompt) {
    std::string out;
    bool first = true;
    for (const Message& m : prompt.messages) {
        if (!first) out += "\n\n";
        first = false;
        out += to_string(m.role) + ":\n";
        for (const Part& p : m.parts) {
            if (const auto* t = std::get_if<TextPart>(&p)) out += t->text;
            else out += "<image:" + std::get<ImagePart>(p).image_ref + ">";
        }
    }
    out += "\n";
    return out;
}

std::string format_value(double v, CoordScale scale, int decimals) {
    char buf[64];
    if (scale == CoordScale::thousand) {
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::llround(v * 1000.0)));
    } else {
        std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    }
    return buf;
}

std::string format_box(const HeadBox& b, CoordScale scale, int decimals) {
    if (!b.valid()) throw std::invalid_argument("coordinate formatting overflow: box outside [0,1]");
    return "[" + format_value(b.x_min, scale, decimals) + ", " + format_value(b.y_min, scale, decimals) +
           ", " + format_value(b.x_max, scale, decimals) + ", " + format_value(b.y_max, scale, decimals) +
           "]";
}

std::string format_point(const Point2& p, CoordScale scale, int decimals) {
    return "[" + format_value(p.x, scale, decimals) + ", " + format_value(p.y, scale, decimals) + "]";
}

namespace {

using namespace texts;

std::string replace_all(std::string text, std::string_view needle, std::string_view with) {
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), with);
        pos += with.size();
    }
    return text;
}

std::string_view sg_task_description(PromptTask t) {
    switch (t) {
        case PromptTask::LAEO: return kSgTaskDescriptionLaeo;
        case PromptTask::LAH: return kSgTaskDescriptionLah;
        case PromptTask::SA: return kSgTaskDescriptionSa;
        default: throw std::logic_error("not a social task");
    }
}

std::string_view sg_task_phrase(PromptTask t) {
    switch (t) {
        case PromptTask::LAEO: return kSgTaskPhraseLaeo;
        case PromptTask::LAH: return kSgTaskPhraseLah;
        case PromptTask::SA: return kSgTaskPhraseSa;
        default: throw std::logic_error("not a social task");
    }
}

std::string gfo_system_text(Strategy s) {
    std::string_view body;
    switch (s) {
        case Strategy::PrBase: body = kGfoPrBase; break;
        case Strategy::PrCoTBase: body = kGfoPrCotBase; break;
        case Strategy::PrCoTStruct: body = kGfoPrCotStruct; break;
        case Strategy::PrInContextCoT: body = kGfoPrInContext; break;
    }
    return replace_all(std::string(body), "<Task description>", kGfoTaskDescription);
}

std::string sg_system_text(Strategy s, PromptTask task) {
    std::string_view body;
    switch (s) {
        case Strategy::PrBase: body = kSgPrBase; break;
        case Strategy::PrCoTBase: body = kSgPrCotBase; break;
        case Strategy::PrCoTStruct: body = kSgPrCotStruct; break;
        case Strategy::PrInContextCoT: body = kSgPrInContext; break;
    }
    std::string text = replace_all(std::string(body), "<Task description>", sg_task_description(task));
    return replace_all(std::move(text), "<task>", sg_task_phrase(task));
}

// Query sentence for social tasks, mirroring the in-context exemplar format.
std::string sg_user_sentence(PromptTask task, const std::string& b1, const std::string& b2) {
    switch (task) {
        case PromptTask::LAEO:
            return " Analyze the image and determine whether the people with head boxes at " + b1 +
                   " and " + b2 + " are looking at each other.";
        case PromptTask::SA:
            return " Analyze the image and determine whether the people with head boxes at " + b1 +
                   " and " + b2 + " are sharing attention.";
        case PromptTask::LAH:
            return " Analyze the image and determine whether the person with head box at " + b1 +
                   " is looking at the person with head box at " + b2 + ".";
        default: throw std::logic_error("not a social task");
    }
}

std::string gfo_exemplar_box_text(const GfoExemplar& ex, CoordScale scale) {
    return scale == CoordScale::unit ? ex.box_text_unit : format_box(ex.box, scale);
}

std::string gfo_exemplar_answer(const GfoExemplar& ex, CoordScale scale) {
    const std::string point = scale == CoordScale::unit ? ex.gaze_point_text_unit
                                                        : format_point(ex.gaze_point, scale);
    return ex.reasoning + "\n\n### Gaze Point ###\n```json\n[\n{\"inout\": " + ex.inout_text +
           ", \"gaze_point\": " + point + "}\n]\n```";
}

void finalize(RenderedPrompt& p) { p.template_hash = sha256_hex(serialize(p)); }

int checked_exemplar_count(const PromptSpec& spec, size_t available, const char* what) {
    if (spec.n_exemplars < 1 || static_cast<size_t>(spec.n_exemplars) > available) {
        std::ostringstream ss;
        ss << "exemplar bank has " << available << " " << what << " exemplars, need "
           << spec.n_exemplars;
        throw std::runtime_error(ss.str());
    }
    return spec.n_exemplars;
}

}  // namespace

ExemplarBank ExemplarBank::load(const std::filesystem::path& dir) {
    const json j = json::parse(read_file(dir / "exemplars.json"));
    ExemplarBank bank;
    for (const json& e : j.at("gfo")) {
        GfoExemplar ex;
        ex.image_ref = (dir / e.at("image").get<std::string>()).generic_string();
        const auto& b = e.at("box");
        ex.box = HeadBox{b.at(0), b.at(1), b.at(2), b.at(3)};
        ex.box_text_unit = e.at("box_text_unit").get<std::string>();
        ex.reasoning = e.at("reasoning").get<std::string>();
        ex.inout_text = e.at("inout_text").get<std::string>();
        ex.gaze_point = Point2{e.at("gaze_point").at(0), e.at("gaze_point").at(1)};
        ex.gaze_point_text_unit = e.at("gaze_point_text_unit").get<std::string>();
        bank.gfo.push_back(std::move(ex));
    }
    for (const auto& [task, arr] : j.at("sg").items()) {
        for (const json& e : arr) {
            SgExemplar ex;
            ex.image_ref = (dir / e.at("image").get<std::string>()).generic_string();
            const auto& a = e.at("box_a");
            const auto& b = e.at("box_b");
            ex.box_a = HeadBox{a.at(0), a.at(1), a.at(2), a.at(3)};
            ex.box_b = HeadBox{b.at(0), b.at(1), b.at(2), b.at(3)};
            ex.box_a_text_unit = e.at("box_a_text_unit").get<std::string>();
            ex.box_b_text_unit = e.at("box_b_text_unit").get<std::string>();
            ex.user_template = e.at("user_template").get<std::string>();
            ex.assistant_text = e.at("assistant").get<std::string>();
            bank.sg[task].push_back(std::move(ex));
        }
    }
    return bank;
}

RenderedPrompt render_prompt(const PromptSpec& spec, const GazeSample& sample,
                             const ExemplarBank* exemplars) {
    if (spec.task != PromptTask::GFo) {
        throw std::invalid_argument("render_prompt(GazeSample) requires task=GFo");
    }
    RenderedPrompt p;
    p.messages.push_back({Role::system, {TextPart{gfo_system_text(spec.strategy)}}});

    const std::string query_box = format_box(sample.head, spec.coord_scale, spec.decimals);
    if (spec.strategy == Strategy::PrInContextCoT) {
        if (!exemplars) throw std::invalid_argument("PrInContextCoT requires an exemplar bank");
        const int n = checked_exemplar_count(spec, exemplars->gfo.size(), "GFo");
        for (int i = 0; i < n; ++i) {
            const GfoExemplar& ex = exemplars->gfo[static_cast<size_t>(i)];
            p.messages.push_back({Role::user,
                                  {ImagePart{ex.image_ref},
                                   TextPart{gfo_exemplar_box_text(ex, spec.coord_scale)}}});
            p.messages.push_back(
                {Role::assistant, {TextPart{gfo_exemplar_answer(ex, spec.coord_scale)}}});
        }
        p.messages.push_back({Role::user,
                              {TextPart{std::string(kGfoInContextClose) + "\n"},
                               ImagePart{sample.image_ref}, TextPart{query_box}}});
    } else {
        p.messages.push_back({Role::user, {ImagePart{sample.image_ref}, TextPart{query_box}}});
    }
    finalize(p);
    return p;
}

RenderedPrompt render_prompt(const PromptSpec& spec, const SocialPair& pair,
                             const ExemplarBank* exemplars) {
    PromptTask task;
    switch (pair.task) {
        case SocialTask::LAEO: task = PromptTask::LAEO; break;
        case SocialTask::LAH: task = PromptTask::LAH; break;
        case SocialTask::SA: task = PromptTask::SA; break;
        default: throw std::logic_error("bad SocialTask");
    }
    if (spec.task != task) {
        throw std::invalid_argument("prompt spec task does not match the pair's task");
    }
    RenderedPrompt p;
    p.messages.push_back({Role::system, {TextPart{sg_system_text(spec.strategy, task)}}});

    const std::string b1 = format_box(pair.head_a, spec.coord_scale, spec.decimals);
    const std::string b2 = format_box(pair.head_b, spec.coord_scale, spec.decimals);
    const std::string query_sentence = sg_user_sentence(task, b1, b2);

    if (spec.strategy == Strategy::PrInContextCoT) {
        if (!exemplars) throw std::invalid_argument("PrInContextCoT requires an exemplar bank");
        auto it = exemplars->sg.find(to_string(task));
        if (it == exemplars->sg.end()) {
            throw std::runtime_error("exemplar bank has no " + to_string(task) + " exemplars");
        }
        const int n = checked_exemplar_count(spec, it->second.size(), to_string(task).c_str());
        for (int i = 0; i < n; ++i) {
            const SgExemplar& ex = it->second[static_cast<size_t>(i)];
            const std::string ea = spec.coord_scale == CoordScale::unit
                                       ? ex.box_a_text_unit
                                       : format_box(ex.box_a, spec.coord_scale);
            const std::string eb = spec.coord_scale == CoordScale::unit
                                       ? ex.box_b_text_unit
                                       : format_box(ex.box_b, spec.coord_scale);
            std::string user_text = replace_all(ex.user_template, "{B1}", ea);
            user_text = replace_all(std::move(user_text), "{B2}", eb);
            p.messages.push_back({Role::user, {ImagePart{ex.image_ref}, TextPart{user_text}}});
            p.messages.push_back({Role::assistant, {TextPart{ex.assistant_text}}});
        }
        p.messages.push_back({Role::user,
                              {TextPart{std::string(kSgInContextClose) + "\n"},
                               ImagePart{pair.image_ref}, TextPart{query_sentence}}});
    } else {
        p.messages.push_back({Role::user, {ImagePart{pair.image_ref}, TextPart{query_sentence}}});
    }
    finalize(p);
    return p;
}

RenderedPrompt render_probe_prompt(const ProbeBox& probe, CoordScale scale, int decimals) {
    const std::string text = replace_all(std::string(kProbePrompt), "<bounding box coordinates>",
                                         format_box(probe.box, scale, decimals));
    RenderedPrompt p;
    p.messages.push_back({Role::user, {ImagePart{probe.image_ref}, TextPart{text}}});
    finalize(p);
    return p;
}

namespace {

const std::vector<std::string> kOnePersonTemplates = {
    "the {N} whose head is within the bounding box {B}",
    "the {N} located at {B}",
    "the {N} whose head is enclosed by the bounding box {B}",
    "the {N} whose head is bounded by {B}",
    "the {N} whose head is identified in the region {B}",
};

const std::vector<std::string> kTwoPersonsTemplates = {
    "the {N} whose heads are within the bounding boxes {B1} and {B2}",
    "the {N} located at {B1} and {B2}",
    "the {N} whose heads are enclosed by the bounding boxes {B1} and {B2}",
    "the {N} whose heads are bounded by {B1} and {B2}",
    "the {N} whose heads are identified in the regions {B1} and {B2}",
};

const std::vector<std::string> kPersonNouns = {"person", "subject", "individual", "human"};
const std::vector<std::string> kPersonsNouns = {"people", "subjects", "individuals", "humans"};

std::vector<std::string> make_sa_bank() {
    std::vector<std::string> bank;
    for (const std::string& q : laeo_question_bank()) {
        std::string s = replace_all(q, "eye contact", "sharing attention");
        s = replace_all(std::move(s), "looking at each other", "sharing attention");
        bank.push_back(std::move(s));
    }
    return bank;
}

}  // namespace

const std::vector<std::string>& inout_question_bank() {
    static const std::vector<std::string> bank = {
        "Is the gaze target of <OnePerson> inside the frame?",
        "Is <OnePerson> looking at something in the scene?",
        "What is the probability that the focus of <OnePerson> lies inside the current image area?",
        "How probable is it that <OnePerson> is looking at something within the boundaries of the scene?",
        "How certain are you that what <OnePerson> is looking at is shown in the image?",
        "Estimate the probability that the gaze point of <OnePerson> lies within the frame.",
        "Rate the likelihood that the gaze of <OnePerson> is directed at something within the frame.",
        "Assign a probability representing the chance that the visual target of <OnePerson> lies inside the frame.",
        "Determine the probability that the focus of <OnePerson> is contained within the scene.",
        "Evaluate the chance that <OnePerson> is looking at something that is in this photograph.",
    };
    return bank;
}

const std::vector<std::string>& gaze_point_question_bank() {
    static const std::vector<std::string> bank = {
        "Where is <OnePerson> looking?",
        "What is the gaze point of <OnePerson>?",
        "Where is the focus of <OnePerson>?",
        "Estimate the gaze point of <OnePerson>.",
        "Localize the gaze point of <OnePerson> within the image.",
        "Where is the visual target of <OnePerson> in the image?",
        "Where is the attention of <OnePerson> currently directed?",
        "Find the point of interest for <OnePerson>.",
        "Determine the gaze destination of <OnePerson>.",
        "What are the coordinates of the gaze target for <OnePerson> within the frame?",
    };
    return bank;
}

const std::vector<std::string>& laeo_question_bank() {
    static const std::vector<std::string> bank = {
        "Are the <TwoPersons> in the image looking at each other?",
        "Is there eye contact between the <TwoPersons>?",
        "There are <TwoPersons> in the image. Do these two people appear to be making eye contact?",
        "We can see <TwoPersons> in the image. Are their gazes directed toward one another?",
        "Are the <TwoPersons> mutually looking at each other?",
        "Estimate the probability that the <TwoPersons> are engaged in eye contact.",
        "What is the chance that <OnePerson> and <OnePerson> are looking at each other?",
        "Is there eye contact between <OnePerson> and <OnePerson>?",
        "Do the <TwoPersons> appear to be looking at each other?",
        "Would you say the <TwoPersons> are making eye contact?",
    };
    return bank;
}

const std::vector<std::string>& lah_question_bank() {
    static const std::vector<std::string> bank = {
        "Is <OnePerson> looking at <OnePerson>?",
        "There are <TwoPersons> in the image. Does <OnePerson> appear to be looking at <OnePerson>?",
        "We can see <TwoPersons> in the image. Is <OnePerson> looking at <OnePerson>?",
        "Estimate the probability that <OnePerson> is looking at <OnePerson>?",
        "What is the chance that <OnePerson> is looking at <OnePerson>?",
        "Does <OnePerson> seem to be looking toward <OnePerson>?",
        "How likely is it that <OnePerson> is looking at <OnePerson>?",
        "Give a probability that <OnePerson> is looking at <OnePerson>.",
        "There are <TwoPersons> visible in the image. Does <OnePerson> seem to be looking at <OnePerson>?",
        "Would you say <OnePerson> is looking at <OnePerson>?",
    };
    return bank;
}

const std::vector<std::string>& sa_question_bank() {
    static const std::vector<std::string> bank = make_sa_bank();
    return bank;
}

PersonPhrase phrase_one_person(const std::string& box_text, Rng& rng) {
    PersonPhrase out;
    out.template_index = static_cast<int>(rng.below(kOnePersonTemplates.size()));
    out.noun_index = static_cast<int>(rng.below(kPersonNouns.size()));
    std::string s = replace_all(kOnePersonTemplates[static_cast<size_t>(out.template_index)], "{N}",
                                kPersonNouns[static_cast<size_t>(out.noun_index)]);
    out.text = replace_all(std::move(s), "{B}", box_text);
    return out;
}

PersonPhrase phrase_two_persons(const std::string& box_a_text, const std::string& box_b_text,
                                Rng& rng) {
    PersonPhrase out;
    out.template_index = static_cast<int>(rng.below(kTwoPersonsTemplates.size()));
    out.noun_index = static_cast<int>(rng.below(kPersonsNouns.size()));
    std::string s = replace_all(kTwoPersonsTemplates[static_cast<size_t>(out.template_index)], "{N}",
                                kPersonsNouns[static_cast<size_t>(out.noun_index)]);
    s = replace_all(std::move(s), "{B1}", box_a_text);
    out.text = replace_all(std::move(s), "{B2}", box_b_text);
    return out;
}

std::string to_string(QueryKind k) {
    switch (k) {
        case QueryKind::inout: return "inout";
        case QueryKind::gaze_point: return "gaze_point";
        case QueryKind::laeo: return "laeo";
        case QueryKind::lah: return "lah";
        case QueryKind::sa: return "sa";
    }
    throw std::logic_error("bad QueryKind");
}

QueryKind query_kind_from_string(const std::string& s) {
    if (s == "inout") return QueryKind::inout;
    if (s == "gaze_point") return QueryKind::gaze_point;
    if (s == "laeo") return QueryKind::laeo;
    if (s == "lah") return QueryKind::lah;
    if (s == "sa") return QueryKind::sa;
    throw std::runtime_error("unknown query kind: " + s);
}

namespace {

const std::vector<std::string>& bank_for(QueryKind kind) {
    switch (kind) {
        case QueryKind::inout: return inout_question_bank();
        case QueryKind::gaze_point: return gaze_point_question_bank();
        case QueryKind::laeo: return laeo_question_bank();
        case QueryKind::lah: return lah_question_bank();
        case QueryKind::sa: return sa_question_bank();
    }
    throw std::logic_error("bad QueryKind");
}

// Expands <OnePerson>/<TwoPersons> placeholders left to right; successive
// <OnePerson> slots consume successive boxes.
std::string compose_question(const std::string& tpl, const std::vector<std::string>& box_texts,
                             Rng& rng, std::vector<int>* phrase_templates,
                             std::vector<int>* phrase_nouns) {
    std::string out;
    size_t pos = 0;
    size_t next_single = 0;
    while (pos < tpl.size()) {
        const size_t one = tpl.find("<OnePerson>", pos);
        const size_t two = tpl.find("<TwoPersons>", pos);
        const size_t hit = std::min(one, two);
        if (hit == std::string::npos) {
            out += tpl.substr(pos);
            break;
        }
        out += tpl.substr(pos, hit - pos);
        if (hit == two) {
            if (box_texts.size() < 2) throw std::invalid_argument("<TwoPersons> needs two boxes");
            PersonPhrase ph = phrase_two_persons(box_texts[0], box_texts[1], rng);
            out += ph.text;
            if (phrase_templates) phrase_templates->push_back(ph.template_index);
            if (phrase_nouns) phrase_nouns->push_back(ph.noun_index);
            pos = hit + 12;
        } else {
            const size_t idx = std::min(next_single, box_texts.size() - 1);
            PersonPhrase ph = phrase_one_person(box_texts[idx], rng);
            ++next_single;
            out += ph.text;
            if (phrase_templates) phrase_templates->push_back(ph.template_index);
            if (phrase_nouns) phrase_nouns->push_back(ph.noun_index);
            pos = hit + 11;
        }
    }
    return out;
}

QAPair draw_pair(QueryKind kind, const std::string& sample_id, const std::string& image_ref,
                 std::vector<std::string> box_texts, std::string answer, Rng& rng) {
    const auto& bank = bank_for(kind);
    QAPair p;
    p.sample_id = sample_id;
    p.query_kind = kind;
    p.image_ref = image_ref;
    p.box_texts = std::move(box_texts);
    p.answer = std::move(answer);
    p.question_template = static_cast<int>(rng.below(bank.size()));
    p.question = compose_question(bank[static_cast<size_t>(p.question_template)], p.box_texts, rng,
                                  &p.phrase_templates, &p.phrase_nouns);
    return p;
}

}  // namespace

std::vector<QAPair> build_qa_pairs(const GazeSample& sample, Rng& rng, CoordScale scale,
                                   int decimals) {
    if (!sample.head.valid()) throw std::invalid_argument("invalid head box");
    // GF annotates in-frame targets only, so a missing label means in-frame.
    const bool inout = sample.inout_label.value_or(true);
    if (sample.gaze_points.empty() && inout) {
        throw std::invalid_argument("in-frame sample without gaze points: " + sample.sample_id);
    }
    const std::string box_text = format_box(sample.head, scale, decimals);

    std::vector<QAPair> out;
    out.push_back(draw_pair(QueryKind::inout, sample.sample_id, sample.image_ref, {box_text},
                            std::string("[{\"inout\": ") + (inout ? "1.0" : "0.0") + "}]", rng));
    // Train export uses the first annotation on multi-annotation samples.
    const Point2 target = sample.gaze_points.empty() ? Point2{0.5, 0.5} : sample.gaze_points[0];
    out.push_back(draw_pair(QueryKind::gaze_point, sample.sample_id, sample.image_ref, {box_text},
                            "[{\"gaze_point\": " + format_point(target, scale, decimals) + "}]",
                            rng));
    return out;
}

std::vector<QAPair> build_qa_pairs(const SocialPair& pair, Rng& rng, CoordScale scale,
                                   int decimals) {
    if (!pair.head_a.valid() || !pair.head_b.valid()) {
        throw std::invalid_argument("invalid head box");
    }
    QueryKind kind;
    switch (pair.task) {
        case SocialTask::LAEO: kind = QueryKind::laeo; break;
        case SocialTask::LAH: kind = QueryKind::lah; break;
        case SocialTask::SA: kind = QueryKind::sa; break;
        default: throw std::logic_error("bad SocialTask");
    }
    std::vector<std::string> boxes = {format_box(pair.head_a, scale, decimals),
                                      format_box(pair.head_b, scale, decimals)};
    std::vector<QAPair> out;
    out.push_back(draw_pair(kind, pair.pair_id, pair.image_ref, std::move(boxes),
                            std::string("[{\"label\": ") + (pair.label ? "1.0" : "0.0") + "}]",
                            rng));
    return out;
}

std::string render_question(const QAPair& pair, uint64_t seed) {
    Rng rng(seed);
    const auto& bank = bank_for(pair.query_kind);
    const size_t tpl_idx = rng.below(bank.size());
    return compose_question(bank[tpl_idx], pair.box_texts, rng, nullptr, nullptr);
}

SftFormat sft_format_from_string(const std::string& s) {
    if (s == "plain") return SftFormat::plain;
    if (s == "parts") return SftFormat::parts;
    throw std::runtime_error("unknown sft format: " + s);
}

SftExportStats export_sft(const std::vector<QAPair>& pairs, int epochs, uint64_t rng_seed,
                          const std::filesystem::path& out_path, SftFormat format) {
    if (pairs.empty()) throw std::invalid_argument("export_sft: no pairs");
    if (epochs < 1) throw std::invalid_argument("export_sft: epochs must be >= 1");

    std::vector<ojson> lines;
    lines.reserve(pairs.size() * static_cast<size_t>(epochs));
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::set<std::pair<std::string, std::string>> seen;
        for (const QAPair& p : pairs) {
            const std::string kind = to_string(p.query_kind);
            if (!seen.emplace(p.sample_id, kind).second) {
                throw std::runtime_error("duplicate sample_id within a pass: " + p.sample_id +
                                         " (" + kind + ")");
            }
            const uint64_t seed = derive_seed(rng_seed, p.sample_id + "/" + kind,
                                              static_cast<uint64_t>(epoch));
            const std::string question = render_question(p, seed);

            ojson line;
            line["image"] = p.image_ref;
            ojson messages = ojson::array();
            if (format == SftFormat::plain) {
                messages.push_back({{"role", "user"}, {"content", "<image>" + question}});
                messages.push_back({{"role", "assistant"}, {"content", p.answer}});
            } else {
                messages.push_back(
                    {{"role", "user"},
                     {"content", ojson::array({ojson{{"type", "image"}},
                                               ojson{{"type", "text"}, {"text", question}}})}});
                messages.push_back(
                    {{"role", "assistant"},
                     {"content", ojson::array({ojson{{"type", "text"}, {"text", p.answer}}})}});
            }
            line["messages"] = std::move(messages);
            line["meta"] = ojson{{"sample_id", p.sample_id},
                                 {"query_kind", kind},
                                 {"epoch", epoch},
                                 {"seed", seed}};
            lines.push_back(std::move(line));
        }
    }
    write_jsonl(out_path, lines);
    return {lines.size(), static_cast<size_t>(epochs)};
}

}  // namespace gazebench::prompting

#include "gazebench/records.hpp"

#include <stdexcept>
#include <tuple>

namespace gazebench {

std::string to_string(DatasetId d) {
    switch (d) {
        case DatasetId::GF: return "GF";
        case DatasetId::VAT: return "VAT";
        case DatasetId::CP: return "CP";
        case DatasetId::custom: return "custom";
    }
    throw std::logic_error("bad DatasetId");
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    throw std::logic_error("bad Split");
}

std::string to_string(SocialTask t) {
    switch (t) {
        case SocialTask::LAEO: return "LAEO";
        case SocialTask::LAH: return "LAH";
        case SocialTask::SA: return "SA";
    }
    throw std::logic_error("bad SocialTask");
}

DatasetId dataset_from_string(const std::string& s) {
    if (s == "GF") return DatasetId::GF;
    if (s == "VAT") return DatasetId::VAT;
    if (s == "CP") return DatasetId::CP;
    if (s == "custom") return DatasetId::custom;
    throw std::runtime_error("unknown dataset id: " + s);
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw std::runtime_error("unknown split: " + s);
}

SocialTask social_task_from_string(const std::string& s) {
    if (s == "LAEO") return SocialTask::LAEO;
    if (s == "LAH") return SocialTask::LAH;
    if (s == "SA") return SocialTask::SA;
    throw std::runtime_error("unknown social task: " + s);
}

namespace {

ojson box_json(const HeadBox& b) { return ojson::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

HeadBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw std::runtime_error("head box must be [x0,y0,x1,y1]");
    return HeadBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

}  // namespace

ojson to_json(const GazeSample& s) {
    ojson j;
    j["kind"] = "gaze";
    j["sample_id"] = s.sample_id;
    j["dataset_id"] = to_string(s.dataset_id);
    j["image_ref"] = s.image_ref;
    j["image_size"] = ojson::array({s.image_width, s.image_height});
    j["head"] = box_json(s.head);
    ojson pts = ojson::array();
    for (const Point2& p : s.gaze_points) pts.push_back(ojson::array({p.x, p.y}));
    j["gaze_points"] = std::move(pts);
    if (s.inout_label) j["inout_label"] = *s.inout_label;
    j["split"] = to_string(s.split);
    if (s.frame_index) j["frame_index"] = *s.frame_index;
    if (s.video_id) j["video_id"] = *s.video_id;
    return j;
}

ojson to_json(const SocialPair& p) {
    ojson j;
    j["kind"] = "social";
    j["pair_id"] = p.pair_id;
    j["dataset_id"] = to_string(p.dataset_id);
    j["image_ref"] = p.image_ref;
    j["image_size"] = ojson::array({p.image_width, p.image_height});
    j["head_a"] = box_json(p.head_a);
    j["head_b"] = box_json(p.head_b);
    j["task"] = to_string(p.task);
    j["label"] = p.label;
    j["ordered"] = p.ordered;
    if (p.frame_index) j["frame_index"] = *p.frame_index;
    if (p.video_id) j["video_id"] = *p.video_id;
    return j;
}

ojson to_json(const ProbeBox& b) {
    ojson j;
    j["kind"] = "probe";
    j["probe_id"] = b.probe_id;
    j["image_ref"] = b.image_ref;
    j["image_size"] = ojson::array({b.image_width, b.image_height});
    j["box"] = box_json(b.box);
    j["is_positive"] = b.is_positive;
    j["distance_to_nearest_gt"] = b.distance_to_nearest_gt;
    return j;
}

GazeSample gaze_sample_from_json(const json& j) {
    GazeSample s;
    s.sample_id = j.at("sample_id").get<std::string>();
    s.dataset_id = dataset_from_string(j.at("dataset_id").get<std::string>());
    s.image_ref = j.at("image_ref").get<std::string>();
    s.image_width = j.at("image_size").at(0).get<int>();
    s.image_height = j.at("image_size").at(1).get<int>();
    s.head = box_from_json(j.at("head"));
    for (const auto& p : j.at("gaze_points")) {
        s.gaze_points.push_back(Point2{p.at(0).get<double>(), p.at(1).get<double>()});
    }
    if (j.contains("inout_label")) s.inout_label = j.at("inout_label").get<bool>();
    s.split = split_from_string(j.at("split").get<std::string>());
    if (j.contains("frame_index")) s.frame_index = j.at("frame_index").get<int64_t>();
    if (j.contains("video_id")) s.video_id = j.at("video_id").get<std::string>();
    return s;
}

SocialPair social_pair_from_json(const json& j) {
    SocialPair p;
    p.pair_id = j.at("pair_id").get<std::string>();
    p.dataset_id = dataset_from_string(j.at("dataset_id").get<std::string>());
    p.image_ref = j.at("image_ref").get<std::string>();
    p.image_width = j.at("image_size").at(0).get<int>();
    p.image_height = j.at("image_size").at(1).get<int>();
    p.head_a = box_from_json(j.at("head_a"));
    p.head_b = box_from_json(j.at("head_b"));
    p.task = social_task_from_string(j.at("task").get<std::string>());
    p.label = j.at("label").get<bool>();
    p.ordered = j.at("ordered").get<bool>();
    if (j.contains("frame_index")) p.frame_index = j.at("frame_index").get<int64_t>();
    if (j.contains("video_id")) p.video_id = j.at("video_id").get<std::string>();
    return p;
}

ProbeBox probe_box_from_json(const json& j) {
    ProbeBox b;
    b.probe_id = j.at("probe_id").get<std::string>();
    b.image_ref = j.at("image_ref").get<std::string>();
    b.image_width = j.at("image_size").at(0).get<int>();
    b.image_height = j.at("image_size").at(1).get<int>();
    b.box = box_from_json(j.at("box"));
    b.is_positive = j.at("is_positive").get<bool>();
    b.distance_to_nearest_gt = j.at("distance_to_nearest_gt").get<double>();
    return b;
}

bool canonical_less(const GazeSample& a, const GazeSample& b) {
    return std::tie(a.image_ref, a.head.x_min, a.head.y_min, a.head.x_max, a.head.y_max,
                    a.sample_id) < std::tie(b.image_ref, b.head.x_min, b.head.y_min,
                                            b.head.x_max, b.head.y_max, b.sample_id);
}

bool canonical_less(const SocialPair& a, const SocialPair& b) {
    return std::tie(a.image_ref, a.head_a.x_min, a.head_a.y_min, a.head_b.x_min, a.head_b.y_min,
                    a.pair_id) < std::tie(b.image_ref, b.head_a.x_min, b.head_a.y_min,
                                          b.head_b.x_min, b.head_b.y_min, b.pair_id);
}


Corpus load_corpus(const std::filesystem::path& jsonl_path) {
    Corpus c;
    for (const json& j : read_jsonl(jsonl_path)) {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "gaze") c.gaze.push_back(gaze_sample_from_json(j));
        else if (kind == "social") c.social.push_back(social_pair_from_json(j));
        else if (kind == "probe") c.probes.push_back(probe_box_from_json(j));
        else throw std::runtime_error("unknown record kind: " + kind);
    }
    return c;
}

void save_corpus(const std::filesystem::path& jsonl_path, const Corpus& c) {
    std::vector<ojson> rows;
    rows.reserve(c.gaze.size() + c.social.size() + c.probes.size());
    for (const auto& s : c.gaze) rows.push_back(to_json(s));
    for (const auto& p : c.social) rows.push_back(to_json(p));
    for (const auto& b : c.probes) rows.push_back(to_json(b));
    write_jsonl(jsonl_path, rows);
}

}  // namespace gazebench

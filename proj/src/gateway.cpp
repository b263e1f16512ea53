#include "gazebench/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "gazebench/digest.hpp"
#include "gazebench/jsonl.hpp"
#include "gazebench/rng.hpp"

#include "httplib.h"

namespace gazebench::gateway {

std::string cache_key(const std::string& model_name, const std::string& template_hash,
                      const std::vector<std::string>& image_hashes, const DecodeParams& decode,
                      int sample_index) {
    ojson j;
    j["model"] = model_name;
    j["template_hash"] = template_hash;
    j["image_hashes"] = image_hashes;
    j["temperature"] = decode.temperature;
    j["n_samples"] = decode.n_samples;
    j["max_new_tokens"] = decode.max_new_tokens;
    j["sample_index"] = sample_index;
    return sha256_hex(j.dump());
}

// ---- mock backend ---------------------------------------------------------

MockBehavior MockBehavior::parse(const std::string& spec) {
    MockBehavior b;
    const auto paren = spec.find('(');
    const std::string name = paren == std::string::npos ? spec : spec.substr(0, paren);
    std::vector<double> args;
    if (paren != std::string::npos) {
        const auto close = spec.rfind(')');
        std::string inner = spec.substr(paren + 1, close == std::string::npos
                                                       ? std::string::npos
                                                       : close - paren - 1);
        std::istringstream ss(inner);
        std::string tok;
        while (std::getline(ss, tok, ',')) args.push_back(std::stod(tok));
    }
    if (name == "echo_gt") b.kind = MockKind::echo_gt;
    else if (name == "fixed_offset") {
        b.kind = MockKind::fixed_offset;
        if (args.size() != 2) throw std::invalid_argument("fixed_offset needs (dx,dy)");
        b.dx = args[0];
        b.dy = args[1];
    } else if (name == "malformed") b.kind = MockKind::malformed;
    else if (name == "refuse") b.kind = MockKind::refuse;
    else if (name == "biased_sg") {
        b.kind = MockKind::biased_sg;
        if (args.size() != 1) throw std::invalid_argument("biased_sg needs (p)");
        b.p = args[0];
    } else {
        throw std::invalid_argument("unknown mock behavior: " + spec);
    }
    return b;
}

std::string MockBehavior::to_string() const {
    std::ostringstream ss;
    switch (kind) {
        case MockKind::echo_gt: return "echo_gt";
        case MockKind::malformed: return "malformed";
        case MockKind::refuse: return "refuse";
        case MockKind::fixed_offset:
            ss << "fixed_offset(" << dx << "," << dy << ")";
            return ss.str();
        case MockKind::biased_sg:
            ss << "biased_sg(" << p << ")";
            return ss.str();
    }
    throw std::logic_error("bad MockKind");
}

MockBackend::MockBackend(const Corpus& truth, MockBehavior behavior, prompting::CoordScale scale)
    : behavior_(behavior), scale_(scale) {
    for (const auto& s : truth.gaze) gaze_.emplace(s.sample_id, s);
    for (const auto& p : truth.social) social_.emplace(p.pair_id, p);
    for (const auto& b : truth.probes) probes_.emplace(b.probe_id, b);
}

namespace {

std::string number_text(double v) {
    // nlohmann emits shortest round-trip decimals, so parsing recovers the
    // exact double.
    return json(v).dump();
}

std::string gaze_answer_text(double inout, const Point2& point, prompting::CoordScale scale) {
    const double mult = scale == prompting::CoordScale::thousand ? 1000.0 : 1.0;
    return "### Gaze Point ###\n```json\n[\n{\"inout\": " + number_text(inout) +
           ", \"gaze_point\": [" + number_text(point.x * mult) + ", " +
           number_text(point.y * mult) + "]}\n]\n```";
}

std::string social_answer_text(double label) {
    return "### Social Gaze Label ###\n```json\n[\n{\"label\": " + number_text(label) + "}\n]\n```";
}

}  // namespace

std::vector<RawResponse> MockBackend::complete(const CompletionRequest& request,
                                               const DecodeParams& decode) {
    decode.validate();
    std::string text;
    if (behavior_.kind == MockKind::malformed) {
        text = "I see a person in the image. The person is looking left.";
    } else if (behavior_.kind == MockKind::refuse) {
        text = "I cannot determine this.";
    } else if (auto it = gaze_.find(request.sample_id); it != gaze_.end()) {
        const GazeSample& s = it->second;
        const Point2 gt = s.gaze_points.empty() ? Point2{0.5, 0.5} : s.gaze_points.front();
        const double inout = s.inout_label.value_or(true) ? 1.0 : 0.0;
        Point2 point = gt;
        if (behavior_.kind == MockKind::fixed_offset) {
            point.x += behavior_.dx;
            point.y += behavior_.dy;
        }
        text = gaze_answer_text(inout, point, scale_);
    } else if (auto sit = social_.find(request.sample_id); sit != social_.end()) {
        const SocialPair& p = sit->second;
        const double label = behavior_.kind == MockKind::biased_sg ? behavior_.p
                                                                   : (p.label ? 1.0 : 0.0);
        text = social_answer_text(label);
    } else if (auto pit = probes_.find(request.sample_id); pit != probes_.end()) {
        const bool yes = behavior_.kind == MockKind::biased_sg ? behavior_.p >= 0.5
                                                               : pit->second.is_positive;
        text = yes ? "Yes" : "No";
    } else {
        throw std::runtime_error("mock backend cannot resolve sample: " + request.sample_id);
    }

    std::vector<RawResponse> out(static_cast<size_t>(decode.n_samples));
    for (int i = 0; i < decode.n_samples; ++i) {
        RawResponse& r = out[static_cast<size_t>(i)];
        r.text = text;
        r.finish_reason = "stop";
        r.request_fingerprint = cache_key(model_name(), request.prompt.template_hash,
                                          request.image_hashes, decode, i);
    }
    return out;
}

// ---- HTTP backend ---------------------------------------------------------

namespace {

class HttplibTransport : public Transport {
public:
    HttplibTransport(const std::string& base_url, double timeout_seconds)
        : timeout_seconds_(timeout_seconds) {
        // httplib::Client keeps only scheme://host:port; a path suffix like
        // /v1 must be re-applied to every request path.
        const size_t scheme = base_url.find("://");
        const size_t path_start =
            base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
        if (path_start == std::string::npos) {
            origin_ = base_url;
        } else {
            origin_ = base_url.substr(0, path_start);
            path_prefix_ = base_url.substr(path_start);
            while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
        }
    }

    HttpResult post(const std::string& path, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers) override {
        httplib::Client client(origin_);
        client.set_connection_timeout(std::chrono::milliseconds(
            static_cast<int64_t>(timeout_seconds_ * 1000)));
        client.set_read_timeout(
            std::chrono::milliseconds(static_cast<int64_t>(timeout_seconds_ * 1000)));
        httplib::Headers hl;
        for (const auto& [k, v] : headers) hl.emplace(k, v);
        auto res = client.Post(path_prefix_ + path, hl, body, "application/json");
        if (!res) return {0, httplib::to_string(res.error())};
        return {res->status, res->body};
    }

private:
    std::string origin_;
    std::string path_prefix_;
    double timeout_seconds_;
};

json message_to_wire(const prompting::Message& m,
                     const std::map<std::string, std::string>& payloads) {
    json content = json::array();
    for (const auto& part : m.parts) {
        if (const auto* t = std::get_if<prompting::TextPart>(&part)) {
            content.push_back({{"type", "text"}, {"text", t->text}});
        } else {
            const auto& ref = std::get<prompting::ImagePart>(part).image_ref;
            auto it = payloads.find(ref);
            if (it == payloads.end()) {
                throw std::runtime_error("no prepared payload for image " + ref);
            }
            content.push_back({{"type", "image_url"}, {"image_url", {{"url", it->second}}}});
        }
    }
    return json{{"role", prompting::to_string(m.role)}, {"content", std::move(content)}};
}

}  // namespace

std::unique_ptr<Transport> make_http_transport(const std::string& base_url,
                                               double timeout_seconds) {
    return std::make_unique<HttplibTransport>(base_url, timeout_seconds);
}

HttpBackend::HttpBackend(ModelEndpoint endpoint, std::unique_ptr<Transport> transport)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)) {
    if (!transport_) {
        transport_ = make_http_transport(endpoint_.base_url, endpoint_.timeout_seconds);
    }
}

HttpResult HttpBackend::post_with_retry(const std::string& body,
                                        std::vector<AttemptRecord>& attempts) {
    std::vector<std::pair<std::string, std::string>> headers;
    if (!endpoint_.auth_token_env_var.empty()) {
        const char* token = std::getenv(endpoint_.auth_token_env_var.c_str());
        if (!token) {
            throw GatewayError("auth token env var not set: " + endpoint_.auth_token_env_var,
                               false, {});
        }
        headers.emplace_back("Authorization", std::string("Bearer ") + token);
    }

    for (int attempt = 0; attempt < endpoint_.retry.max_attempts; ++attempt) {
        int64_t waited = 0;
        if (attempt > 0) {
            waited = static_cast<int64_t>(endpoint_.retry.backoff_base_ms) * (1LL << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(waited));
        }
        HttpResult res = transport_->post("/chat/completions", body, headers);
        attempts.push_back({res.status, res.status <= 0 ? res.body : "", waited});
        if (res.status >= 200 && res.status < 300) return res;
        const bool retryable = res.status <= 0 || res.status == 429 || res.status >= 500;
        if (!retryable) {
            throw GatewayError("non-retryable HTTP " + std::to_string(res.status) + ": " +
                                   res.body.substr(0, 200),
                               false, attempts);
        }
    }
    throw GatewayError("request failed after " + std::to_string(endpoint_.retry.max_attempts) +
                           " attempts",
                       true, attempts);
}

std::vector<RawResponse> HttpBackend::complete(const CompletionRequest& request,
                                               const DecodeParams& decode) {
    decode.validate();
    json messages = json::array();
    for (const auto& m : request.prompt.messages) {
        messages.push_back(message_to_wire(m, request.image_payloads));
    }

    auto build_body = [&](int n, std::optional<uint64_t> seed) {
        json body;
        body["model"] = endpoint_.model_name;
        body["messages"] = messages;
        body["temperature"] = decode.temperature;
        body["max_tokens"] = decode.max_new_tokens;
        if (n > 1) body["n"] = n;
        if (seed) body["seed"] = *seed;
        return body.dump();
    };

    auto parse_choices = [&](const std::string& body, int expected,
                             int64_t latency_ms) -> std::vector<RawResponse> {
        json j = json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array()) {
            throw GatewayError("malformed chat-completions response body", false, {});
        }
        const auto& choices = j["choices"];
        if (static_cast<int>(choices.size()) < expected) {
            throw GatewayError("endpoint returned " + std::to_string(choices.size()) +
                                   " choices, expected " + std::to_string(expected),
                               false, {});
        }
        Usage usage;
        if (j.contains("usage") && j["usage"].is_object()) {
            usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
            usage.completion_tokens = j["usage"].value("completion_tokens", 0);
        }
        std::vector<RawResponse> out(static_cast<size_t>(expected));
        for (int i = 0; i < expected; ++i) {
            const json& c = choices[static_cast<size_t>(i)];
            RawResponse& r = out[static_cast<size_t>(i)];
            if (c.contains("message") && c["message"].contains("content") &&
                c["message"]["content"].is_string()) {
                r.text = c["message"]["content"].get<std::string>();
            }
            r.finish_reason = c.value("finish_reason", "stop");
            r.usage = usage;
            r.latency_ms = latency_ms;
        }
        return out;
    };

    using clock = std::chrono::steady_clock;
    std::vector<RawResponse> out;
    if (endpoint_.supports_n || decode.n_samples == 1) {
        std::vector<AttemptRecord> attempts;
        std::optional<uint64_t> seed;
        if (decode.temperature > 0.0) seed = request.seed;
        const auto t0 = clock::now();
        HttpResult res = post_with_retry(build_body(decode.n_samples, seed), attempts);
        const auto ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - t0).count();
        out = parse_choices(res.body, decode.n_samples, ms);
    } else {
        // Sequential requests with distinct per-sample seeds.
        for (int i = 0; i < decode.n_samples; ++i) {
            std::vector<AttemptRecord> attempts;
            const uint64_t seed = mix_seed(request.seed, static_cast<uint64_t>(i));
            const auto t0 = clock::now();
            HttpResult res = post_with_retry(build_body(1, seed), attempts);
            const auto ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - t0).count();
            auto one = parse_choices(res.body, 1, ms);
            out.push_back(std::move(one.front()));
        }
    }
    for (int i = 0; i < decode.n_samples; ++i) {
        out[static_cast<size_t>(i)].request_fingerprint = cache_key(
            endpoint_.model_name, request.prompt.template_hash, request.image_hashes, decode, i);
    }
    return out;
}

// ---- disk cache -----------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

namespace {

std::filesystem::path key_path(const std::filesystem::path& dir, const std::string& key) {
    return dir / key.substr(0, 2) / (key + ".json");
}

}  // namespace

std::optional<RawResponse> ResponseCache::get(const std::string& key) const {
    const auto path = key_path(dir_, key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    RawResponse r;
    r.text = j.value("text", "");
    r.finish_reason = j.value("finish_reason", "stop");
    r.usage.prompt_tokens = j.value("prompt_tokens", 0);
    r.usage.completion_tokens = j.value("completion_tokens", 0);
    r.latency_ms = j.value("latency_ms", 0);
    r.from_cache = true;
    r.request_fingerprint = j.value("key", key);
    return r;
}

void ResponseCache::put(const std::string& key, const RawResponse& response) const {
    const auto path = key_path(dir_, key);
    std::filesystem::create_directories(path.parent_path());
    ojson j;
    j["key"] = key;
    j["text"] = response.text;
    j["finish_reason"] = response.finish_reason;
    j["prompt_tokens"] = response.usage.prompt_tokens;
    j["completion_tokens"] = response.usage.completion_tokens;
    j["latency_ms"] = response.latency_ms;
    const auto tmp = path.parent_path() / (key + ".tmp");
    write_file(tmp, j.dump(2, ' ', false, nlohmann::detail::error_handler_t::replace));
    std::filesystem::rename(tmp, path);
}

CachingBackend::CachingBackend(ChatBackend& inner, ResponseCache cache)
    : inner_(inner), cache_(std::move(cache)) {}

std::vector<RawResponse> CachingBackend::complete(const CompletionRequest& request,
                                                  const DecodeParams& decode) {
    decode.validate();
    std::vector<std::string> keys;
    keys.reserve(static_cast<size_t>(decode.n_samples));
    for (int i = 0; i < decode.n_samples; ++i) {
        keys.push_back(cache_key(inner_.model_name(), request.prompt.template_hash,
                                 request.image_hashes, decode, i));
    }
    std::vector<RawResponse> cached;
    cached.reserve(keys.size());
    bool all_hit = true;
    for (const auto& key : keys) {
        auto hit = cache_.get(key);
        if (!hit) {
            all_hit = false;
            break;
        }
        cached.push_back(std::move(*hit));
    }
    if (all_hit) {
        hits_ += decode.n_samples;
        return cached;
    }
    ++misses_;
    auto fresh = inner_.complete(request, decode);
    for (size_t i = 0; i < fresh.size() && i < keys.size(); ++i) {
        fresh[i].request_fingerprint = keys[i];
        cache_.put(keys[i], fresh[i]);
    }
    return fresh;
}

// ---- bounded batch runner -------------------------------------------------

std::vector<BatchOutcome> run_batch(ChatBackend& backend, const std::vector<BatchItem>& items,
                                    int max_parallel) {
    if (max_parallel < 1) throw std::invalid_argument("max_parallel must be >= 1");
    std::vector<BatchOutcome> outcomes(items.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            BatchOutcome& slot = outcomes[i];
            try {
                slot.responses = backend.complete(items[i].request, items[i].decode);
                slot.ok = true;
            } catch (const std::exception& e) {
                slot.ok = false;
                slot.error = e.what();
            }
        }
    };
    const size_t n_workers =
        std::min(static_cast<size_t>(max_parallel), std::max<size_t>(items.size(), 1));
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return outcomes;
}

}  // namespace gazebench::gateway

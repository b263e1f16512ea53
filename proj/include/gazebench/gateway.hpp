#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazebench/image.hpp"
#include "gazebench/prompting.hpp"
#include "gazebench/records.hpp"

namespace gazebench::gateway {

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_base_ms = 250;
};

struct ModelEndpoint {
    std::string base_url;
    std::string model_name;
    std::string auth_token_env_var;  // empty = unauthenticated
    double timeout_seconds = 120.0;
    int max_parallel_requests = 4;
    RetryPolicy retry;
    bool supports_n = true;  // endpoint accepts n>1 in one request
};

struct DecodeParams {
    double temperature = 0.0;
    int n_samples = 1;
    int max_new_tokens = 1024;

    void validate() const {
        if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
        if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
        if (temperature == 0.0 && n_samples != 1) {
            throw std::invalid_argument("temperature 0 requires n_samples = 1");
        }
    }
};

struct Usage {
    int64_t prompt_tokens = 0;
    int64_t completion_tokens = 0;
};

struct RawResponse {
    std::string text;
    std::string finish_reason = "stop";
    Usage usage;
    int64_t latency_ms = 0;
    bool from_cache = false;
    std::string request_fingerprint;
};

struct AttemptRecord {
    int status = 0;        // HTTP status, or 0 on transport failure
    std::string error;     // transport error text
    int64_t waited_ms = 0; // backoff before this attempt
};

class GatewayError : public std::runtime_error {
public:
    GatewayError(const std::string& what, bool retryable_failure,
                 std::vector<AttemptRecord> attempt_log)
        : std::runtime_error(what),
          retryable(retryable_failure),
          attempts(std::move(attempt_log)) {}

    bool retryable = false;
    std::vector<AttemptRecord> attempts;
};

// One fully rendered, sample-tagged request.
struct CompletionRequest {
    std::string sample_id;
    prompting::RenderedPrompt prompt;
    // image_ref -> data URI; populated by the HTTP path, ignored by mocks.
    std::map<std::string, std::string> image_payloads;
    std::vector<std::string> image_hashes;  // source hashes, cache key component
    uint64_t seed = 0;                      // per-sample stochastic seed root
};

// Stable content digest; any behavior-affecting component changes the key.
std::string cache_key(const std::string& model_name, const std::string& template_hash,
                      const std::vector<std::string>& image_hashes, const DecodeParams& decode,
                      int sample_index);

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Returns n_samples responses in sample-index order.
    virtual std::vector<RawResponse> complete(const CompletionRequest& request,
                                              const DecodeParams& decode) = 0;
    virtual std::string model_name() const = 0;
};

// ---- mock backend ---------------------------------------------------------

enum class MockKind { echo_gt, fixed_offset, malformed, refuse, biased_sg };

struct MockBehavior {
    MockKind kind = MockKind::echo_gt;
    double dx = 0.0;  // fixed_offset
    double dy = 0.0;
    double p = 0.5;  // biased_sg

    // e.g. "echo_gt", "fixed_offset(0.1,0)", "biased_sg(0.5)"
    static MockBehavior parse(const std::string& spec);
    std::string to_string() const;
};

// Deterministic test double resolving ground truth by sample id.
class MockBackend : public ChatBackend {
public:
    MockBackend(const Corpus& truth, MockBehavior behavior,
                prompting::CoordScale scale = prompting::CoordScale::unit);

    std::vector<RawResponse> complete(const CompletionRequest& request,
                                      const DecodeParams& decode) override;
    std::string model_name() const override { return "mock:" + behavior_.to_string(); }

private:
    std::map<std::string, GazeSample> gaze_;
    std::map<std::string, SocialPair> social_;
    std::map<std::string, ProbeBox> probes_;
    MockBehavior behavior_;
    prompting::CoordScale scale_;
};

// ---- HTTP backend ---------------------------------------------------------

struct HttpResult {
    int status = 0;     // <= 0 on transport failure
    std::string body;   // response body, or error text on transport failure
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResult post(const std::string& path, const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

std::unique_ptr<Transport> make_http_transport(const std::string& base_url,
                                               double timeout_seconds);

// Chat-completions client: POST {base_url}/chat/completions with text and
// image-URL parts; retries transport/5xx/429 failures with exponential
// backoff, never a well-formed answer.
class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(ModelEndpoint endpoint, std::unique_ptr<Transport> transport = nullptr);

    std::vector<RawResponse> complete(const CompletionRequest& request,
                                      const DecodeParams& decode) override;
    std::string model_name() const override { return endpoint_.model_name; }

private:
    HttpResult post_with_retry(const std::string& body, std::vector<AttemptRecord>& attempts);

    ModelEndpoint endpoint_;
    std::unique_ptr<Transport> transport_;
};

// ---- disk cache -----------------------------------------------------------

// Content-addressed store, one JSON envelope per key under
// {dir}/{first2(key)}/{key}.json. Readers are lock-free; writes go through a
// temp file + rename.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<RawResponse> get(const std::string& key) const;
    void put(const std::string& key, const RawResponse& response) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

// Serves fully cached requests without touching the inner backend.
class CachingBackend : public ChatBackend {
public:
    CachingBackend(ChatBackend& inner, ResponseCache cache);

    std::vector<RawResponse> complete(const CompletionRequest& request,
                                      const DecodeParams& decode) override;
    std::string model_name() const override { return inner_.model_name(); }

    int64_t hits() const { return hits_.load(); }
    int64_t misses() const { return misses_.load(); }

private:
    ChatBackend& inner_;
    ResponseCache cache_;
    std::atomic<int64_t> hits_{0};
    std::atomic<int64_t> misses_{0};
};

// ---- bounded batch runner -------------------------------------------------

struct BatchItem {
    CompletionRequest request;
    DecodeParams decode;
};

struct BatchOutcome {
    bool ok = false;
    std::vector<RawResponse> responses;
    std::string error;
};

// Issues requests through a bounded worker pool; outcomes come back in input
// order regardless of completion order.
std::vector<BatchOutcome> run_batch(ChatBackend& backend, const std::vector<BatchItem>& items,
                                    int max_parallel);

}  // namespace gazebench::gateway

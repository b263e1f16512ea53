#include "doctest.h"

#include <atomic>
#include <thread>

#include "gazebench/gateway.hpp"
#include "gazebench/jsonl.hpp"
#include "gazebench/parsing.hpp"

#include "httplib.h"

using namespace gazebench;
using namespace gazebench::gateway;

namespace {

Corpus mini_corpus() {
    Corpus c;
    GazeSample s;
    s.sample_id = "g0";
    s.dataset_id = DatasetId::GF;
    s.image_ref = "img.ppm";
    s.image_width = 640;
    s.image_height = 480;
    s.head = {0.4, 0.4, 0.6, 0.6};
    s.gaze_points = {{0.3, 0.7}};
    s.inout_label = true;
    c.gaze.push_back(s);

    SocialPair p;
    p.pair_id = "p0";
    p.dataset_id = DatasetId::VAT;
    p.image_ref = "img.ppm";
    p.image_width = 640;
    p.image_height = 480;
    p.head_a = {0.1, 0.1, 0.2, 0.2};
    p.head_b = {0.5, 0.5, 0.7, 0.7};
    p.task = SocialTask::LAEO;
    p.label = true;
    c.social.push_back(p);

    ProbeBox b;
    b.probe_id = "b0";
    b.image_ref = "img.ppm";
    b.image_width = 640;
    b.image_height = 480;
    b.box = {0.1, 0.1, 0.3, 0.3};
    b.is_positive = false;
    b.distance_to_nearest_gt = 0.25;
    c.probes.push_back(b);
    return c;
}

CompletionRequest request_for(const std::string& sample_id) {
    CompletionRequest req;
    req.sample_id = sample_id;
    prompting::Message m;
    m.role = prompting::Role::user;
    m.parts.push_back(prompting::TextPart{"question about " + sample_id});
    req.prompt.messages.push_back(std::move(m));
    req.prompt.template_hash = "hash:" + sample_id;
    req.seed = 7;
    return req;
}

// Scripted transport: plays back a fixed status sequence.
class ScriptedTransport : public Transport {
public:
    explicit ScriptedTransport(std::vector<HttpResult> script, std::string reply_body = "")
        : script_(std::move(script)), reply_body_(std::move(reply_body)) {}

    HttpResult post(const std::string& path, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers) override {
        last_path = path;
        last_body = body;
        last_headers = headers;
        const size_t i = std::min(calls.fetch_add(1), script_.size() - 1);
        HttpResult r = script_[i];
        if (r.status == 200 && r.body.empty()) r.body = reply_body_;
        if (r.status == 200) ++successes;
        return r;
    }

    std::atomic<size_t> calls{0};
    std::atomic<size_t> successes{0};
    std::string last_path;
    std::string last_body;
    std::vector<std::pair<std::string, std::string>> last_headers;

private:
    std::vector<HttpResult> script_;
    std::string reply_body_;
};

std::string chat_body(const std::string& text, const std::string& finish = "stop", int n = 1) {
    json choices = json::array();
    for (int i = 0; i < n; ++i) {
        choices.push_back({{"message", {{"role", "assistant"}, {"content", text}}},
                           {"finish_reason", finish}});
    }
    return json{{"choices", choices},
                {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 5}}}}
        .dump();
}

ModelEndpoint test_endpoint() {
    ModelEndpoint e;
    e.base_url = "http://127.0.0.1:1";
    e.model_name = "test-model";
    e.retry.max_attempts = 3;
    e.retry.backoff_base_ms = 1;
    return e;
}

}  // namespace

TEST_CASE("cache keys are stable and component-sensitive") {
    DecodeParams d;
    const std::vector<std::string> imgs = {"hash_a"};
    const std::string base = cache_key("m", "tpl", imgs, d, 0);
    CHECK(cache_key("m", "tpl", imgs, d, 0) == base);
    CHECK(cache_key("m2", "tpl", imgs, d, 0) != base);
    CHECK(cache_key("m", "tpl2", imgs, d, 0) != base);
    CHECK(cache_key("m", "tpl", {"hash_b"}, d, 0) != base);
    DecodeParams hot = d;
    hot.temperature = 0.7;
    hot.n_samples = 4;
    CHECK(cache_key("m", "tpl", imgs, hot, 0) != base);
    CHECK(cache_key("m", "tpl", imgs, hot, 1) != cache_key("m", "tpl", imgs, hot, 0));
    DecodeParams longer = d;
    longer.max_new_tokens = 2048;
    CHECK(cache_key("m", "tpl", imgs, longer, 0) != base);
}

TEST_CASE("mock behavior parsing") {
    CHECK(MockBehavior::parse("echo_gt").kind == MockKind::echo_gt);
    CHECK(MockBehavior::parse("malformed").kind == MockKind::malformed);
    CHECK(MockBehavior::parse("refuse").kind == MockKind::refuse);
    const MockBehavior off = MockBehavior::parse("fixed_offset(0.1,0)");
    CHECK(off.kind == MockKind::fixed_offset);
    CHECK(off.dx == 0.1);
    CHECK(off.dy == 0.0);
    const MockBehavior sg = MockBehavior::parse("biased_sg(0.5)");
    CHECK(sg.kind == MockKind::biased_sg);
    CHECK(sg.p == 0.5);
    CHECK_THROWS(MockBehavior::parse("surprise_me"));
    CHECK_THROWS(MockBehavior::parse("fixed_offset(1)"));
}

TEST_CASE("mock backend emits protocol-shaped answers") {
    const Corpus corpus = mini_corpus();
    DecodeParams d;

    SUBCASE("echo_gt parses back to the exact truth") {
        MockBackend mock(corpus, MockBehavior::parse("echo_gt"));
        auto rs = mock.complete(request_for("g0"), d);
        REQUIRE(rs.size() == 1);
        CHECK(rs[0].text.find("### Gaze Point ###") == 0);
        auto parsed = parsing::parse_gaze(rs[0].text, prompting::CoordScale::unit);
        CHECK(parsed.status == ParseStatus::ok);
        CHECK(parsed.prediction.point == Point2{0.3, 0.7});
        CHECK(*parsed.prediction.p_io == 1.0);

        auto social = mock.complete(request_for("p0"), d);
        auto sp = parsing::parse_social(social[0].text);
        CHECK(*sp.prediction.p_sg == 1.0);

        auto probe = mock.complete(request_for("b0"), d);
        CHECK(probe[0].text == "No");  // b0 is a negative box
    }
    SUBCASE("fixed offset shifts the echoed point") {
        MockBackend mock(corpus, MockBehavior::parse("fixed_offset(0.1,0)"));
        auto parsed = parsing::parse_gaze(mock.complete(request_for("g0"), d)[0].text,
                                          prompting::CoordScale::unit);
        CHECK(parsed.prediction.point->x == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(parsed.prediction.point->y == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("malformed and refuse produce fallback parses") {
        MockBackend malformed(corpus, MockBehavior::parse("malformed"));
        auto p1 = parsing::parse_gaze(malformed.complete(request_for("g0"), d)[0].text,
                                      prompting::CoordScale::unit);
        CHECK(p1.status == ParseStatus::fallback);
        CHECK(*p1.prediction.p_io == 0.5);
        CHECK(p1.prediction.point == Point2{0.5, 0.5});

        MockBackend refuse(corpus, MockBehavior::parse("refuse"));
        auto p2 = parsing::parse_social(refuse.complete(request_for("p0"), d)[0].text);
        CHECK(p2.status == ParseStatus::fallback);
        CHECK(*p2.prediction.p_sg == 0.5);
    }
    SUBCASE("biased_sg fixes the label and the probe answer") {
        MockBackend mock(corpus, MockBehavior::parse("biased_sg(0.5)"));
        auto sp = parsing::parse_social(mock.complete(request_for("p0"), d)[0].text);
        CHECK(*sp.prediction.p_sg == 0.5);
        CHECK(mock.complete(request_for("b0"), d)[0].text == "Yes");  // always-yes at p >= 0.5
    }
    SUBCASE("thousand-scale mock emits rescaled coordinates") {
        MockBackend mock(corpus, MockBehavior::parse("echo_gt"), prompting::CoordScale::thousand);
        auto parsed = parsing::parse_gaze(mock.complete(request_for("g0"), d)[0].text,
                                          prompting::CoordScale::thousand);
        CHECK(parsed.prediction.point->x == doctest::Approx(0.3).epsilon(1e-9));
    }
    SUBCASE("unknown samples are an error") {
        MockBackend mock(corpus, MockBehavior::parse("echo_gt"));
        CHECK_THROWS(mock.complete(request_for("missing"), d));
    }
    SUBCASE("n_samples replicates deterministically") {
        MockBackend mock(corpus, MockBehavior::parse("echo_gt"));
        DecodeParams hot;
        hot.temperature = 0.7;
        hot.n_samples = 16;
        auto rs = mock.complete(request_for("g0"), hot);
        REQUIRE(rs.size() == 16);
        for (const auto& r : rs) CHECK(r.text == rs[0].text);
        CHECK(rs[0].request_fingerprint != rs[1].request_fingerprint);
    }
}

TEST_CASE("retry policy: 429s retry, 4xx fails fast, success stops retries") {
    SUBCASE("two 429s then success leaves a three-entry attempt log") {
        auto transport = std::make_unique<ScriptedTransport>(
            std::vector<HttpResult>{{429, "slow down"}, {429, "slow down"}, {200, ""}},
            chat_body("hello"));
        auto* t = transport.get();
        HttpBackend backend(test_endpoint(), std::move(transport));
        auto rs = backend.complete(request_for("g0"), DecodeParams{});
        REQUIRE(rs.size() == 1);
        CHECK(rs[0].text == "hello");
        CHECK(t->calls == 3);
        CHECK(t->successes == 1);  // at most one success per request
    }
    SUBCASE("404 is not retried") {
        auto transport = std::make_unique<ScriptedTransport>(
            std::vector<HttpResult>{{404, "not found"}});
        auto* t = transport.get();
        HttpBackend backend(test_endpoint(), std::move(transport));
        CHECK_THROWS_AS(backend.complete(request_for("g0"), DecodeParams{}), GatewayError);
        CHECK(t->calls == 1);
    }
    SUBCASE("transport failures exhaust the attempt budget") {
        auto transport = std::make_unique<ScriptedTransport>(
            std::vector<HttpResult>{{0, "connection refused"}});
        auto* t = transport.get();
        HttpBackend backend(test_endpoint(), std::move(transport));
        try {
            backend.complete(request_for("g0"), DecodeParams{});
            FAIL("expected GatewayError");
        } catch (const GatewayError& e) {
            CHECK(e.retryable);
            CHECK(e.attempts.size() == 3);
        }
        CHECK(t->calls == 3);
    }
    SUBCASE("5xx retries and eventually succeeds") {
        auto transport = std::make_unique<ScriptedTransport>(
            std::vector<HttpResult>{{503, "overloaded"}, {200, ""}}, chat_body("ok"));
        HttpBackend backend(test_endpoint(), std::move(transport));
        CHECK(backend.complete(request_for("g0"), DecodeParams{})[0].text == "ok");
    }
}

TEST_CASE("http request body carries the chat-completions schema") {
    auto transport = std::make_unique<ScriptedTransport>(std::vector<HttpResult>{{200, ""}},
                                                         chat_body("x", "stop", 4));
    auto* t = transport.get();
    ModelEndpoint endpoint = test_endpoint();
    HttpBackend backend(endpoint, std::move(transport));

    CompletionRequest req = request_for("g0");
    prompting::Message img;
    img.role = prompting::Role::user;
    img.parts.push_back(prompting::ImagePart{"img.ppm"});
    req.prompt.messages.push_back(img);
    req.image_payloads["img.ppm"] = "data:image/png;base64,QUJD";

    DecodeParams d;
    d.temperature = 0.7;
    d.n_samples = 4;
    auto rs = backend.complete(req, d);
    REQUIRE(rs.size() == 4);
    CHECK(t->last_path == "/chat/completions");

    const json body = json::parse(t->last_body);
    CHECK(body.at("model") == "test-model");
    CHECK(body.at("temperature") == 0.7);
    CHECK(body.at("n") == 4);
    CHECK(body.at("seed") == 7);
    REQUIRE(body.at("messages").size() == 2);
    CHECK(body["messages"][0]["content"][0]["type"] == "text");
    CHECK(body["messages"][1]["content"][0]["type"] == "image_url");
    CHECK(body["messages"][1]["content"][0]["image_url"]["url"] == "data:image/png;base64,QUJD");

    SUBCASE("temperature zero omits the seed") {
        auto transport2 = std::make_unique<ScriptedTransport>(std::vector<HttpResult>{{200, ""}},
                                                              chat_body("x"));
        auto* t2 = transport2.get();
        HttpBackend backend2(test_endpoint(), std::move(transport2));
        backend2.complete(request_for("g0"), DecodeParams{});
        CHECK(!json::parse(t2->last_body).contains("seed"));
        CHECK(!json::parse(t2->last_body).contains("n"));
    }
}

TEST_CASE("endpoints without n support fan out sequential seeded requests") {
    auto transport = std::make_unique<ScriptedTransport>(std::vector<HttpResult>{{200, ""}},
                                                         chat_body("y"));
    auto* t = transport.get();
    ModelEndpoint endpoint = test_endpoint();
    endpoint.supports_n = false;
    HttpBackend backend(endpoint, std::move(transport));
    DecodeParams d;
    d.temperature = 0.7;
    d.n_samples = 3;
    auto rs = backend.complete(request_for("g0"), d);
    REQUIRE(rs.size() == 3);
    CHECK(t->calls == 3);
    CHECK(json::parse(t->last_body).value("n", 1) == 1);
}

TEST_CASE("auth token is read from the configured environment variable") {
    setenv("GAZEBENCH_TEST_TOKEN", "sekrit", 1);
    auto transport = std::make_unique<ScriptedTransport>(std::vector<HttpResult>{{200, ""}},
                                                         chat_body("z"));
    auto* t = transport.get();
    ModelEndpoint endpoint = test_endpoint();
    endpoint.auth_token_env_var = "GAZEBENCH_TEST_TOKEN";
    HttpBackend backend(endpoint, std::move(transport));
    backend.complete(request_for("g0"), DecodeParams{});
    REQUIRE(t->last_headers.size() == 1);
    CHECK(t->last_headers[0].first == "Authorization");
    CHECK(t->last_headers[0].second == "Bearer sekrit");

    ModelEndpoint missing = test_endpoint();
    missing.auth_token_env_var = "GAZEBENCH_NO_SUCH_TOKEN";
    HttpBackend backend2(missing, std::make_unique<ScriptedTransport>(
                                      std::vector<HttpResult>{{200, ""}}, chat_body("z")));
    CHECK_THROWS_AS(backend2.complete(request_for("g0"), DecodeParams{}), GatewayError);
}

namespace {

// Counts concurrent in-flight completions to verify pool bounds.
class GaugeBackend : public ChatBackend {
public:
    std::vector<RawResponse> complete(const CompletionRequest& request,
                                      const DecodeParams& decode) override {
        const int now = ++in_flight;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --in_flight;
        RawResponse r;
        r.text = "resp:" + request.sample_id;
        (void)decode;
        return {r};
    }
    std::string model_name() const override { return "gauge"; }

    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
};

}  // namespace

TEST_CASE("batch runner bounds concurrency and preserves input order") {
    GaugeBackend backend;
    std::vector<BatchItem> items;
    for (int i = 0; i < 40; ++i) items.push_back({request_for("s" + std::to_string(i)), {}});
    auto outcomes = run_batch(backend, items, 4);
    REQUIRE(outcomes.size() == items.size());
    CHECK(backend.peak.load() <= 4);
    CHECK(backend.peak.load() >= 2);  // parallelism actually happened
    for (size_t i = 0; i < outcomes.size(); ++i) {
        REQUIRE(outcomes[i].ok);
        CHECK(outcomes[i].responses[0].text == "resp:s" + std::to_string(i));
    }
    CHECK_THROWS(run_batch(backend, items, 0));
}

TEST_CASE("batch runner reports per-item errors without aborting the batch") {
    class FlakyBackend : public ChatBackend {
    public:
        std::vector<RawResponse> complete(const CompletionRequest& request,
                                          const DecodeParams&) override {
            if (request.sample_id == "s1") throw std::runtime_error("boom");
            RawResponse r;
            r.text = "ok";
            return {r};
        }
        std::string model_name() const override { return "flaky"; }
    };
    FlakyBackend backend;
    std::vector<BatchItem> items = {{request_for("s0"), {}}, {request_for("s1"), {}},
                                    {request_for("s2"), {}}};
    auto outcomes = run_batch(backend, items, 2);
    CHECK(outcomes[0].ok);
    CHECK(!outcomes[1].ok);
    CHECK(outcomes[1].error == "boom");
    CHECK(outcomes[2].ok);
}

TEST_CASE("disk cache round-trips responses and serves hits without the backend") {
    const auto dir = std::filesystem::temp_directory_path() / "gazebench_cache_test";
    std::filesystem::remove_all(dir);
    ResponseCache cache(dir);

    RawResponse r;
    r.text = "cached text";
    r.finish_reason = "stop";
    r.usage.prompt_tokens = 3;
    cache.put("abcdef0123", r);
    auto hit = cache.get("abcdef0123");
    REQUIRE(hit.has_value());
    CHECK(hit->text == "cached text");
    CHECK(hit->from_cache);
    CHECK(!cache.get("ffffffffff").has_value());
    // Layout: {dir}/{first2}/{key}.json
    CHECK(std::filesystem::exists(dir / "ab" / "abcdef0123.json"));

    SUBCASE("caching backend consults the inner backend once per key") {
        const Corpus corpus = mini_corpus();
        MockBackend inner(corpus, MockBehavior::parse("echo_gt"));
        CachingBackend caching(inner, ResponseCache(dir));
        auto first = caching.complete(request_for("g0"), DecodeParams{});
        CHECK(!first[0].from_cache);
        CHECK(caching.misses() == 1);
        auto second = caching.complete(request_for("g0"), DecodeParams{});
        CHECK(second[0].from_cache);
        CHECK(second[0].text == first[0].text);
        CHECK(caching.misses() == 1);
        CHECK(caching.hits() == 1);
    }
}

TEST_CASE("live httplib server round trip, with and without a path prefix") {
    httplib::Server server;
    server.Post("/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        const std::string model = body.at("model");
        res.set_content(chat_body("live reply from " + model), "application/json");
    });
    server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        const std::string model = body.at("model");
        res.set_content(chat_body("v1 reply from " + model), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ModelEndpoint endpoint;
    endpoint.base_url = "http://127.0.0.1:" + std::to_string(port);
    endpoint.model_name = "live-model";
    HttpBackend backend(endpoint);
    auto rs = backend.complete(request_for("g0"), DecodeParams{});
    REQUIRE(rs.size() == 1);
    CHECK(rs[0].text == "live reply from live-model");

    // Base URLs carrying a path suffix keep it on every request.
    ModelEndpoint v1 = endpoint;
    v1.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    HttpBackend backend_v1(v1);
    CHECK(backend_v1.complete(request_for("g0"), DecodeParams{})[0].text ==
          "v1 reply from live-model");

    server.stop();
    server_thread.join();
}

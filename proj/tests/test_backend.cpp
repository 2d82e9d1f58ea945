#include "doctest.h"

#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "interwhen/http_backend.hpp"
#include "interwhen/mock_backend.hpp"
#include "interwhen/trace.hpp"

using namespace interwhen;
using nlohmann::json;

namespace {

std::string drain(GenerationStream& s) {
    std::string out;
    while (auto ev = s.next()) out += ev->text;
    return out;
}

json two_node_script() {
    return json{{"start", "root"},
                {"nodes",
                 {{"root",
                   {{"tokens", {"think ", "think ", "wrong. "}},
                    {"next", "tail"},
                    {"branches",
                     {{"Wait, that step is off", "fixed"}, {"__end_think__", "guess"}}}}},
                  {"tail", {{"tokens", {"the answer is A"}}}},
                  {"fixed", {{"tokens", {"redone. ", "the answer is B"}}}},
                  {"guess", {{"tokens", {" A"}}}}}}};
}

}  // namespace

TEST_CASE("mock backend streams the scripted tokens") {
    auto b = make_mock_backend(two_node_script());
    GenerationRequest req;
    auto s = b->generate(req);
    auto first = s->next();
    REQUIRE(first.has_value());
    CHECK(first->text == "think ");
    CHECK(drain(*s) == "think wrong. the answer is A");
    CHECK(!s->error().has_value());
}

TEST_CASE("mock backend continues from a matching prefill") {
    auto b = make_mock_backend(two_node_script());
    GenerationRequest req;
    req.prefill = "think think ";
    CHECK(drain(*b->generate(req)) == "wrong. the answer is A");

    req.prefill = "think think wr";
    CHECK(drain(*b->generate(req)) == "ong. the answer is A");
}

TEST_CASE("mock backend branches where the injected text diverges") {
    auto b = make_mock_backend(two_node_script());
    GenerationRequest req;
    req.prefill = "think think wrong. Wait, that step is off";
    CHECK(drain(*b->generate(req)) == "redone. the answer is B");
}

TEST_CASE("mock backend matches an injected think close via __end_think__") {
    auto b = make_mock_backend(two_node_script());
    GenerationRequest req;
    req.prefill = "think think </think>\nThe final answer is";
    CHECK(drain(*b->generate(req)) == " A");
}

TEST_CASE("mock backend rejects text the script does not cover") {
    auto b = make_mock_backend(two_node_script());
    GenerationRequest req;
    req.prefill = "something entirely different";
    CHECK_THROWS_AS(b->generate(req), ContractViolation);

    req.prefill = "think think wrong. Hello, unscripted injection";
    CHECK_THROWS_AS(b->generate(req), ContractViolation);
}

TEST_CASE("mock backend cycles fresh attempts and repeats the last") {
    json script{{"start", "a"},
                {"nodes",
                 {{"a", {{"tokens", {"first"}}}},
                  {"b", {{"tokens", {"second"}}}}}},
                {"attempts", {"a", "b"}}};
    auto b = make_mock_backend(script);
    GenerationRequest req;
    CHECK(drain(*b->generate(req)) == "first");
    CHECK(drain(*b->generate(req)) == "second");
    CHECK(drain(*b->generate(req)) == "second");

    // Prefill continuations resolve against the current attempt, not a new one.
    req.prefill = "sec";
    CHECK(drain(*b->generate(req)) == "ond");
}

TEST_CASE("mock backend routes by prompt content") {
    json script{{"start", "base"},
                {"nodes",
                 {{"base", {{"tokens", {"generic"}}}},
                  {"special", {{"tokens", {"routed"}}}}}},
                {"prompts", json::array({{{"contains", "magic marker"}, {"start", "special"}}})}};
    auto b = make_mock_backend(script);
    GenerationRequest plain;
    CHECK(drain(*b->generate(plain)) == "generic");
    GenerationRequest routed;
    routed.prompt = "a prompt with the magic marker inside";
    CHECK(drain(*b->generate(routed)) == "routed");
}

TEST_CASE("mock probes key on the longest prefill suffix and advance per call") {
    json script{{"start", "root"},
                {"nodes", {{"root", {{"tokens", {"text"}}}}}},
                {"probes",
                 json::array(
                     {{{"suffix", "</think>"},
                       {"calls",
                        json::array({json::array({json::array(
                                         {json::array({"A", -0.1}), json::array({"B", -2.3})})}),
                                     json::array({json::array({json::array({"C", -0.5})})})})}},
                      {{"suffix", "The answer is"},
                       {"calls", json::array({json::array({json::array(
                                     {json::array({" D", -0.01}), json::array({"\n", -4.0})})})})}}})}};
    auto b = make_mock_backend(script);

    GenerationRequest req;
    req.prefill = "text</think>";
    auto d1 = b->probe(req, 8);
    REQUIRE(d1.size() == 1);
    REQUIRE(d1[0].top.size() == 2);
    CHECK(d1[0].top[0].token == "A");
    CHECK(d1[0].top[0].logprob == doctest::Approx(-0.1));

    auto d2 = b->probe(req, 8);
    REQUIRE(d2.size() == 1);
    CHECK(d2[0].top[0].token == "C");

    auto d3 = b->probe(req, 8);  // past the table: the last call repeats
    REQUIRE(d3.size() == 1);
    CHECK(d3[0].top[0].token == "C");

    req.prefill = "text</think> The answer is";
    auto d4 = b->probe(req, 8);
    REQUIRE(d4.size() == 1);
    CHECK(d4[0].top[0].token == " D");

    auto none = b->probe(GenerationRequest{}, 8);
    CHECK(none.empty());
}

TEST_CASE("mock probe truncates to max_tokens") {
    json script{{"start", "root"},
                {"nodes", {{"root", {{"tokens", {"x"}}}}}},
                {"probes",
                 json::array({{{"suffix", "q"},
                               {"calls", json::array({json::array(
                                             {json::array({json::array({"a", -0.1})}),
                                              json::array({json::array({"b", -0.2})}),
                                              json::array({json::array({"c", -0.3})})})})}}})}};
    auto b = make_mock_backend(script);
    GenerationRequest req;
    req.prefill = "xq";
    CHECK(b->probe(req, 2).size() == 2);
}

// ---------------------------------------------------------------- http ----

namespace {

struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    TestServer() {
        server.Get("/v1/models", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"data":[{"id":"m"}]})", "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~TestServer() {
        server.stop();
        thread.join();
    }

    HttpBackendConfig config() const {
        HttpBackendConfig cfg;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
        cfg.max_retries = 2;
        cfg.retry_backoff_ms = 10;
        return cfg;
    }
};

std::string sse_chunk(const json& j) { return "data: " + j.dump() + "\n\n"; }

}  // namespace

TEST_CASE("http backend streams SSE deltas and carries the prefill") {
    TestServer ts;
    json seen_body;
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request& req, httplib::Response& res) {
                       seen_body = json::parse(req.body);
                       std::string payload =
                           sse_chunk({{"choices",
                                       {{{"delta", {{"content", "Hello "}}}}}}}) +
                           sse_chunk({{"choices", {{{"delta", {{"content", "world"}}}}}}}) +
                           "data: [DONE]\n\n";
                       res.set_content(payload, "text/event-stream");
                   });

    auto backend = make_http_backend(ts.config());
    GenerationRequest req;
    req.prompt = "say hello";
    req.prefill = "Hel";
    auto stream = backend->generate(req);
    CHECK(drain(*stream) == "Hello world");
    CHECK(!stream->error().has_value());

    CHECK(seen_body["stream"] == true);
    CHECK(seen_body["messages"][0]["content"] == "say hello");
    CHECK(seen_body["messages"][1]["role"] == "assistant");
    CHECK(seen_body["messages"][1]["content"] == "Hel");
    CHECK(seen_body["continue_final_message"] == true);
    CHECK(seen_body["add_generation_prompt"] == false);
}

TEST_CASE("http backend parses streamed logprob entries into distributions") {
    TestServer ts;
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                       json entry{{"token", "A"},
                                  {"logprob", -0.2},
                                  {"top_logprobs",
                                   json::array({{{"token", "A"}, {"logprob", -0.2}},
                                                {{"token", "B"}, {"logprob", -1.7}}})}};
                       json chunk{{"choices",
                                   {{{"delta", {{"content", "A"}}},
                                     {"logprobs", {{"content", json::array({entry})}}}}}}};
                       res.set_content(sse_chunk(chunk) + "data: [DONE]\n\n",
                                       "text/event-stream");
                   });

    auto backend = make_http_backend(ts.config());
    auto stream = backend->generate({});
    auto ev = stream->next();
    REQUIRE(ev.has_value());
    CHECK(ev->text == "A");
    REQUIRE(ev->dist.has_value());
    REQUIRE(ev->dist->top.size() == 2);
    CHECK(ev->dist->top[0].token == "A");
    CHECK(ev->dist->top[1].logprob == doctest::Approx(-1.7));
    CHECK(!stream->next().has_value());
}

TEST_CASE("http backend retries transient stream failures") {
    TestServer ts;
    std::atomic<int> hits{0};
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                       if (hits.fetch_add(1) == 0) {
                           res.status = 503;
                           return;
                       }
                       res.set_content(
                           sse_chunk({{"choices", {{{"delta", {{"content", "ok"}}}}}}}) +
                               "data: [DONE]\n\n",
                           "text/event-stream");
                   });

    auto backend = make_http_backend(ts.config());
    auto stream = backend->generate({});
    CHECK(drain(*stream) == "ok");
    CHECK(!stream->error().has_value());
    CHECK(hits.load() == 2);
}

TEST_CASE("http backend reports a terminal stream failure as an error") {
    TestServer ts;
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    auto backend = make_http_backend(ts.config());
    auto stream = backend->generate({});
    CHECK(drain(*stream).empty());
    REQUIRE(stream->error().has_value());
    CHECK(stream->error()->find("400") != std::string::npos);
}

TEST_CASE("http probe sends a greedy logprob request and parses the answer") {
    TestServer ts;
    json seen_body;
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request& req, httplib::Response& res) {
                       seen_body = json::parse(req.body);
                       json content = json::array(
                           {{{"token", " B"},
                             {"logprob", -0.05},
                             {"top_logprobs",
                              json::array({{{"token", " B"}, {"logprob", -0.05}},
                                           {{"token", " C"}, {"logprob", -3.2}}})}}});
                       json body{{"choices",
                                  {{{"message", {{"content", " B"}}},
                                    {"logprobs", {{"content", content}}}}}}};
                       res.set_content(body.dump(), "application/json");
                   });

    auto backend = make_http_backend(ts.config());
    GenerationRequest req;
    req.prefill = "reasoning</think> The answer is";
    auto dists = backend->probe(req, 4);
    REQUIRE(dists.size() == 1);
    CHECK(dists[0].top[0].token == " B");

    CHECK(seen_body["stream"] == false);
    CHECK(seen_body["temperature"] == 0.0);
    CHECK(seen_body["max_tokens"] == 4);
    CHECK(seen_body["logprobs"] == true);
}

TEST_CASE("http preflight surfaces auth rejections") {
    httplib::Server server;
    server.Get("/v1/models", [](const httplib::Request&, httplib::Response& res) {
        res.status = 401;
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    try {
        make_http_backend(cfg);
        FAIL("expected a BackendError");
    } catch (const BackendError& e) {
        CHECK(e.kind == BackendError::Kind::Auth);
    }
    server.stop();
    t.join();
}

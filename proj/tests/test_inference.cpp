#include <set>

#include "doctest.h"
#include "reqforge/inference.hpp"
#include "support.hpp"

using namespace reqforge;
using namespace reqforge::inference;

namespace {

std::shared_ptr<Client> make(const testing::EchoStub& stub, EndpointConfig cfg = {}) {
  cfg.base_url = stub.base_url();
  auto client = std::make_shared<Client>(cfg, make_http_transport(cfg));
  client->set_sleeper([](std::chrono::milliseconds) {});
  return client;
}

GenerationParams params() {
  GenerationParams p;
  p.model_id = "reqbrain-test";
  return p;
}

std::vector<InstructRecord> records(std::size_t n) {
  std::vector<InstructRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].record_id = "rec-" + std::to_string(i);
    out[i].instruction = "instruction number " + std::to_string(i);
    out[i].completion = "The system shall do thing " + std::to_string(i) + ".";
    out[i].req_ids = {"R" + std::to_string(i)};
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Usage;
}

// Scripted transport for retry bookkeeping.
class ScriptedTransport : public Transport {
 public:
  std::vector<HttpResponse> script;
  std::size_t calls = 0;
  HttpResponse post(const std::string&, const std::string&) override {
    auto r = script[std::min(calls, script.size() - 1)];
    ++calls;
    return r;
  }
};

}  // namespace

TEST_CASE("wire format") {
  auto p = params();
  p.seed = 42;
  auto j = build_request({{Role::System, "be terse"}, {Role::User, "hi"}}, p);
  CHECK(j["model"] == "reqbrain-test");
  CHECK(j["messages"][0]["role"] == "system");
  CHECK(j["messages"][1]["content"] == "hi");
  CHECK(j["temperature"] == 0.2);
  CHECK(j["max_tokens"] == 512);
  CHECK(j["seed"] == 42);
  CHECK_FALSE(j.contains("stream"));
  CHECK(build_request({{Role::User, "hi"}}, p, true)["stream"] == true);

  CHECK(parse_completion(testing::completion_body("ok")) == "ok");
  CHECK(code_of([] { parse_completion("{}"); }) == ErrorCode::MalformedResponse);
  CHECK(code_of([] { parse_completion("not json"); }) == ErrorCode::MalformedResponse);
}

TEST_CASE("generation params") {
  auto p = params();
  p.temperature = 2.5;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::InvalidArgument);
  p.temperature = 0.0;
  p.max_tokens = 0;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("chat against the echo stub") {
  testing::EchoStub stub;
  EndpointConfig cfg;
  cfg.api_key = "sk-test-123";
  auto client = make(stub, cfg);
  auto reply = client->chat({{Role::User, "Write safety requirements for an anti-lock brake system"}}, params());
  CHECK(reply.role == Role::Assistant);
  CHECK(reply.content == "Write safety requirements for an anti-lock brake system");
  CHECK(stub.last_authorization == "Bearer sk-test-123");

  CHECK(code_of([&] { client->chat({}, params()); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { client->chat({{Role::User, "hi"}, {Role::Assistant, "yo"}}, params()); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("base url path prefixes are kept") {
  testing::EchoStub stub;
  EndpointConfig cfg;
  cfg.base_url = stub.base_url() + "/";
  Client client(cfg, make_http_transport(cfg));
  CHECK(client.chat({{Role::User, "x"}}, params()).content == "x");
}

TEST_CASE("HTTP 500 exhausts the retries") {
  testing::EchoStub stub;
  stub.fail = [](const std::string&) { return 500; };
  EndpointConfig cfg;
  cfg.retries = 3;
  cfg.base_url = stub.base_url();
  Client client(cfg, make_http_transport(cfg));
  std::vector<std::chrono::milliseconds> sleeps;
  client.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  try {
    client.chat({{Role::User, "x"}}, params());
    FAIL("expected HttpStatus");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HttpStatus);
    CHECK(std::string(e.what()).find("500") != std::string::npos);
  }
  CHECK(stub.requests == 4);
  REQUIRE(sleeps.size() == 3);
  CHECK(sleeps[0].count() == 500);
  CHECK(sleeps[1].count() == 1000);
  CHECK(sleeps[2].count() == 2000);
}

TEST_CASE("retry policy") {
  SUBCASE("client errors are not retried") {
    auto t = std::make_shared<ScriptedTransport>();
    t->script = {{400, "bad", ""}};
    Client client({}, t);
    client.set_sleeper([](auto) {});
    CHECK(code_of([&] { client.chat({{Role::User, "x"}}, params()); }) == ErrorCode::HttpStatus);
    CHECK(t->calls == 1);
  }
  SUBCASE("a 429 then success recovers") {
    auto t = std::make_shared<ScriptedTransport>();
    t->script = {{429, "", ""}, {503, "", ""}, {200, testing::completion_body("fine"), ""}};
    Client client({}, t);
    client.set_sleeper([](auto) {});
    CHECK(client.chat({{Role::User, "x"}}, params()).content == "fine");
    CHECK(t->calls == 3);
  }
}

TEST_CASE("unreachable endpoint") {
  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";
  cfg.retries = 1;
  Client client(cfg, make_http_transport(cfg));
  client.set_sleeper([](auto) {});
  CHECK(code_of([&] { client.chat({{Role::User, "x"}}, params()); }) == ErrorCode::EndpointUnreachable);
}

TEST_CASE("streaming chat") {
  testing::EchoStub stub;
  auto client = make(stub);
  std::vector<std::string> pieces;
  auto reply = client->chat_stream({{Role::User, "What is a CAN bus?"}}, params(),
                                   [&](std::string_view p) { pieces.emplace_back(p); });
  CHECK(reply.content == "What is a CAN bus?");
  CHECK(pieces.size() == 5);

  SUBCASE("non-streaming endpoint falls back to the full body") {
    auto t = std::make_shared<ScriptedTransport>();
    t->script = {{200, testing::completion_body("whole"), "application/json"}};
    Client plain({}, t);
    std::string seen;
    CHECK(plain.chat_stream({{Role::User, "x"}}, params(), [&](std::string_view p) { seen += p; }).content ==
          "whole");
    CHECK(seen == "whole");
  }
}

TEST_CASE("generate_benchmark") {
  testing::EchoStub stub;
  SUBCASE("one record echoes its instruction") {
    auto res = generate_benchmark(*make(stub), records(1), params());
    REQUIRE(res.pairs.size() == 1);
    CHECK(res.pairs[0].candidate == "instruction number 0");
    CHECK(res.pairs[0].reference == "The system shall do thing 0.");
    CHECK(res.pairs[0].model_id == "reqbrain-test");
  }
  SUBCASE("34 records keep order and ids") {
    auto recs = records(34);
    auto res = generate_benchmark(*make(stub), recs, params());
    REQUIRE(res.pairs.size() == 34);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(res.pairs[i].record_id == recs[i].record_id);
      CHECK(res.pairs[i].candidate == recs[i].instruction);
    }
    CHECK(res.failures.empty());
  }
  SUBCASE("a failing record is reported and the run continues") {
    stub.fail = [](const std::string& last) { return last == "instruction number 1" ? 500 : 0; };
    EndpointConfig cfg;
    cfg.retries = 0;
    auto res = generate_benchmark(*make(stub, cfg), records(3), params());
    REQUIRE(res.pairs.size() == 2);
    CHECK(res.pairs[0].record_id == "rec-0");
    CHECK(res.pairs[1].record_id == "rec-2");
    REQUIRE(res.failures.size() == 1);
    CHECK(res.failures[0].record_id == "rec-1");
    CHECK(res.failures[0].code == ErrorCode::HttpStatus);
    CHECK(to_json(res.failures[0])["error"] == "E_HTTP_STATUS");
  }
  SUBCASE("everything failing") {
    stub.fail = [](const std::string&) { return 503; };
    EndpointConfig cfg;
    cfg.retries = 0;
    CHECK(code_of([&] { generate_benchmark(*make(stub, cfg), records(3), params()); }) ==
          ErrorCode::AllRequestsFailed);
  }
  SUBCASE("empty split") {
    CHECK(code_of([&] { generate_benchmark(*make(stub), {}, params()); }) == ErrorCode::EmptyDataset);
  }
}

TEST_CASE("trace and replay reproduce the pairs offline") {
  testing::TempDir tmp;
  const auto trace_path = tmp.file("trace.jsonl");
  BenchmarkResult live;
  {
    testing::EchoStub stub;
    EndpointConfig cfg;
    cfg.api_key = "sk-secret-value";
    auto client = make(stub, cfg);
    client->set_trace(std::make_shared<TraceWriter>(trace_path));
    live = generate_benchmark(*client, records(6), params());
  }
  auto rows = read_jsonl(trace_path);
  CHECK(rows.size() == 6);
  for (const auto& row : rows) {
    CHECK(row.contains("request"));
    CHECK(row.contains("timestamp"));
    CHECK(row["response"]["status"] == 200);
  }
  CHECK(testing::read_file(trace_path).find("sk-secret-value") == std::string::npos);

  EndpointConfig cfg;
  cfg.retries = 0;
  Client replay(cfg, make_replay_transport(trace_path));
  auto again = generate_benchmark(replay, records(6), params());
  CHECK(again.pairs == live.pairs);

  auto other = params();
  other.temperature = 0.9;
  CHECK(code_of([&] { replay.chat({{Role::User, "instruction number 0"}}, other); }) == ErrorCode::EndpointUnreachable);
}

TEST_CASE("client is shareable across threads") {
  testing::EchoStub stub;
  EndpointConfig cfg;
  cfg.concurrency = 8;
  auto res = generate_benchmark(*make(stub, cfg), records(40), params());
  std::set<std::string> ids;
  for (const auto& p : res.pairs) ids.insert(p.record_id);
  CHECK(ids.size() == 40);
  CHECK(stub.requests == 40);
}

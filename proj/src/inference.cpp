#include "reqforge/inference.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace reqforge::inference {

std::string to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return {};
}

Role parse_role(const std::string& s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  throw Error(ErrorCode::Parse, "unknown role '" + s + "'");
}

void GenerationParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0))
    throw Error(ErrorCode::InvalidArgument, "temperature must lie in [0, 2]");
  if (max_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
}

HttpResponse Transport::post_stream(const std::string& path, const std::string& body,
                                    const std::function<bool(std::string_view)>& on_data) {
  auto resp = post(path, body);
  on_data(resp.body);
  return resp;
}

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string prefix;
};

ParsedUrl parse_base_url(std::string url) {
  while (!url.empty() && url.back() == '/') url.pop_back();
  auto scheme = url.find("://");
  auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {url, ""};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport : public Transport {
 public:
  explicit HttpTransport(EndpointConfig cfg) : cfg_(std::move(cfg)), url_(parse_base_url(cfg_.base_url)) {}

  HttpResponse post(const std::string& path, const std::string& body) override {
    auto cli = make_client();
    auto res = cli->Post(url_.prefix + path, headers(), body, "application/json");
    return convert(res);
  }

  HttpResponse post_stream(const std::string& path, const std::string& body,
                           const std::function<bool(std::string_view)>& on_data) override {
    auto cli = make_client();
    httplib::Request req;
    req.method = "POST";
    req.path = url_.prefix + path;
    req.headers = headers();
    req.body = body;
    req.set_header("Content-Type", "application/json");
    std::string error_body;
    int status = 0;
    req.response_handler = [&](const httplib::Response& r) {
      status = r.status;
      return true;
    };
    req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
      if (status >= 200 && status < 300) return on_data(std::string_view(data, len));
      error_body.append(data, len);
      return true;
    };
    auto res = cli->send(req);
    if (!res) return convert(res);
    return {res->status, error_body, res->get_header_value("Content-Type")};
  }

 private:
  std::unique_ptr<httplib::Client> make_client() const {
    auto cli = std::make_unique<httplib::Client>(url_.scheme_host_port);
    cli->set_connection_timeout(std::chrono::seconds(10));
    cli->set_read_timeout(cfg_.timeout);
    cli->set_write_timeout(cfg_.timeout);
    return cli;
  }

  httplib::Headers headers() const {
    httplib::Headers h;
    if (!cfg_.api_key.empty()) h.emplace("Authorization", "Bearer " + cfg_.api_key);
    return h;
  }

  static HttpResponse convert(const httplib::Result& res) {
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write) {
        throw Error(ErrorCode::Timeout, "request timed out or connection dropped: " + httplib::to_string(err));
      }
      throw Error(ErrorCode::EndpointUnreachable, "endpoint unreachable: " + httplib::to_string(err));
    }
    return {res->status, res->body, res->get_header_value("Content-Type")};
  }

  EndpointConfig cfg_;
  ParsedUrl url_;
};

class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(const std::string& path) {
    for (const auto& row : read_jsonl(path)) {
      const auto& resp = row.at("response");
      HttpResponse r;
      r.status = resp.at("status").get<int>();
      const auto& body = resp.at("body");
      r.body = body.is_string() ? body.get<std::string>() : body.dump();
      r.content_type = "application/json";
      recorded_[row.at("request").dump()] = std::move(r);
    }
  }

  HttpResponse post(const std::string&, const std::string& body) override {
    std::string key;
    try {
      key = json::parse(body).dump();
    } catch (const json::exception&) {
      key = body;
    }
    auto it = recorded_.find(key);
    if (it == recorded_.end()) throw Error(ErrorCode::EndpointUnreachable, "request not present in replay trace");
    return it->second;
  }

 private:
  std::unordered_map<std::string, HttpResponse> recorded_;
};

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::unique_ptr<Transport> make_http_transport(const EndpointConfig& cfg) {
  return std::make_unique<HttpTransport>(cfg);
}

std::unique_ptr<Transport> make_replay_transport(const std::string& trace_path) {
  return std::make_unique<ReplayTransport>(trace_path);
}

TraceWriter::TraceWriter(std::string path) : path_(std::move(path)) {}

void TraceWriter::record(const std::string& request_body, const HttpResponse& response) {
  json row;
  try {
    row["request"] = json::parse(request_body);
  } catch (const json::exception&) {
    row["request"] = request_body;
  }
  json body;
  try {
    body = json::parse(response.body);
  } catch (const json::exception&) {
    body = response.body;
  }
  row["response"] = {{"status", response.status}, {"body", body}};
  row["timestamp"] = utc_timestamp();
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot append to trace file " + path_);
  out << row.dump() << '\n';
}

json build_request(const std::vector<ChatMessage>& messages, const GenerationParams& params, bool stream) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  json j{{"model", params.model_id},
         {"messages", msgs},
         {"temperature", params.temperature},
         {"max_tokens", params.max_tokens}};
  if (params.seed) j["seed"] = *params.seed;
  if (stream) j["stream"] = true;
  return j;
}

std::string parse_completion(const std::string& body) {
  try {
    auto j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw Error(ErrorCode::MalformedResponse, "message content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("malformed chat completion: ") + e.what());
  }
}

Client::Client(EndpointConfig cfg, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

namespace {

void check_transcript(const std::vector<ChatMessage>& messages) {
  if (messages.empty() || messages.back().role != Role::User)
    throw Error(ErrorCode::InvalidArgument, "transcript must end with a user message");
  for (const auto& m : messages) {
    if (m.role != Role::System && normalize_text(m.content).empty())
      throw Error(ErrorCode::InvalidArgument, "user and assistant messages must be non-empty");
  }
}

}  // namespace

HttpResponse Client::send_with_retries(const std::string& body) const {
  for (int attempt = 0;; ++attempt) {
    const bool last = attempt >= cfg_.retries;
    try {
      auto resp = transport_->post("/v1/chat/completions", body);
      if (trace_) trace_->record(body, resp);
      if (resp.status >= 200 && resp.status < 300) return resp;
      if (last || !retryable_status(resp.status))
        throw Error(ErrorCode::HttpStatus, "HTTP " + std::to_string(resp.status) + ": " + resp.body);
    } catch (const Error& e) {
      bool transient = e.code() == ErrorCode::EndpointUnreachable || e.code() == ErrorCode::Timeout;
      if (last || !transient) throw;
    }
    sleeper_(cfg_.backoff_base * (1LL << attempt));
  }
}

ChatMessage Client::chat(const std::vector<ChatMessage>& messages, const GenerationParams& params) const {
  check_transcript(messages);
  params.validate();
  auto resp = send_with_retries(build_request(messages, params).dump());
  return {Role::Assistant, parse_completion(resp.body)};
}

ChatMessage Client::chat_stream(const std::vector<ChatMessage>& messages, const GenerationParams& params,
                                const std::function<void(std::string_view)>& on_chunk) const {
  check_transcript(messages);
  params.validate();
  const std::string body = build_request(messages, params, true).dump();

  std::string content, pending, raw;
  bool sse = false;
  auto handle_line = [&](std::string_view line) {
    if (line.substr(0, 5) != "data:") return;
    sse = true;
    line.remove_prefix(5);
    auto data = normalize_text(line);
    if (data.empty() || data == "[DONE]") return;
    try {
      auto j = json::parse(data);
      const auto& delta = j.at("choices").at(0).at("delta");
      if (auto it = delta.find("content"); it != delta.end() && it->is_string()) {
        auto piece = it->get<std::string>();
        content += piece;
        if (!piece.empty()) on_chunk(piece);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedResponse, std::string("malformed stream event: ") + e.what());
    }
  };

  auto resp = transport_->post_stream("/v1/chat/completions", body, [&](std::string_view data) {
    raw.append(data);
    pending.append(data);
    for (auto nl = pending.find('\n'); nl != std::string::npos; nl = pending.find('\n')) {
      handle_line(std::string_view(pending).substr(0, nl));
      pending.erase(0, nl + 1);
    }
    return true;
  });
  if (!pending.empty()) handle_line(pending);
  if (resp.status < 200 || resp.status >= 300)
    throw Error(ErrorCode::HttpStatus, "HTTP " + std::to_string(resp.status) + ": " + resp.body);
  if (trace_) trace_->record(body, {resp.status, raw, resp.content_type});
  if (!sse) {
    // Endpoint ignored "stream": a plain completion body.
    content = parse_completion(raw);
    on_chunk(content);
  }
  return {Role::Assistant, content};
}

BenchmarkResult generate_benchmark(const Client& client, const std::vector<InstructRecord>& eval_split,
                                   const GenerationParams& params) {
  if (eval_split.empty()) throw Error(ErrorCode::EmptyDataset, "evaluation split is empty");
  params.validate();

  struct Slot {
    std::optional<GenerationPair> pair;
    std::optional<RecordFailure> failure;
  };
  std::vector<Slot> slots(eval_split.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < eval_split.size(); i = next++) {
      const auto& rec = eval_split[i];
      try {
        auto reply = client.chat({{Role::User, rec.instruction}}, params);
        if (normalize_text(reply.content).empty()) throw Error(ErrorCode::MalformedResponse, "empty completion");
        slots[i].pair = GenerationPair{rec.record_id, rec.completion, reply.content, params.model_id};
      } catch (const Error& e) {
        slots[i].failure = RecordFailure{rec.record_id, e.code(), e.what()};
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, client.config().concurrency));
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(threads, eval_split.size()); ++t) pool.emplace_back(worker);
  pool.clear();

  BenchmarkResult out;
  for (auto& s : slots) {
    if (s.pair) out.pairs.push_back(std::move(*s.pair));
    if (s.failure) out.failures.push_back(std::move(*s.failure));
  }
  if (out.pairs.empty())
    throw Error(ErrorCode::AllRequestsFailed,
                "all " + std::to_string(eval_split.size()) + " requests failed; first: " + out.failures.front().message);
  return out;
}

json to_json(const RecordFailure& f) {
  return json{{"record_id", f.record_id}, {"error", std::string(reqforge::to_string(f.code))}, {"message", f.message}};
}

}  // namespace reqforge::inference

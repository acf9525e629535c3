#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "reqforge/domain.hpp"
#include "reqforge/error.hpp"

namespace reqforge::inference {

enum class Role { System, User, Assistant };

std::string to_string(Role r);
Role parse_role(const std::string& s);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct GenerationParams {
  std::string model_id;
  double temperature = 0.2;
  int max_tokens = 512;
  std::optional<std::int64_t> seed;

  /// Throws Error(InvalidArgument) unless 0 <= temperature <= 2 and max_tokens > 0.
  void validate() const;
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
};

/// Moves one JSON request body to the endpoint. Implementations throw
/// Error(EndpointUnreachable) or Error(Timeout) on transport failure and
/// return any HTTP status otherwise.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body) = 0;

  /// Streaming variant; the default posts once and delivers the whole body.
  virtual HttpResponse post_stream(const std::string& path, const std::string& body,
                                   const std::function<bool(std::string_view)>& on_data);
};

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string api_key;  // from REQFORGE_API_KEY; never written to traces
  int retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::seconds timeout{120};
  int concurrency = 4;
};

/// cpp-httplib backed transport. Thread-safe: each call opens its own client.
std::unique_ptr<Transport> make_http_transport(const EndpointConfig& cfg);

/// Serves responses recorded in a trace file, keyed by the exact request body.
/// Unknown requests yield Error(EndpointUnreachable).
std::unique_ptr<Transport> make_replay_transport(const std::string& trace_path);

/// Appends {request, response, timestamp} lines to a JSONL file.
class TraceWriter {
 public:
  explicit TraceWriter(std::string path);
  void record(const std::string& request_body, const HttpResponse& response);

 private:
  std::mutex mu_;
  std::string path_;
};

json build_request(const std::vector<ChatMessage>& messages, const GenerationParams& params, bool stream = false);
/// Extracts choices[0].message.content. Throws Error(MalformedResponse).
std::string parse_completion(const std::string& body);

class Client {
 public:
  Client(EndpointConfig cfg, std::shared_ptr<Transport> transport);

  void set_trace(std::shared_ptr<TraceWriter> trace) { trace_ = std::move(trace); }
  /// Replaces the sleep used between retries (tests pass a no-op).
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }
  const EndpointConfig& config() const { return cfg_; }

  /// Sends the transcript and returns the assistant turn. The transcript must
  /// end with a User message.
  ChatMessage chat(const std::vector<ChatMessage>& messages, const GenerationParams& params) const;

  /// Same request with "stream": true; `on_chunk` sees each content delta as
  /// it arrives. Returns the concatenated assistant turn.
  ChatMessage chat_stream(const std::vector<ChatMessage>& messages, const GenerationParams& params,
                          const std::function<void(std::string_view)>& on_chunk) const;

 private:
  HttpResponse send_with_retries(const std::string& body) const;

  EndpointConfig cfg_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<TraceWriter> trace_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
};

struct RecordFailure {
  std::string record_id;
  ErrorCode code;
  std::string message;
};

struct BenchmarkResult {
  std::vector<GenerationPair> pairs;  // eval order, failed records omitted
  std::vector<RecordFailure> failures;
};

/// Runs every eval record's instruction through the endpoint with up to
/// cfg.concurrency requests in flight. Throws Error(AllRequestsFailed) if
/// nothing succeeded.
BenchmarkResult generate_benchmark(const Client& client, const std::vector<InstructRecord>& eval_split,
                                   const GenerationParams& params);

json to_json(const RecordFailure& f);

}  // namespace reqforge::inference

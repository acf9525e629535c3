// Shared test fixtures: scratch directories and an in-process chat endpoint.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("reqforge-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string completion_body(const std::string& content) {
  nlohmann::json j{{"id", "stub"},
                   {"object", "chat.completion"},
                   {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}};
  return j.dump();
}

/// OpenAI-style chat endpoint on 127.0.0.1 that echoes the last user turn.
/// `fail` may return a status code (non-zero) to reject a request.
class EchoStub {
 public:
  std::function<int(const std::string& last_user)> fail;
  std::atomic<int> requests{0};
  std::string last_authorization;

  EchoStub() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      last_authorization = req.get_header_value("Authorization");
      auto body = nlohmann::json::parse(req.body);
      std::string last;
      for (const auto& m : body.at("messages"))
        if (m.at("role") == "user") last = m.at("content").get<std::string>();
      if (fail) {
        if (int status = fail(last); status != 0) {
          res.status = status;
          res.set_content(R"({"error":"stub failure"})", "application/json");
          return;
        }
      }
      if (body.value("stream", false)) {
        // One SSE event per word, then [DONE].
        std::string events;
        std::istringstream words(last);
        std::string w;
        bool first = true;
        while (words >> w) {
          nlohmann::json chunk{{"choices", {{{"index", 0}, {"delta", {{"content", (first ? "" : " ") + w}}}}}}};
          events += "data: " + chunk.dump() + "\n\n";
          first = false;
        }
        events += "data: [DONE]\n\n";
        res.set_content(events, "text/event-stream");
        return;
      }
      res.set_content(completion_body(last), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~EchoStub() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace testing

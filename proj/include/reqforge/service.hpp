#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "reqforge/inference.hpp"
#include "reqforge/study.hpp"

namespace httplib {
class Server;
}

namespace reqforge::service {

/// Builds a study from a POST /api/studies body. Shared with `study build`.
study::BuiltStudy build_study_from_json(const json& body);

struct ServiceOptions {
  std::string app_dir;  // static UI bundle mounted at /app when non-empty
  study::AnalysisOptions analysis;
  inference::GenerationParams chat_params;
};

/// REST surface for the study workflow and chat sessions.
///
///   POST /api/studies                     build a packet (key stays on disk)
///   GET  /api/studies/{id}/items?rater=   blinded items for an allocated rater
///   POST /api/studies/{id}/responses      one ResponseRecord
///   GET  /api/studies/{id}/analysis       run and return the analysis
///   POST /api/sessions                    open a chat session
///   POST /api/sessions/{id}/messages      chunked assistant reply
///   GET  /api/sessions/{id}               transcript
class Service {
 public:
  Service(std::shared_ptr<study::StudyStore> store, std::shared_ptr<const inference::Client> client,
          ServiceOptions opts = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  /// bind + listen on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Session {
    std::mutex mu;
    std::vector<inference::ChatMessage> transcript;
  };

  void routes();
  std::shared_ptr<Session> session(const std::string& id);

  std::shared_ptr<study::StudyStore> store_;
  std::shared_ptr<const inference::Client> client_;
  ServiceOptions opts_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> next_session_{1};
};

}  // namespace reqforge::service

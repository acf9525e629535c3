#include "reqforge/service.hpp"

#include <filesystem>

#include "httplib.h"

namespace reqforge::service {

namespace {

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownStudy: return 404;
    case ErrorCode::DuplicateResponse: return 409;
    case ErrorCode::DomainViolation:
    case ErrorCode::LengthMismatch:
    case ErrorCode::InvalidArgument:
    case ErrorCode::Validation:
    case ErrorCode::MissingResponses: return 422;
    case ErrorCode::Parse: return 400;
    case ErrorCode::EndpointUnreachable:
    case ErrorCode::Timeout:
    case ErrorCode::HttpStatus:
    case ErrorCode::MalformedResponse: return 502;
    default: return 500;
  }
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  reply_json(res, status, json{{"error", std::string(code)}, {"message", message}});
}

// Runs a handler, translating exceptions into JSON error bodies.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    reply_error(res, http_status_for(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    reply_error(res, 400, "E_PARSE", e.what());
  }
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("request body is not JSON: ") + e.what());
  }
}

std::vector<study::SourceText> source_texts(const json& arr) {
  std::vector<study::SourceText> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& e = arr[i];
    if (e.is_string()) out.push_back({std::to_string(i + 1), e.get<std::string>()});
    else out.push_back({e.at("id").get<std::string>(), e.at("text").get<std::string>()});
  }
  return out;
}

json items_payload(const study::StudyPacket& p) {
  json items = json::array();
  for (const auto& i : p.items) items.push_back(study::to_json(i));
  json vars = json::array();
  for (auto v : study::task_variables(p.task)) vars.push_back(study::to_string(v));
  return json{{"study_id", p.study_id}, {"task", study::to_string(p.task)}, {"variables", vars}, {"items", items}};
}

json transcript_json(const std::vector<inference::ChatMessage>& t) {
  json arr = json::array();
  for (const auto& m : t) arr.push_back({{"role", inference::to_string(m.role)}, {"content", m.content}});
  return arr;
}

}  // namespace

study::BuiltStudy build_study_from_json(const json& body) {
  try {
    const auto task = study::parse_study_task(body.at("task").get<std::string>());
    const auto id = body.at("study_id").get<std::string>();
    const auto seed = body.value("seed", std::uint64_t{0});
    study::BuiltStudy built;
    switch (task) {
      case study::StudyTask::BlindCompareB: {
        auto labels = body.value("labels", std::vector<std::string>{"ReqBrain", "Baseline"});
        if (labels.size() != 2) throw Error(ErrorCode::InvalidArgument, "labels must name exactly two groups");
        built = study::build_blind_compare(id, source_texts(body.at("a_outputs")), source_texts(body.at("b_outputs")),
                                           seed, labels[0], labels[1]);
        break;
      }
      case study::StudyTask::BlindPairC:
        built = study::build_blind_pair(id, source_texts(body.at("generated")), source_texts(body.at("references")),
                                        seed);
        break;
      case study::StudyTask::InContextD: {
        std::vector<study::ProjectPacket> projects;
        for (const auto& p : body.at("projects"))
          projects.push_back({p.value("project", ""), p.at("instructions").get<std::string>(),
                              p.at("generated").get<std::vector<std::string>>()});
        built = study::build_in_context(id, projects);
        break;
      }
      case study::StudyTask::BenchmarkA: {
        std::vector<GenerationPair> pairs;
        for (const auto& p : body.at("pairs")) pairs.push_back(generation_pair_from_json(p));
        built = study::build_benchmark(id, pairs);
        break;
      }
    }
    built.packet.raters = body.value("raters", std::vector<std::string>{});
    return built;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad study request: ") + e.what());
  }
}

Service::Service(std::shared_ptr<study::StudyStore> store, std::shared_ptr<const inference::Client> client,
                 ServiceOptions opts)
    : store_(std::move(store)),
      client_(std::move(client)),
      opts_(std::move(opts)),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

Service::~Service() { stop(); }

std::shared_ptr<Service::Session> Service::session(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void Service::routes() {
  auto& s = *server_;

  s.Post("/api/studies", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto built = build_study_from_json(parse_body(req));
      store_->create(built);
      reply_json(res, 201, json{{"study_id", built.packet.study_id},
                                {"task", study::to_string(built.packet.task)},
                                {"items", built.packet.items.size()}});
    });
  });

  s.Get(R"(/api/studies/([A-Za-z0-9_-]+)/items)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto packet = store_->packet(req.matches[1]);
      const auto rater = req.get_param_value("rater");
      if (rater.empty()) return reply_error(res, 400, "E_USAGE", "rater query parameter is required");
      if (!packet.rater_allowed(rater))
        return reply_error(res, 403, "E_DOMAIN_VIOLATION", "rater '" + rater + "' is not allocated to this study");
      reply_json(res, 200, items_payload(packet));
    });
  });

  s.Post(R"(/api/studies/([A-Za-z0-9_-]+)/responses)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = parse_body(req);
      body["study_id"] = std::string(req.matches[1]);
      auto r = study::response_from_json(body);
      store_->record_response(r);
      reply_json(res, 201, json{{"ok", true}});
    });
  });

  s.Get(R"(/api/studies/([A-Za-z0-9_-]+)/analysis)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply_json(res, 200, store_->analyze(req.matches[1], opts_.analysis)); });
  });

  s.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto sess = std::make_shared<Session>();
      if (!req.body.empty()) {
        auto body = parse_body(req);
        if (auto it = body.find("system"); it != body.end() && it->is_string())
          sess->transcript.push_back({inference::Role::System, it->get<std::string>()});
      }
      const auto id = "s" + std::to_string(next_session_++);
      {
        std::lock_guard lock(sessions_mu_);
        sessions_[id] = sess;
      }
      reply_json(res, 201, json{{"session_id", id}});
    });
  });

  s.Get(R"(/api/sessions/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto sess = session(req.matches[1]);
    if (!sess) return reply_error(res, 404, "E_UNKNOWN_SESSION", "no such session");
    std::lock_guard lock(sess->mu);
    reply_json(res, 200, json{{"session_id", std::string(req.matches[1])}, {"messages", transcript_json(sess->transcript)}});
  });

  s.Post(R"(/api/sessions/([A-Za-z0-9_-]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto sess = session(req.matches[1]);
      if (!sess) return reply_error(res, 404, "E_UNKNOWN_SESSION", "no such session");
      if (!client_) return reply_error(res, 503, "E_ENDPOINT_UNREACHABLE", "no model endpoint configured");
      auto body = parse_body(req);
      auto content = normalize_text(body.at("content").get<std::string>());
      if (content.empty()) return reply_error(res, 422, "E_INVALID_ARGUMENT", "message content is empty");

      res.set_chunked_content_provider("text/plain; charset=utf-8", [this, sess, content](size_t, httplib::DataSink& sink) {
        std::lock_guard lock(sess->mu);
        auto transcript = sess->transcript;
        transcript.push_back({inference::Role::User, content});
        try {
          auto reply = client_->chat_stream(transcript, opts_.chat_params,
                                            [&](std::string_view piece) { sink.write(piece.data(), piece.size()); });
          transcript.push_back(std::move(reply));
          sess->transcript = std::move(transcript);
        } catch (const Error& e) {
          std::string msg = "\n[error " + std::string(to_string(e.code())) + "] " + e.what();
          sink.write(msg.data(), msg.size());
        }
        sink.done();
        return true;
      });
    });
  });

  if (!opts_.app_dir.empty() && std::filesystem::is_directory(opts_.app_dir))
    s.set_mount_point("/app", opts_.app_dir);
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port))
    throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Service::listen() { server_->listen_after_bind(); }

int Service::start(const std::string& host, int port) {
  int bound = bind(host, port);
  if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host);
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
  return bound;
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace reqforge::service

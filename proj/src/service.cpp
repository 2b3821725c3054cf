#include "datalabel/service.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <set>

#include <unistd.h>

#include "httplib.h"

namespace datalabel {
namespace {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kEmptyText:
    case ErrorCode::kConfig: return 400;
    case ErrorCode::kUnknownRecord: return 404;
    case ErrorCode::kAlreadyLabeled:
    case ErrorCode::kNoSession: return 409;
    case ErrorCode::kIo:
    case ErrorCode::kVersionMismatch:
    case ErrorCode::kNumeric: return 500;
  }
  return 500;
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  res.status = status;
  res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& body) {
  res.status = 200;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed JSON body: ") + e.what());
  }
}

template <class T>
T field(const json& j, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("field '") + name + "' missing or of the wrong type");
  }
}

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(ErrorCode::kConfig, std::string("unknown field '") + key + "' in " + where);
    }
  }
}

template <class T>
void read_opt(const json& j, const char* name, T& out) {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kConfig, std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw Error(ErrorCode::kConfig, "port out of range: " + std::to_string(port));
  if (session_path.empty()) throw Error(ErrorCode::kConfig, "session path is empty");
  if (max_request_bytes == 0) throw Error(ErrorCode::kConfig, "request size limit must be positive");
  namespace fs = std::filesystem;
  fs::path dir = fs::path(session_path).parent_path();
  if (dir.empty()) dir = ".";
  if (::access(dir.c_str(), W_OK) != 0) {
    throw Error(ErrorCode::kConfig, "session directory not writable: " + dir.string());
  }
  if (fs::exists(session_path) && ::access(session_path.c_str(), W_OK) != 0) {
    throw Error(ErrorCode::kConfig, "session file not writable: " + session_path);
  }
}

SessionConfig session_config_from_json(const json& j) {
  SessionConfig c;
  if (j.is_null()) return c;
  check_keys(j, "config",
             {"kind", "tokenizer", "bpe_vocab_size", "lowercase", "pair_delimiter", "attribute_value_separator",
              "attribute_tag_delimiter", "k", "seed", "retrain_interval", "replay_per_run", "strategy", "background_training",
              "model", "training", "thresholds", "msttr_segment"});
  if (j.contains("kind")) {
    const auto kind = field<std::string>(j, "kind");
    if (kind == "graph") {
      c.kind = RecordKind::kGraph;
    } else if (kind == "attribute_value") {
      c.kind = RecordKind::kAttributeValue;
    } else {
      throw Error(ErrorCode::kConfig, "unknown record kind: " + kind);
    }
  }
  if (j.contains("tokenizer")) c.tokenizer.mode = parse_tokenizer_mode(field<std::string>(j, "tokenizer"));
  read_opt(j, "bpe_vocab_size", c.tokenizer.bpe_vocab_size);
  read_opt(j, "lowercase", c.tokenizer.lowercase);
  read_opt(j, "pair_delimiter", c.delimiters.pair_delimiter);
  read_opt(j, "attribute_value_separator", c.delimiters.attribute_value_separator);
  read_opt(j, "attribute_tag_delimiter", c.delimiters.attribute_tag_delimiter);
  read_opt(j, "k", c.k);
  read_opt(j, "seed", c.seed);
  read_opt(j, "retrain_interval", c.retrain_interval);
  read_opt(j, "replay_per_run", c.replay_per_run);
  if (j.contains("strategy")) c.strategy = parse_strategy(field<std::string>(j, "strategy"));
  read_opt(j, "background_training", c.background_training);
  read_opt(j, "msttr_segment", c.msttr_segment);
  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, "model", {"model_dim", "layers", "heads", "ff_dim", "max_len"});
    read_opt(m, "model_dim", c.model.model_dim);
    read_opt(m, "layers", c.model.layers);
    read_opt(m, "heads", c.model.heads);
    read_opt(m, "ff_dim", c.model.ff_dim);
    read_opt(m, "max_len", c.model.max_len);
  }
  if (j.contains("training")) {
    const auto& t = j.at("training");
    check_keys(t, "training",
               {"learning_rate", "batch_size", "epochs", "clip_norm", "seed", "unlabeled_per_epoch"});
    read_opt(t, "learning_rate", c.training.learning_rate);
    read_opt(t, "batch_size", c.training.batch_size);
    read_opt(t, "epochs", c.training.epochs);
    read_opt(t, "clip_norm", c.training.clip_norm);
    read_opt(t, "seed", c.training.seed);
    read_opt(t, "unlabeled_per_epoch", c.training.unlabeled_per_epoch);
  }
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    check_keys(t, "thresholds", {"min_labeled", "min_msttr", "min_ttr"});
    if (t.contains("min_labeled")) c.thresholds.min_labeled = field<std::uint64_t>(t, "min_labeled");
    if (t.contains("min_msttr")) c.thresholds.min_msttr = field<double>(t, "min_msttr");
    if (t.contains("min_ttr")) c.thresholds.min_ttr = field<double>(t, "min_ttr");
  }
  c.validate();
  return c;
}

json stats_json(const Session& session) {
  json out = json::object();
  for (const auto& [key, value] : flatten(session.quality())) {
    out[key] = value ? json(*value) : json(nullptr);
  }
  const auto status = session.training_status();
  out["unlabeled_count"] = session.unlabeled_count();
  out["training.phase"] = training_phase_name(status.phase);
  out["training.progress"] = status.progress;
  out["training.model_version"] = status.model_version;
  out["training.completed_runs"] = status.completed_runs;
  out["training.labels_since_training"] = status.labels_since_training;
  if (!status.failure.empty()) out["training.failure"] = status.failure;
  const auto stop = session.stop_decision();
  out["stop"] = stop.stop;
  out["stop.reasons"] = stop.reasons;
  return out;
}

Service::Service(ServiceConfig config) : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  config_.validate();
  if (std::filesystem::exists(config_.session_path)) session_.emplace(Session::load(config_.session_path));
  install_routes();
}

Service::~Service() { stop(); }

void Service::bind() {
  if (port_ >= 0) return;
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.bind_address);
  } else if (server_->bind_to_port(config_.bind_address, config_.port)) {
    port_ = config_.port;
  }
  if (port_ < 0) {
    throw Error(ErrorCode::kIo,
                "cannot bind " + config_.bind_address + ":" + std::to_string(config_.port));
  }
}

void Service::listen() {
  bind();
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

Session& Service::require_session() {
  if (!session_) throw Error(ErrorCode::kNoSession, "no corpus uploaded");
  return *session_;
}

void Service::persist() { session_->save(config_.session_path); }

void Service::install_routes() {
  auto& srv = *server_;
  srv.set_payload_max_length(config_.max_request_bytes);
  // Without SO_REUSEPORT so that a second instance on a busy port fails to bind.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });

  const std::set<std::string> origins(config_.cors_origins.begin(), config_.cors_origins.end());
  srv.set_post_routing_handler([origins](const httplib::Request& req, httplib::Response& res) {
    const auto origin = req.get_header_value("Origin");
    if (origin.empty()) return;
    if (origins.count("*")) {
      res.set_header("Access-Control-Allow-Origin", "*");
    } else if (origins.count(origin)) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Vary", "Origin");
    } else {
      return;
    }
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_error(res, 404, "not_found", "no such endpoint");
    } else if (res.status == 413) {
      send_error(res, 413, "payload_too_large", "request body exceeds the size limit");
    } else {
      send_error(res, res.status, "http_error", httplib::status_message(res.status));
    }
  });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    } catch (...) {
      send_error(res, 500, "internal", "unknown failure");
    }
  });

  srv.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    json body{{"status", "ok"}, {"session", session_.has_value()}, {"labeled_count", 0}};
    if (session_) {
      session_->poll_training();
      body["labeled_count"] = session_->labeled_count();
      body["record_count"] = session_->corpus().size();
    }
    send_json(res, body);
  });

  srv.Post("/corpus", [this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "body must be an object");
    check_keys(body, "request", {"corpus", "config"});
    const auto text = field<std::string>(body, "corpus");
    const auto config = session_config_from_json(body.value("config", json()));
    Session fresh = Session::create(text, config);
    std::lock_guard lock(mutex_);
    session_.reset();
    session_.emplace(std::move(fresh));
    persist();
    send_json(res, {{"record_count", session_->corpus().size()},
                    {"groups", session_->index().groups.size()},
                    {"clusters", session_->index().subcluster_count()},
                    {"kind", record_kind_name(session_->corpus().kind())}});
  });

  srv.Get("/batch", [this](const httplib::Request& req, httplib::Response& res) {
    int size = 20;
    if (req.has_param("size")) {
      const auto raw = req.get_param_value("size");
      try {
        std::size_t used = 0;
        size = std::stoi(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, "size must be an integer: " + raw);
      }
    }
    std::lock_guard lock(mutex_);
    auto& session = require_session();
    const Batch batch = session.request_batch(size);
    persist();
    json items = json::array();
    for (const auto& item : batch.items) {
      const auto& record = session.corpus().at(item.id);
      items.push_back({{"id", item.id},
                       {"data", format_record_data(record, session.config().delimiters)},
                       {"signature", session.signature(item.id)},
                       {"suggestion", item.suggestion ? json(item.suggestion->text) : json(nullptr)}});
    }
    send_json(res, {{"batch", items}});
  });

  srv.Post("/labels", [this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "body must be an object");
    const auto id = field<RecordId>(body, "id");
    const auto text = field<std::string>(body, "text");
    std::lock_guard lock(mutex_);
    auto& session = require_session();
    const LabelSource source = session.submit_label(id, text);
    persist();
    send_json(res, {{"id", id}, {"source", label_source_name(source)}, {"labeled_count", session.labeled_count()}});
  });

  srv.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    auto& session = require_session();
    session.poll_training();
    send_json(res, stats_json(session));
  });

  srv.Post("/train", [this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    auto& session = require_session();
    const bool started = session.start_training();
    persist();
    const auto status = session.training_status();
    send_json(res, {{"started", started}, {"phase", training_phase_name(status.phase)}});
  });

  srv.Get("/export", [this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    auto& session = require_session();
    session.poll_training();
    res.set_content(session.export_records_text(), "text/plain; charset=utf-8");
  });

  srv.Get("/export/stats", [this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    auto& session = require_session();
    session.poll_training();
    res.set_content(session.export_stats_text(), "text/plain; charset=utf-8");
  });
}

namespace {
Service* g_running = nullptr;
extern "C" void handle_stop_signal(int) {
  if (g_running) g_running->stop();
}
}  // namespace

void serve(Service& service) {
  service.bind();
  g_running = &service;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  service.listen();
  g_running = nullptr;
}

}  // namespace datalabel

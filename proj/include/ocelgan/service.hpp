// Copyright 2026 The ocelgan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// HTTP service over the operations in app.hpp.
//
// State lives under a data directory:
//
//   logs/<hash>/log.json       canonical OCEL export of an uploaded log
//   models/<id>/               model directories (see model_store.hpp)
//   cache/<key>.bundle         dataset bundle cache
//
// Log ids are content hashes of the canonical export, model ids hash the
// training request, so identical inputs map to identical paths. One
// training job runs at a time; a second request while it runs gets 409.

#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

// Before httplib: <resolv.h> defines a `_res` macro that clashes with Eigen.
#include "ocelgan/app.hpp"

#include <httplib.h>

namespace ocelgan::service {

namespace fs = std::filesystem;

struct ServiceConfig {
  fs::path data_dir = "ocelgan-data";
  std::string host = "127.0.0.1";
  int port = 8080;

  /// OCELGAN_DATA_DIR and OCELGAN_PORT override the defaults.
  static ServiceConfig from_env() {
    ServiceConfig c;
    if (const char* d = std::getenv("OCELGAN_DATA_DIR")) c.data_dir = d;
    if (const char* p = std::getenv("OCELGAN_PORT")) c.port = std::atoi(p);
    if (const char* h = std::getenv("OCELGAN_HOST")) c.host = h;
    return c;
  }
};

inline int http_status(const std::string& code) {
  static const std::map<std::string, int> kStatus = {
      {errc::kMalformedJson, 400},          {errc::kMissingRequiredKey, 400},
      {errc::kDanglingObjectReference, 400}, {errc::kUnparseableTimestamp, 400},
      {errc::kInvalidLog, 400},             {errc::kBadRequest, 400},
      {errc::kNotFound, 404},               {errc::kConflict, 409},
      {errc::kUnknownObjectType, 422},      {errc::kInvalidConfig, 422},
      {errc::kTooFewCases, 422},            {errc::kEmptyInput, 422},
      {errc::kUnknownActivity, 422},        {errc::kEmptyPrefix, 422},
      {errc::kInvalidPrefix, 422},          {errc::kCaseTooShort, 422},
      {errc::kNegativeElapsed, 422}};
  auto it = kStatus.find(code);
  return it == kStatus.end() ? 500 : it->second;
}

enum class JobStatus { kQueued, kRunning, kDone, kFailed };

inline const char* to_string(JobStatus s) {
  switch (s) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "unknown";
}

struct JobRecord {
  std::string job_id;
  JobStatus status = JobStatus::kQueued;
  std::string log_id;
  app::TrainRequest request;
  std::string model_id;
  std::vector<gan::EpochRecord> progress;
  std::optional<nlohmann::json> result;
  std::optional<nlohmann::json> error;

  nlohmann::json to_json() const {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& r : progress) {
      nlohmann::json h = {{"epoch", r.epoch}, {"loss_d", r.loss_d}, {"loss_g", r.loss_g}};
      if (r.val_similarity) {
        h["val_similarity"] = *r.val_similarity;
        h["val_mae"] = *r.val_mae;
      }
      hist.push_back(h);
    }
    nlohmann::json j = {{"job_id", job_id},
                        {"kind", "train"},
                        {"status", to_string(status)},
                        {"log_id", log_id},
                        {"object_type", request.object_type},
                        {"attrs", request.attributes},
                        {"config", request.config},
                        {"progress", {{"epoch", progress.empty() ? 0 : progress.back().epoch},
                                      {"epochs", request.config.epochs},
                                      {"history", hist}}},
                        {"model_id", status == JobStatus::kDone ? nlohmann::json(model_id) : nlohmann::json(nullptr)}};
    j["result"] = result ? *result : nlohmann::json(nullptr);
    j["error"] = error ? *error : nlohmann::json(nullptr);
    return j;
  }
};

inline nlohmann::json openapi_spec();

class Service {
 public:
  explicit Service(ServiceConfig config) : config_(std::move(config)) {
    fs::create_directories(config_.data_dir / "logs");
    fs::create_directories(config_.data_dir / "models");
    fs::create_directories(config_.data_dir / "cache");
    routes();
  }

  ~Service() {
    stop();
    cancel_ = true;
    if (worker_.joinable()) worker_.join();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  httplib::Server& server() { return server_; }

  /// Binds and serves until stop(); returns false if the port is unavailable.
  bool listen() { return server_.listen(config_.host, config_.port); }

  /// Binds an ephemeral port and returns it, for tests.
  int bind_any_port() { return server_.bind_to_any_port(config_.host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

  /// Blocks until no training job is running.
  void wait_for_jobs() {
    if (worker_.joinable()) worker_.join();
  }

  // Operations, callable without HTTP.

  std::string put_log(const std::string& body) {
    auto log = import_ocel_json(body);
    auto canonical = export_ocel_json(log);
    auto id = io::fnv1a_hex(canonical);
    auto path = config_.data_dir / "logs" / id / "log.json";
    if (!fs::exists(path)) io::atomic_write_file(path, canonical);
    return id;
  }

  OcelLog get_log(const std::string& id) const {
    auto path = config_.data_dir / "logs" / id / "log.json";
    if (!valid_id(id) || !fs::exists(path)) {
      throw Error(errc::kNotFound, "no log with id " + id, {{"log_id", id}});
    }
    return import_ocel_json(io::read_file(path));
  }

  std::string start_training(const nlohmann::json& body) {
    if (!body.is_object()) throw Error(errc::kBadRequest, "training request must be a JSON object");
    for (const char* k : {"log_id", "object_type"}) {
      if (!body.contains(k) || !body.at(k).is_string()) {
        throw Error(errc::kMissingRequiredKey, std::string("training request needs string '") + k + "'",
                    {{"key", k}});
      }
    }
    app::TrainRequest req;
    req.object_type = body.at("object_type").get<std::string>();
    try {
      if (body.contains("attrs")) body.at("attrs").get_to(req.attributes);
      if (body.contains("config")) body.at("config").get_to(req.config);
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::kInvalidConfig, std::string("bad training request: ") + e.what());
    }
    req.config.validate();
    auto log_id = body.at("log_id").get<std::string>();
    auto log = get_log(log_id);
    app::check_attributes(log, req);

    std::lock_guard lock(mu_);
    if (running_) {
      throw Error(errc::kConflict, "a training job is already running", {{"job_id", active_job_}});
    }
    if (worker_.joinable()) worker_.join();
    auto job_id = "job-" + std::to_string(++job_counter_);
    JobRecord rec;
    rec.job_id = job_id;
    rec.log_id = log_id;
    rec.request = req;
    rec.model_id = model_id_for(log_id, req);
    jobs_[job_id] = rec;
    running_ = true;
    active_job_ = job_id;
    worker_ = std::thread([this, job_id, log = std::move(log), log_id, req, model_id = rec.model_id] {
      run_job(job_id, log, log_id, req, model_id);
    });
    return job_id;
  }

  nlohmann::json job(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(errc::kNotFound, "no training job " + id, {{"job_id", id}});
    return it->second.to_json();
  }

  LoadedModel load(const std::string& model_id) const {
    auto dir = config_.data_dir / "models" / model_id;
    if (!valid_id(model_id) || !fs::exists(dir / "model.json")) {
      throw Error(errc::kNotFound, "no model with id " + model_id, {{"model_id", model_id}});
    }
    std::lock_guard lock(model_io_mu_);
    return load_model(dir);
  }

  nlohmann::json models() const {
    nlohmann::json out = nlohmann::json::array();
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(config_.data_dir / "models")) {
      if (fs::exists(e.path() / "model.json")) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    std::lock_guard lock(model_io_mu_);
    for (const auto& d : dirs) {
      auto s = nlohmann::json::parse(io::read_file(d / "model.json"));
      out.push_back({{"model_id", d.filename().string()},
                     {"object_type", s.at("object_type")},
                     {"attributes", s.at("attributes")},
                     {"log_id", s.value("log_hash", "")},
                     {"best_epoch", s.at("best_epoch")},
                     {"val_similarity", s.at("val_similarity")},
                     {"val_mae", s.at("val_mae")}});
    }
    return out;
  }

 private:
  static bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
  }

  static std::string model_id_for(const std::string& log_id, const app::TrainRequest& req) {
    nlohmann::json key = {{"log_id", log_id}, {"object_type", req.object_type},
                          {"attrs", req.attributes}, {"config", req.config}};
    return io::fnv1a_hex(key.dump());
  }

  void run_job(const std::string& job_id, const OcelLog& log, const std::string& log_id,
               const app::TrainRequest& req, const std::string& model_id) {
    {
      std::lock_guard lock(mu_);
      jobs_[job_id].status = JobStatus::kRunning;
    }
    try {
      auto outcome = app::train_model(log, log_id, req, config_.data_dir / "models" / model_id,
                                      config_.data_dir / "cache", [&](const gan::EpochRecord& r) {
                                        if (cancel_) throw Error("Cancelled", "service shutting down");
                                        std::lock_guard lock(mu_);
                                        jobs_[job_id].progress.push_back(r);
                                      });
      std::lock_guard lock(mu_);
      jobs_[job_id].status = JobStatus::kDone;
      jobs_[job_id].result = outcome.summary;
    } catch (const Error& e) {
      std::lock_guard lock(mu_);
      jobs_[job_id].status = JobStatus::kFailed;
      jobs_[job_id].error = app::error_json(e);
    } catch (const std::exception& e) {
      std::lock_guard lock(mu_);
      jobs_[job_id].status = JobStatus::kFailed;
      jobs_[job_id].error = nlohmann::json{{"code", "Internal"}, {"message", e.what()}, {"details", nlohmann::json::object()}};
    }
    std::lock_guard lock(mu_);
    running_ = false;
    active_job_.clear();
  }

  static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, const Error& e) {
    send_json(res, http_status(e.code()), app::error_json(e));
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(errc::kMalformedJson, std::string("request body is not JSON: ") + e.what());
    }
  }

  /// Runs a handler, turning library errors into structured responses.
  template <typename F>
  static httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_json(res, 500, {{"code", "Internal"}, {"message", e.what()}, {"details", nlohmann::json::object()}});
      }
    };
  }

  void routes() {
    auto& s = server_;
    s.Get("/spec", guarded([](const httplib::Request&, httplib::Response& res) { send_json(res, 200, openapi_spec()); }));

    s.Post("/logs", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto id = put_log(req.body);
      auto log = get_log(id);
      send_json(res, 201, {{"log_id", id},
                           {"events", log.events.size()},
                           {"objects", log.objects.size()},
                           {"object_types", log.object_types}});
    }));

    s.Get(R"(/logs/([^/]+)/stats)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto log = get_log(req.matches[1]);
      std::optional<std::string> type;
      if (req.has_param("object_type")) type = req.get_param_value("object_type");
      send_json(res, 200, app::stats_json(log, type));
    }));

    s.Get(R"(/logs/([^/]+)/relations)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, app::relations_json(get_log(req.matches[1])));
    }));

    s.Get(R"(/logs/([^/]+)/attributes)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("object_type")) {
        throw Error(errc::kMissingRequiredKey, "query parameter object_type is required", {{"key", "object_type"}});
      }
      send_json(res, 200, app::object_attributes_json(get_log(req.matches[1]), req.get_param_value("object_type")));
    }));

    s.Post("/trainings", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto id = start_training(parse_body(req));
      send_json(res, 202, {{"job_id", id}});
    }));

    s.Get(R"(/trainings/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, job(req.matches[1]));
    }));

    s.Get("/models", guarded([this](const httplib::Request&, httplib::Response& res) { send_json(res, 200, models()); }));

    s.Get(R"(/models/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, load(req.matches[1]).sidecar);
    }));

    s.Post(R"(/models/([^/]+)/predict)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto model = load(req.matches[1]);
      send_json(res, 200, app::predict_json(model, app::parse_prefix(parse_body(req))));
    }));

    s.Post(R"(/models/([^/]+)/evaluate)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req);
      if (!body.is_object() || !body.contains("log_id") || !body.at("log_id").is_string()) {
        throw Error(errc::kMissingRequiredKey, "evaluate request needs string 'log_id'", {{"key", "log_id"}});
      }
      auto model = load(req.matches[1]);
      auto log = get_log(body.at("log_id").get<std::string>());
      auto split = body.value("split", std::string("test"));
      send_json(res, 200, app::eval_json(app::evaluate_on_log(model, log, split)));
    }));

    // Unrouted requests still get a structured body.
    s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      std::string code = res.status == 404 ? errc::kNotFound : errc::kBadRequest;
      res.set_content(nlohmann::json{{"code", code},
                                     {"message", "no route for " + req.method + " " + req.path},
                                     {"details", {{"path", req.path}}}}
                          .dump(),
                      "application/json");
    });
    s.set_payload_max_length(256 * 1024 * 1024);
  }

  ServiceConfig config_;
  httplib::Server server_;
  mutable std::mutex mu_;
  mutable std::mutex model_io_mu_;
  std::map<std::string, JobRecord> jobs_;
  std::size_t job_counter_ = 0;
  bool running_ = false;
  std::string active_job_;
  std::thread worker_;
  std::atomic<bool> cancel_ = false;
};

inline nlohmann::json openapi_spec() {
  auto error_ref = nlohmann::json{{"$ref", "#/components/schemas/Error"}};
  auto json_response = [&](const char* description, nlohmann::json schema) {
    return nlohmann::json{{"description", description},
                          {"content", {{"application/json", {{"schema", std::move(schema)}}}}}};
  };
  auto err = [&](const char* d) { return json_response(d, error_ref); };
  auto obj = nlohmann::json{{"type", "object"}};
  auto path_id = [](const char* name) {
    return nlohmann::json{{"name", name}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}};
  };
  auto object_type_q = [](bool required) {
    return nlohmann::json{{"name", "object_type"}, {"in", "query"}, {"required", required},
                          {"schema", {{"type", "string"}}}};
  };
  nlohmann::json paths;
  paths["/logs"]["post"] = {{"summary", "Upload an OCEL JSON log"},
                            {"requestBody", {{"required", true}, {"content", {{"application/json", {{"schema", obj}}}}}}},
                            {"responses", {{"201", json_response("Stored", {{"$ref", "#/components/schemas/LogCreated"}})},
                                           {"400", err("Validation error")}}}};
  paths["/logs/{id}/stats"]["get"] = {{"summary", "Case statistics per object type, after outlier trimming"},
                                      {"parameters", {path_id("id"), object_type_q(false)}},
                                      {"responses", {{"200", json_response("Statistics", obj)},
                                                     {"404", err("Unknown log")},
                                                     {"422", err("Unknown object type")}}}};
  paths["/logs/{id}/relations"]["get"] = {{"summary", "Activities related to each object type"},
                                          {"parameters", {path_id("id")}},
                                          {"responses", {{"200", json_response("Relations", obj)},
                                                         {"404", err("Unknown log")}}}};
  paths["/logs/{id}/attributes"]["get"] = {{"summary", "Object attributes of one object type"},
                                           {"parameters", {path_id("id"), object_type_q(true)}},
                                           {"responses", {{"200", json_response("Attributes", obj)},
                                                          {"404", err("Unknown log")},
                                                          {"422", err("Unknown object type")}}}};
  paths["/trainings"]["post"] = {
      {"summary", "Start the training job"},
      {"requestBody", {{"required", true},
                       {"content", {{"application/json", {{"schema", {{"$ref", "#/components/schemas/TrainingRequest"}}}}}}}}},
      {"responses", {{"202", json_response("Started", {{"type", "object"}, {"properties", {{"job_id", {{"type", "string"}}}}}})},
                     {"404", err("Unknown log")},
                     {"409", err("A job is already running")},
                     {"422", err("Invalid configuration")}}}};
  paths["/trainings/{id}"]["get"] = {{"summary", "Job status and per-epoch progress"},
                                     {"parameters", {path_id("id")}},
                                     {"responses", {{"200", json_response("Job", {{"$ref", "#/components/schemas/JobRecord"}})},
                                                    {"404", err("Unknown job")}}}};
  paths["/models"]["get"] = {{"summary", "Trained models with validation metrics at their checkpoint"},
                             {"responses", {{"200", json_response("Models", {{"type", "array"}, {"items", obj}})}}}};
  paths["/models/{id}"]["get"] = {{"summary", "Model metadata, including its encoding schema"},
                                  {"parameters", {path_id("id")}},
                                  {"responses", {{"200", json_response("Model", obj)}, {"404", err("Unknown model")}}}};
  paths["/models/{id}/predict"]["post"] = {
      {"summary", "Predict the remaining events of a case"},
      {"parameters", {path_id("id")}},
      {"requestBody", {{"required", true},
                       {"content", {{"application/json", {{"schema", {{"$ref", "#/components/schemas/PrefixRequest"}}}}}}}}},
      {"responses", {{"200", json_response("Suffix", {{"$ref", "#/components/schemas/Prediction"}})},
                     {"400", err("Malformed request")},
                     {"404", err("Unknown model")},
                     {"422", err("Empty prefix or unknown activity")}}}};
  paths["/models/{id}/evaluate"]["post"] = {
      {"summary", "Evaluate a model on a stored log"},
      {"parameters", {path_id("id")}},
      {"requestBody", {{"required", true}, {"content", {{"application/json", {{"schema", obj}}}}}}},
      {"responses", {{"200", json_response("Report", obj)}, {"404", err("Unknown model or log")}}}};
  paths["/spec"]["get"] = {{"summary", "This document"}, {"responses", {{"200", json_response("OpenAPI", obj)}}}};

  nlohmann::json schemas;
  schemas["Error"] = {{"type", "object"},
                      {"required", {"code", "message", "details"}},
                      {"properties", {{"code", {{"type", "string"}}},
                                      {"message", {{"type", "string"}}},
                                      {"details", {{"type", "object"}, {"additionalProperties", {{"type", "string"}}}}}}}};
  schemas["LogCreated"] = {{"type", "object"},
                           {"properties", {{"log_id", {{"type", "string"}}},
                                           {"events", {{"type", "integer"}}},
                                           {"objects", {{"type", "integer"}}},
                                           {"object_types", {{"type", "array"}, {"items", {{"type", "string"}}}}}}}};
  schemas["TrainingRequest"] = {{"type", "object"},
                                {"required", {"log_id", "object_type"}},
                                {"properties", {{"log_id", {{"type", "string"}}},
                                                {"object_type", {{"type", "string"}}},
                                                {"attrs", {{"type", "array"}, {"items", {{"type", "string"}}}}},
                                                {"config", obj}}}};
  schemas["JobRecord"] = {{"type", "object"},
                          {"properties", {{"job_id", {{"type", "string"}}},
                                          {"kind", {{"type", "string"}, {"enum", {"train"}}}},
                                          {"status", {{"type", "string"}, {"enum", {"queued", "running", "done", "failed"}}}},
                                          {"progress", obj},
                                          {"model_id", {{"type", {"string", "null"}}}}}}};
  schemas["PrefixRequest"] = {
      {"type", "object"},
      {"required", {"events"}},
      {"properties", {{"object_type", {{"type", "string"}}},
                      {"events", {{"type", "array"},
                                  {"items", {{"type", "object"},
                                             {"required", {"activity", "timestamp"}},
                                             {"properties", {{"activity", {{"type", "string"}}},
                                                             {"timestamp", {{"type", "string"}}},
                                                             {"object_id", {{"type", "string"}}}}}}}}},
                      {"object_attributes", obj}}}};
  schemas["Prediction"] = {{"type", "object"},
                           {"properties", {{"suffix", {{"type", "array"},
                                                       {"items", {{"type", "object"},
                                                                  {"properties", {{"activity", {{"type", "string"}}},
                                                                                  {"timestamp", {{"type", "string"}}},
                                                                                  {"elapsed_seconds", {{"type", "number"}}}}}}}}},
                                           {"similarity_hint", {{"type", "null"}}}}}};
  return {{"openapi", "3.0.3"},
          {"info", {{"title", "ocelgan"}, {"version", "0.1.0"}}},
          {"paths", paths},
          {"components", {{"schemas", schemas}}}};
}

}  // namespace ocelgan::service

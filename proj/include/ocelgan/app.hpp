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

// Operations shared by the command-line tool and the HTTP service. Both
// front ends serialize the JSON built here, so their payloads agree.

#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocelgan/bundle_io.hpp"
#include "ocelgan/encoding.hpp"
#include "ocelgan/gan.hpp"
#include "ocelgan/model_store.hpp"
#include "ocelgan/ocel.hpp"
#include "ocelgan/timestamp.hpp"

namespace ocelgan::app {

inline nlohmann::json error_json(const Error& e) {
  return {{"code", e.code()}, {"message", e.what()}, {"details", e.details()}};
}

inline OcelLog load_log(const std::filesystem::path& path) { return import_ocel_json(io::read_file(path)); }

/// Cases used for training and evaluation: flattened, then trimmed to two
/// standard deviations of case length.
inline std::vector<FlattenedCase> model_cases(const OcelLog& log, const std::string& object_type) {
  return trim_outliers(flatten(log, object_type));
}

// ---------------------------------------------------------------------------
// Statistics and relations

inline nlohmann::json stats_json(const OcelLog& log, const std::optional<std::string>& object_type) {
  std::vector<std::string> types;
  if (object_type) {
    if (!log.object_types.count(*object_type)) {
      throw Error(errc::kUnknownObjectType, "unknown object type '" + *object_type + "'",
                  {{"object_type", *object_type}});
    }
    types.push_back(*object_type);
  } else {
    types.assign(log.object_types.begin(), log.object_types.end());
  }
  nlohmann::json out = nlohmann::json::object();
  for (const auto& t : types) {
    auto all = flatten(log, t);
    auto kept = trim_outliers(all);
    nlohmann::json entry = {{"cases_before_trim", all.size()}, {"outliers_removed", all.size() - kept.size()}};
    entry["stats"] = kept.empty() ? nlohmann::json(nullptr) : nlohmann::json(case_statistics(kept));
    out[t] = entry;
  }
  return {{"events", log.events.size()}, {"objects", log.objects.size()}, {"object_types", out}};
}

inline std::string stats_table(const nlohmann::json& stats) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %8s %6s %6s %8s %10s %10s %10s\n", "object type", "cases", "max",
                "min", "mean", "max(d)", "min(d)", "mean(d)");
  out += buf;
  for (const auto& [type, entry] : stats.at("object_types").items()) {
    const auto& s = entry.at("stats");
    if (s.is_null()) {
      std::snprintf(buf, sizeof buf, "%-16s %8d\n", type.c_str(), 0);
    } else {
      constexpr double kDay = 86400.0;
      std::snprintf(buf, sizeof buf, "%-16s %8zu %6zu %6zu %8.2f %10.2f %10.2f %10.2f\n", type.c_str(),
                    s.at("count").get<std::size_t>(), s.at("max_len").get<std::size_t>(),
                    s.at("min_len").get<std::size_t>(), s.at("mean_len").get<double>(),
                    s.at("max_dur").get<double>() / kDay, s.at("min_dur").get<double>() / kDay,
                    s.at("mean_dur").get<double>() / kDay);
    }
    out += buf;
  }
  return out;
}

inline nlohmann::json relations_json(const OcelLog& log) {
  auto rel = relations_matrix(log);
  std::set<std::string> activities;
  for (const auto& e : log.events) activities.insert(e.activity);
  nlohmann::json by_type = nlohmann::json::object();
  for (const auto& [t, acts] : rel) by_type[t] = acts;
  return {{"activities", activities}, {"object_types", log.object_types}, {"relations", by_type}};
}

/// Activities down the side, object types across, "x" where related.
inline std::string relations_table(const nlohmann::json& rel) {
  auto acts = rel.at("activities").get<std::vector<std::string>>();
  auto types = rel.at("object_types").get<std::vector<std::string>>();
  std::size_t w0 = 8;
  for (const auto& a : acts) w0 = std::max(w0, a.size());
  std::string out = std::string("activity") + std::string(w0 - 8, ' ');
  for (const auto& t : types) out += "  " + t;
  out += '\n';
  for (const auto& a : acts) {
    out += a + std::string(w0 - a.size(), ' ');
    for (const auto& t : types) {
      const auto& related = rel.at("relations").at(t);
      bool hit = std::find(related.begin(), related.end(), a) != related.end();
      std::string cell(t.size(), ' ');
      cell[(t.size() - 1) / 2] = hit ? 'x' : '.';
      out += "  " + cell;
    }
    out += '\n';
  }
  return out;
}

/// Attribute names and types carried by objects of one type; these are the
/// attributes a model for that type can be conditioned on.
inline nlohmann::json object_attributes_json(const OcelLog& log, const std::string& object_type) {
  if (!log.object_types.count(object_type)) {
    throw Error(errc::kUnknownObjectType, "unknown object type '" + object_type + "'",
                {{"object_type", object_type}});
  }
  std::set<std::string> names;
  for (const auto& [id, o] : log.objects) {
    if (o.otype != object_type) continue;
    for (const auto& [k, v] : o.ovmap) names.insert(k);
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& n : names) out.push_back({{"name", n}, {"type", to_string(log.attribute_types.at(n))}});
  return {{"object_type", object_type}, {"attributes", out}};
}

// ---------------------------------------------------------------------------
// Training

struct TrainRequest {
  std::string object_type;
  std::vector<std::string> attributes;
  gan::TrainConfig config;
};

inline void check_attributes(const OcelLog& log, const TrainRequest& req) {
  auto known = object_attributes_json(log, req.object_type).at("attributes");
  for (const auto& a : req.attributes) {
    bool found = std::any_of(known.begin(), known.end(), [&](const auto& k) { return k.at("name") == a; });
    if (!found) {
      throw Error(errc::kInvalidConfig, "attribute '" + a + "' is not an attribute of " + req.object_type,
                  {{"attribute", a}, {"object_type", req.object_type}});
    }
  }
}

/// Flattens, trims and splits the log for `req`, reusing a cached bundle
/// when `cache_dir` is set.
inline DatasetBundle prepare_bundle(const OcelLog& log, const std::string& log_hash, const TrainRequest& req,
                                    const std::optional<std::filesystem::path>& cache_dir) {
  check_attributes(log, req);
  auto build = [&] { return split_and_partition(model_cases(log, req.object_type), req.attributes, req.config.seed); };
  if (!cache_dir) return build();
  return cached_bundle(*cache_dir, bundle_cache_key(log_hash, req.object_type, req.attributes, req.config.seed),
                       build);
}

struct TrainOutcome {
  nlohmann::json summary;
  std::vector<gan::EpochRecord> history;
};

/// Trains and writes the model directory. The directory is first written
/// at the first validation improvement and rewritten at each later one, so
/// a crash mid-run leaves the last good checkpoint in place.
inline TrainOutcome train_model(const OcelLog& log, const std::string& log_hash, const TrainRequest& req,
                                const std::filesystem::path& out_dir,
                                const std::optional<std::filesystem::path>& cache_dir,
                                std::function<void(const gan::EpochRecord&)> on_epoch = {}) {
  req.config.validate();
  auto bundle = prepare_bundle(log, log_hash, req, cache_dir);
  ModelInfo info{req.object_type, req.attributes, std::nullopt, std::nullopt, std::nullopt, log_hash};
  std::vector<gan::EpochRecord> history;
  gan::TrainHooks hooks;
  hooks.on_epoch = [&](const gan::EpochRecord& r) {
    history.push_back(r);
    if (on_epoch) on_epoch(r);
  };
  hooks.on_checkpoint = [&](const gan::GanModel& m, const gan::EpochRecord& r) {
    ModelInfo i = info;
    i.best_epoch = r.epoch;
    i.val_similarity = r.val_similarity;
    i.val_mae = r.val_mae;
    auto copy = m;
    save_model(out_dir, copy, i, history);
  };
  auto result = gan::train(req.config, bundle, hooks);
  info.best_epoch = result.best_epoch;
  info.val_similarity = result.best_val_similarity;
  info.val_mae = result.best_val_mae;
  save_model(out_dir, result.model, info, result.history);

  auto test = gan::evaluate(result.model, bundle.test);
  auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json summary = {{"object_type", req.object_type},
                            {"attributes", req.attributes},
                            {"epochs", req.config.epochs},
                            {"train_pairs", bundle.train.num_pairs()},
                            {"validation_pairs", bundle.validation.num_pairs()},
                            {"test_pairs", bundle.test.num_pairs()},
                            {"best_epoch", opt(result.best_epoch)},
                            {"val_similarity", opt(result.best_val_similarity)},
                            {"val_mae", opt(result.best_val_mae)},
                            {"test_similarity", test.mean_similarity},
                            {"test_mae", test.mae_normalized}};
  return {summary, result.history};
}

// ---------------------------------------------------------------------------
// Evaluation

/// Evaluates a saved model on a log. "test" re-derives the held-out split
/// from the model's seed (the right choice for the training log); "all"
/// uses every case.
inline EvalReport evaluate_on_log(LoadedModel& m, const OcelLog& log, const std::string& which) {
  auto cases = model_cases(log, m.info.object_type);
  Split split;
  if (which == "test") {
    split = encode_split(split_cases(cases, m.model.config.seed).test, m.model.schema);
  } else if (which == "all") {
    split = encode_split(cases, m.model.schema);
  } else {
    throw Error(errc::kInvalidConfig, "split must be 'test' or 'all'", {{"split", which}});
  }
  return gan::evaluate(m.model, split);
}

inline nlohmann::json eval_json(const EvalReport& r) { return r; }

// ---------------------------------------------------------------------------
// Prediction

struct PrefixRequest {
  std::string object_type;
  std::vector<RawEvent> events;
  std::map<std::string, AttributeValue> object_attributes;
};

inline PrefixRequest parse_prefix(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(errc::kBadRequest, "prefix request must be a JSON object");
  PrefixRequest req;
  if (j.contains("object_type")) {
    if (!j.at("object_type").is_string()) throw Error(errc::kBadRequest, "object_type must be a string");
    req.object_type = j.at("object_type").get<std::string>();
  }
  if (!j.contains("events") || !j.at("events").is_array()) {
    throw Error(errc::kMissingRequiredKey, "prefix request needs an 'events' array", {{"key", "events"}});
  }
  std::size_t k = 0;
  for (const auto& e : j.at("events")) {
    std::string where = "events[" + std::to_string(k++) + "]";
    if (!e.is_object() || !e.contains("activity") || !e.at("activity").is_string() || !e.contains("timestamp") ||
        !e.at("timestamp").is_string()) {
      throw Error(errc::kInvalidPrefix, where + " needs string 'activity' and 'timestamp'", {{"field", where}});
    }
    auto ts = parse_timestamp(e.at("timestamp").get<std::string>());
    if (!ts) {
      throw Error(errc::kUnparseableTimestamp, "cannot parse timestamp in " + where,
                  {{"field", where + ".timestamp"}, {"value", e.at("timestamp").get<std::string>()}});
    }
    if (!req.events.empty() && *ts < req.events.back().timestamp) {
      throw Error(errc::kInvalidPrefix, "prefix events must be in time order", {{"field", where + ".timestamp"}});
    }
    req.events.push_back({e.at("activity").get<std::string>(), *ts});
  }
  if (j.contains("object_attributes")) {
    const auto& attrs = j.at("object_attributes");
    if (!attrs.is_object()) throw Error(errc::kBadRequest, "object_attributes must be an object");
    for (auto it = attrs.begin(); it != attrs.end(); ++it) {
      if (it->is_number()) {
        req.object_attributes[it.key()] = it->get<double>();
      } else if (it->is_string()) {
        req.object_attributes[it.key()] = it->get<std::string>();
      } else {
        throw Error(errc::kInvalidPrefix, "attribute values must be numbers or strings",
                    {{"field", "object_attributes." + it.key()}});
      }
    }
  }
  return req;
}

inline nlohmann::json predict_json(LoadedModel& m, const PrefixRequest& req) {
  if (!req.object_type.empty() && req.object_type != m.info.object_type) {
    throw Error(errc::kInvalidPrefix, "model was trained for object type '" + m.info.object_type + "'",
                {{"field", "object_type"}, {"expected", m.info.object_type}});
  }
  if (req.events.empty()) throw Error(errc::kEmptyPrefix, "prefix must contain at least one event");
  for (std::size_t k = 0; k < req.events.size(); ++k) {
    if (!m.model.schema.activity_index(req.events[k].activity)) {
      throw Error(errc::kUnknownActivity, "unknown activity '" + req.events[k].activity + "'",
                  {{"field", "events[" + std::to_string(k) + "].activity"}, {"activity", req.events[k].activity}});
    }
  }
  auto suffix = gan::predict_suffix(m.model, req.events, req.object_attributes);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : suffix) {
    rows.push_back({{"activity", e.activity},
                    {"timestamp", format_timestamp(e.timestamp)},
                    {"elapsed_seconds", e.elapsed_seconds}});
  }
  return {{"suffix", rows}, {"similarity_hint", nullptr}};
}

}  // namespace ocelgan::app

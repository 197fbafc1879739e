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

// Object-centric event logs: OCEL JSON import/export, validation, flattening
// onto a single object type, activity/object-type relations and case
// statistics.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ocelgan/error.hpp"
#include "ocelgan/timestamp.hpp"

namespace ocelgan {

using AttributeValue = std::variant<std::string, double>;

enum class AttributeType { kString, kFloat, kInteger };

inline const char* to_string(AttributeType t) {
  switch (t) {
    case AttributeType::kString: return "string";
    case AttributeType::kFloat: return "float";
    case AttributeType::kInteger: return "integer";
  }
  return "string";
}

inline bool is_numeric(const AttributeValue& v) { return std::holds_alternative<double>(v); }

inline std::string value_to_string(const AttributeValue& v) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  return nlohmann::json(std::get<double>(v)).dump();
}

struct Event {
  std::string id;
  std::string activity;
  Timestamp timestamp = 0;
  std::set<std::string> omap;
  std::map<std::string, AttributeValue> vmap;

  bool operator==(const Event&) const = default;
};

struct ObjectEntity {
  std::string id;
  std::string otype;
  std::map<std::string, AttributeValue> ovmap;

  bool operator==(const ObjectEntity&) const = default;
};

/// A validated log. Events are kept sorted by (timestamp, id), which is the
/// total order used everywhere downstream.
struct OcelLog {
  std::string version;
  std::vector<Event> events;
  std::map<std::string, ObjectEntity> objects;
  std::set<std::string> attribute_names;
  std::map<std::string, AttributeType> attribute_types;
  std::set<std::string> object_types;

  bool operator==(const OcelLog&) const = default;

  /// Object types of the objects referenced by an event.
  std::set<std::string> types_of(const Event& e) const {
    std::set<std::string> out;
    for (const auto& o : e.omap) out.insert(objects.at(o).otype);
    return out;
  }
};

/// Events of one object, in log order, plus that object's attributes.
struct FlattenedCase {
  std::string object_id;
  std::string object_type;
  std::map<std::string, AttributeValue> attributes;
  std::vector<Event> events;
};

struct CaseStats {
  std::size_t count = 0;
  std::size_t max_len = 0;
  std::size_t min_len = 0;
  double mean_len = 0;
  double max_dur = 0;  // seconds
  double min_dur = 0;
  double mean_dur = 0;

  bool operator==(const CaseStats&) const = default;
};

inline void to_json(nlohmann::json& j, const CaseStats& s) {
  j = nlohmann::json{{"count", s.count},       {"max_len", s.max_len},
                     {"min_len", s.min_len},   {"mean_len", s.mean_len},
                     {"max_dur", s.max_dur},   {"min_dur", s.min_dur},
                     {"mean_dur", s.mean_dur}};
}

namespace detail {

inline std::optional<double> parse_number(std::string_view s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key,
                                     const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(errc::kMissingRequiredKey, "missing required key '" + std::string(key) + "' in " + where,
                {{"key", key}, {"where", where}});
  }
  return j.at(key);
}

// Raw attribute maps collected during import, before types are inferred.
using RawAttrs = std::map<std::string, nlohmann::json>;

inline RawAttrs read_attr_map(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) {
    throw Error(errc::kInvalidLog, "attribute map must be an object in " + where, {{"where", where}});
  }
  RawAttrs out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_null()) continue;
    if (!it.value().is_primitive()) {
      throw Error(errc::kInvalidLog, "attribute '" + it.key() + "' must be a scalar in " + where,
                  {{"where", where}, {"attribute", it.key()}});
    }
    out.emplace(it.key(), it.value());
  }
  return out;
}

inline std::optional<double> json_number(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_number(v.get_ref<const std::string&>());
  return std::nullopt;
}

inline AttributeValue convert_value(const nlohmann::json& v, AttributeType t) {
  if (t != AttributeType::kString) return *json_number(v);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
  return v.dump();
}

}  // namespace detail

/// Parses and validates an OCEL JSON document.
inline OcelLog import_ocel_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(errc::kMalformedJson, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(errc::kMalformedJson, "top-level JSON value must be an object");

  const auto& global = detail::require(doc, "ocel:global-log", "document");
  const auto& jevents = detail::require(doc, "ocel:events", "document");
  const auto& jobjects = detail::require(doc, "ocel:objects", "document");
  if (!jevents.is_object() || !jobjects.is_object()) {
    throw Error(errc::kInvalidLog, "\"ocel:events\" and \"ocel:objects\" must be objects");
  }

  OcelLog log;
  if (global.is_object()) {
    if (global.contains("ocel:version") && global["ocel:version"].is_string()) {
      log.version = global["ocel:version"].get<std::string>();
    }
    if (global.contains("ocel:attribute-names") && global["ocel:attribute-names"].is_array()) {
      for (const auto& n : global["ocel:attribute-names"]) {
        if (n.is_string()) log.attribute_names.insert(n.get<std::string>());
      }
    }
    if (global.contains("ocel:object-types") && global["ocel:object-types"].is_array()) {
      for (const auto& t : global["ocel:object-types"]) {
        if (t.is_string()) log.object_types.insert(t.get<std::string>());
      }
    }
  }

  struct RawEvent {
    Event event;
    detail::RawAttrs vmap;
  };
  struct RawObject {
    ObjectEntity object;
    detail::RawAttrs ovmap;
  };
  std::vector<RawEvent> raw_events;
  std::vector<RawObject> raw_objects;

  for (auto it = jobjects.begin(); it != jobjects.end(); ++it) {
    std::string where = "object '" + it.key() + "'";
    const auto& type = detail::require(it.value(), "ocel:type", where);
    if (!type.is_string() || type.get_ref<const std::string&>().empty()) {
      throw Error(errc::kInvalidLog, "object type must be a nonempty string in " + where,
                  {{"object", it.key()}});
    }
    RawObject ro;
    ro.object.id = it.key();
    ro.object.otype = type.get<std::string>();
    ro.ovmap = detail::read_attr_map(detail::require(it.value(), "ocel:ovmap", where), where);
    log.object_types.insert(ro.object.otype);
    raw_objects.push_back(std::move(ro));
  }

  for (auto it = jevents.begin(); it != jevents.end(); ++it) {
    std::string where = "event '" + it.key() + "'";
    const auto& rec = it.value();
    const auto& act = detail::require(rec, "ocel:activity", where);
    const auto& ts = detail::require(rec, "ocel:timestamp", where);
    const auto& omap = detail::require(rec, "ocel:omap", where);
    const auto& vmap = detail::require(rec, "ocel:vmap", where);
    if (!act.is_string() || act.get_ref<const std::string&>().empty()) {
      throw Error(errc::kInvalidLog, "activity must be a nonempty string in " + where,
                  {{"event", it.key()}});
    }
    std::optional<Timestamp> t;
    if (ts.is_string()) t = parse_timestamp(ts.get_ref<const std::string&>());
    if (!t) {
      throw Error(errc::kUnparseableTimestamp, "unparseable timestamp in " + where,
                  {{"event", it.key()}, {"value", ts.dump()}});
    }
    if (!omap.is_array()) {
      throw Error(errc::kInvalidLog, "\"ocel:omap\" must be an array in " + where, {{"event", it.key()}});
    }
    RawEvent re;
    re.event.id = it.key();
    re.event.activity = act.get<std::string>();
    re.event.timestamp = *t;
    for (const auto& o : omap) {
      if (!o.is_string()) {
        throw Error(errc::kInvalidLog, "object references must be strings in " + where,
                    {{"event", it.key()}});
      }
      const auto& oid = o.get_ref<const std::string&>();
      if (!jobjects.contains(oid)) {
        throw Error(errc::kDanglingObjectReference,
                    "event '" + it.key() + "' references unknown object '" + oid + "'",
                    {{"event", it.key()}, {"object", oid}});
      }
      re.event.omap.insert(oid);
    }
    re.vmap = detail::read_attr_map(vmap, where);
    raw_events.push_back(std::move(re));
  }

  // Attribute types: numeric when every occurrence parses as a number,
  // integer when additionally every occurrence is integral.
  std::map<std::string, std::pair<bool, bool>> numeric_integral;
  auto observe = [&](const detail::RawAttrs& attrs) {
    for (const auto& [name, v] : attrs) {
      auto [it, fresh] = numeric_integral.try_emplace(name, true, true);
      auto num = detail::json_number(v);
      if (!num) {
        it->second = {false, false};
      } else if (*num != std::floor(*num)) {
        it->second.second = false;
      }
      log.attribute_names.insert(name);
    }
  };
  for (const auto& re : raw_events) observe(re.vmap);
  for (const auto& ro : raw_objects) observe(ro.ovmap);
  for (const auto& [name, flags] : numeric_integral) {
    log.attribute_types[name] = !flags.first    ? AttributeType::kString
                                : flags.second ? AttributeType::kInteger
                                               : AttributeType::kFloat;
  }

  auto convert = [&](const detail::RawAttrs& attrs) {
    std::map<std::string, AttributeValue> out;
    for (const auto& [name, v] : attrs) {
      auto value = detail::convert_value(v, log.attribute_types.at(name));
      if (auto* s = std::get_if<std::string>(&value); s && log.attribute_names.count(*s)) {
        throw Error(errc::kInvalidLog,
                    "attribute value '" + *s + "' collides with an attribute name",
                    {{"attribute", name}, {"value", *s}});
      }
      out.emplace(name, std::move(value));
    }
    return out;
  };
  for (auto& ro : raw_objects) {
    ro.object.ovmap = convert(ro.ovmap);
    std::string id = ro.object.id;
    log.objects.emplace(std::move(id), std::move(ro.object));
  }
  log.events.reserve(raw_events.size());
  for (auto& re : raw_events) {
    re.event.vmap = convert(re.vmap);
    log.events.push_back(std::move(re.event));
  }
  std::sort(log.events.begin(), log.events.end(), [](const Event& a, const Event& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
  });
  return log;
}

/// Serializes with the same schema import_ocel_json reads. Output is
/// deterministic (object keys are sorted).
inline std::string export_ocel_json(const OcelLog& log, int indent = -1) {
  using nlohmann::json;
  auto attrs = [](const std::map<std::string, AttributeValue>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) {
      if (auto* d = std::get_if<double>(&v)) {
        j[k] = *d;
      } else {
        j[k] = std::get<std::string>(v);
      }
    }
    return j;
  };
  json doc;
  doc["ocel:global-log"] = {
      {"ocel:version", log.version},
      {"ocel:ordering", "timestamp"},
      {"ocel:attribute-names", log.attribute_names},
      {"ocel:object-types", log.object_types},
  };
  json events = json::object();
  for (const auto& e : log.events) {
    events[e.id] = {{"ocel:activity", e.activity},
                    {"ocel:timestamp", format_timestamp(e.timestamp)},
                    {"ocel:omap", e.omap},
                    {"ocel:vmap", attrs(e.vmap)}};
  }
  json objects = json::object();
  for (const auto& [id, o] : log.objects) {
    objects[id] = {{"ocel:type", o.otype}, {"ocel:ovmap", attrs(o.ovmap)}};
  }
  doc["ocel:events"] = std::move(events);
  doc["ocel:objects"] = std::move(objects);
  return doc.dump(indent);
}

/// For each object type, the activities of events touching at least one
/// object of that type. Every type in the log gets an entry.
inline std::map<std::string, std::set<std::string>> relations_matrix(const OcelLog& log) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& t : log.object_types) out[t];
  for (const auto& e : log.events) {
    for (const auto& o : e.omap) out[log.objects.at(o).otype].insert(e.activity);
  }
  return out;
}

/// One case per object of `object_type` that occurs in at least one event.
/// Cases come out ordered by object id.
inline std::vector<FlattenedCase> flatten(const OcelLog& log, const std::string& object_type) {
  if (!log.object_types.count(object_type)) {
    throw Error(errc::kUnknownObjectType, "unknown object type '" + object_type + "'",
                {{"object_type", object_type}});
  }
  std::map<std::string, FlattenedCase> by_object;
  for (const auto& e : log.events) {
    for (const auto& oid : e.omap) {
      const auto& obj = log.objects.at(oid);
      if (obj.otype != object_type) continue;
      auto [it, fresh] = by_object.try_emplace(oid);
      if (fresh) {
        it->second.object_id = oid;
        it->second.object_type = object_type;
        it->second.attributes = obj.ovmap;
      }
      it->second.events.push_back(e);
    }
  }
  std::vector<FlattenedCase> out;
  out.reserve(by_object.size());
  for (auto& [id, c] : by_object) out.push_back(std::move(c));
  return out;
}

inline double case_duration(const FlattenedCase& c) {
  return static_cast<double>(c.events.back().timestamp - c.events.front().timestamp);
}

inline CaseStats case_statistics(const std::vector<FlattenedCase>& cases) {
  if (cases.empty()) throw Error(errc::kEmptyInput, "case statistics need at least one case");
  CaseStats s;
  s.count = cases.size();
  s.min_len = cases.front().events.size();
  s.min_dur = case_duration(cases.front());
  double len_sum = 0, dur_sum = 0;
  for (const auto& c : cases) {
    double dur = case_duration(c);
    s.max_len = std::max(s.max_len, c.events.size());
    s.min_len = std::min(s.min_len, c.events.size());
    s.max_dur = std::max(s.max_dur, dur);
    s.min_dur = std::min(s.min_dur, dur);
    len_sum += static_cast<double>(c.events.size());
    dur_sum += dur;
  }
  s.mean_len = len_sum / static_cast<double>(s.count);
  s.mean_dur = dur_sum / static_cast<double>(s.count);
  return s;
}

/// Mean and population standard deviation of case lengths.
struct LengthBand {
  double mean = 0;
  double stddev = 0;
};

inline LengthBand length_band(const std::vector<FlattenedCase>& cases) {
  LengthBand b;
  if (cases.empty()) return b;
  double n = static_cast<double>(cases.size());
  for (const auto& c : cases) b.mean += static_cast<double>(c.events.size());
  b.mean /= n;
  double var = 0;
  for (const auto& c : cases) {
    double d = static_cast<double>(c.events.size()) - b.mean;
    var += d * d;
  }
  b.stddev = std::sqrt(var / n);
  return b;
}

/// Keeps cases whose length lies within two standard deviations of `band`.
inline std::vector<FlattenedCase> trim_outliers(const std::vector<FlattenedCase>& cases,
                                                const LengthBand& band) {
  if (band.stddev == 0) return cases;
  std::vector<FlattenedCase> out;
  for (const auto& c : cases) {
    if (std::abs(static_cast<double>(c.events.size()) - band.mean) <= 2 * band.stddev) {
      out.push_back(c);
    }
  }
  return out;
}

inline std::vector<FlattenedCase> trim_outliers(const std::vector<FlattenedCase>& cases) {
  return trim_outliers(cases, length_band(cases));
}

}  // namespace ocelgan

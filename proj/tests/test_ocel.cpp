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

#include "ocelgan/ocel.hpp"

#include <gtest/gtest.h>

#include "ocelgan/synthgen.hpp"
#include "support.hpp"

namespace ocelgan {
namespace {

using testing::fragment_log_json;

std::string minimal_log(const std::string& events, const std::string& objects) {
  return R"({"ocel:global-log": {"ocel:version": "1.0", "ocel:attribute-names": [], "ocel:object-types": []},
             "ocel:events": )" +
         events + R"(, "ocel:objects": )" + objects + "}";
}

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

TEST(OcelImport, MinimalLog) {
  auto log = import_ocel_json(minimal_log(
      R"({"e1": {"ocel:activity": "place order", "ocel:timestamp": "2020-9-14 11:37",
                 "ocel:omap": ["o1", "i1"], "ocel:vmap": {}}})",
      R"({"o1": {"ocel:type": "order", "ocel:ovmap": {}}, "i1": {"ocel:type": "item", "ocel:ovmap": {}}})"));
  EXPECT_EQ(log.events.size(), 1u);
  EXPECT_EQ(log.objects.size(), 2u);
  EXPECT_EQ(log.object_types, (std::set<std::string>{"item", "order"}));
  EXPECT_EQ(log.events[0].timestamp, *parse_timestamp("2020-09-14T11:37:00"));
}

TEST(OcelImport, EmptyEventsIsValid) {
  auto log = import_ocel_json(minimal_log("{}", R"({"o1": {"ocel:type": "order", "ocel:ovmap": {}}})"));
  EXPECT_TRUE(log.events.empty());
  for (const auto& [type, acts] : relations_matrix(log)) EXPECT_TRUE(acts.empty()) << type;
}

TEST(OcelImport, Errors) {
  EXPECT_EQ(error_code([] {
              import_ocel_json(minimal_log(
                  R"({"e1": {"ocel:activity": "x", "ocel:timestamp": "2020-01-01", "ocel:omap": ["zz9"],
                             "ocel:vmap": {}}})",
                  "{}"));
            }),
            errc::kDanglingObjectReference);
  EXPECT_EQ(error_code([] { import_ocel_json("{not json"); }), errc::kMalformedJson);
  EXPECT_EQ(error_code([] { import_ocel_json(R"({"ocel:events": {}, "ocel:objects": {}})"); }),
            errc::kMissingRequiredKey);
  EXPECT_EQ(error_code([] {
              import_ocel_json(minimal_log(
                  R"({"e1": {"ocel:activity": "x", "ocel:timestamp": "2020-01-01", "ocel:omap": []}})", "{}"));
            }),
            errc::kMissingRequiredKey);
  EXPECT_EQ(error_code([] {
              import_ocel_json(minimal_log(
                  R"({"e1": {"ocel:activity": "x", "ocel:timestamp": "soon", "ocel:omap": [], "ocel:vmap": {}}})",
                  "{}"));
            }),
            errc::kUnparseableTimestamp);
}

TEST(OcelImport, DanglingReferenceDetails) {
  try {
    import_ocel_json(minimal_log(
        R"({"e7": {"ocel:activity": "x", "ocel:timestamp": "2020-01-01", "ocel:omap": ["zz9"], "ocel:vmap": {}}})",
        "{}"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.details().at("event"), "e7");
    EXPECT_EQ(e.details().at("object"), "zz9");
  }
}

TEST(OcelImport, EventsSortedByTimeThenId) {
  auto log = import_ocel_json(minimal_log(
      R"({"b": {"ocel:activity": "x", "ocel:timestamp": "2020-01-02", "ocel:omap": ["o"], "ocel:vmap": {}},
          "c": {"ocel:activity": "y", "ocel:timestamp": "2020-01-01", "ocel:omap": ["o"], "ocel:vmap": {}},
          "a": {"ocel:activity": "z", "ocel:timestamp": "2020-01-02", "ocel:omap": ["o"], "ocel:vmap": {}}})",
      R"({"o": {"ocel:type": "t", "ocel:ovmap": {}}})"));
  ASSERT_EQ(log.events.size(), 3u);
  EXPECT_EQ(log.events[0].id, "c");
  EXPECT_EQ(log.events[1].id, "a");
  EXPECT_EQ(log.events[2].id, "b");
}

TEST(OcelImport, AttributeTypes) {
  auto log = import_ocel_json(minimal_log(
      R"({"e": {"ocel:activity": "x", "ocel:timestamp": "2020-01-01", "ocel:omap": ["o1"], "ocel:vmap": {"cost": "2.5"}}})",
      R"({"o1": {"ocel:type": "t", "ocel:ovmap": {"weight": 50, "color": "red", "mixed": 1}},
          "o2": {"ocel:type": "t", "ocel:ovmap": {"weight": 75, "mixed": "n/a"}}})"));
  EXPECT_EQ(log.attribute_types.at("weight"), AttributeType::kInteger);
  EXPECT_EQ(log.attribute_types.at("cost"), AttributeType::kFloat);
  EXPECT_EQ(log.attribute_types.at("color"), AttributeType::kString);
  EXPECT_EQ(log.attribute_types.at("mixed"), AttributeType::kString);
  EXPECT_EQ(std::get<double>(log.objects.at("o2").ovmap.at("weight")), 75.0);
  EXPECT_EQ(std::get<std::string>(log.objects.at("o1").ovmap.at("mixed")), "1");
}

TEST(Relations, Fragment) {
  auto log = import_ocel_json(fragment_log_json());
  auto rel = relations_matrix(log);
  EXPECT_EQ(rel.at("package"), (std::set<std::string>{"create package", "load package", "deliver package"}));
  EXPECT_EQ(rel.at("order"), (std::set<std::string>{"place order", "check availability", "pick item",
                                                    "send invoice", "receive payment"}));
  EXPECT_TRUE(rel.at("item").count("create package"));
}

TEST(Relations, GeneratedPackages) {
  synth::GenConfig gc;
  gc.num_orders = 40;
  auto rel = relations_matrix(synth::generate(gc));
  EXPECT_EQ(rel.at("packages"),
            (std::set<std::string>{"create package", "send package", "failed delivery", "package delivered"}));
}

TEST(Flatten, FragmentCases) {
  auto log = import_ocel_json(fragment_log_json());
  auto packages = flatten(log, "package");
  ASSERT_EQ(packages.size(), 2u);
  EXPECT_EQ(packages[0].object_id, "p1");
  std::vector<std::string> acts;
  for (const auto& e : packages[0].events) acts.push_back(e.activity);
  EXPECT_EQ(acts, (std::vector<std::string>{"create package", "load package", "deliver package"}));
  EXPECT_EQ(std::get<double>(packages[0].attributes.at("weight")), 50.0);

  auto orders = flatten(log, "order");
  ASSERT_EQ(orders.size(), 2u);
  const auto& o1 = orders[0];
  EXPECT_EQ(o1.object_id, "o1");
  ASSERT_EQ(o1.events.size(), 9u);
  EXPECT_EQ(o1.events[0].activity, "place order");
  EXPECT_EQ(o1.events[1].activity, "check availability");
  EXPECT_EQ(o1.events[2].activity, "pick item");
  for (std::size_t i = 1; i < o1.events.size(); ++i) {
    EXPECT_LE(o1.events[i - 1].timestamp, o1.events[i].timestamp);
  }
}

TEST(Flatten, ObjectWithoutEventsOmitted) {
  auto log = import_ocel_json(minimal_log(
      R"({"e": {"ocel:activity": "x", "ocel:timestamp": "2020-01-01", "ocel:omap": ["o1"], "ocel:vmap": {}}})",
      R"({"o1": {"ocel:type": "t", "ocel:ovmap": {}}, "o2": {"ocel:type": "t", "ocel:ovmap": {}}})"));
  auto cases = flatten(log, "t");
  ASSERT_EQ(cases.size(), 1u);
  EXPECT_EQ(cases[0].object_id, "o1");
  EXPECT_EQ(error_code([&] { flatten(log, "nope"); }), errc::kUnknownObjectType);
}

FlattenedCase case_of_length(std::size_t n, Timestamp step = 60) {
  FlattenedCase c;
  for (std::size_t i = 0; i < n; ++i) {
    Event e;
    e.id = std::to_string(i);
    e.activity = "a";
    e.timestamp = static_cast<Timestamp>(i) * step;
    c.events.push_back(e);
  }
  return c;
}

TEST(CaseStatistics, Arithmetic) {
  auto s = case_statistics({case_of_length(3), case_of_length(3), case_of_length(4)});
  EXPECT_EQ(s.count, 3u);
  EXPECT_DOUBLE_EQ(s.mean_len, 10.0 / 3.0);
  EXPECT_EQ(s.min_len, 3u);
  EXPECT_EQ(s.max_len, 4u);
  EXPECT_DOUBLE_EQ(s.max_dur, 180);
  EXPECT_DOUBLE_EQ(s.min_dur, 120);
  EXPECT_DOUBLE_EQ(case_duration(case_of_length(1)), 0);
  EXPECT_EQ(error_code([] { case_statistics({}); }), errc::kEmptyInput);
}

TEST(CaseStatistics, GeneratedLogRecount) {
  synth::GenConfig gc;
  gc.num_orders = 60;
  auto log = synth::generate(gc);
  for (const auto& type : log.object_types) {
    // Independent recount straight from the event list.
    std::map<std::string, std::vector<Timestamp>> times;
    for (const auto& e : log.events) {
      for (const auto& o : e.omap) {
        if (log.objects.at(o).otype == type) times[o].push_back(e.timestamp);
      }
    }
    if (times.empty()) continue;
    std::size_t total = 0, mx = 0, mn = SIZE_MAX;
    double dur = 0;
    for (auto& [o, ts] : times) {
      total += ts.size();
      mx = std::max(mx, ts.size());
      mn = std::min(mn, ts.size());
      dur += static_cast<double>(*std::max_element(ts.begin(), ts.end()) - *std::min_element(ts.begin(), ts.end()));
    }
    auto s = case_statistics(flatten(log, type));
    EXPECT_EQ(s.count, times.size()) << type;
    EXPECT_EQ(s.max_len, mx) << type;
    EXPECT_EQ(s.min_len, mn) << type;
    EXPECT_NEAR(s.mean_len, static_cast<double>(total) / static_cast<double>(times.size()), 1e-12) << type;
    EXPECT_NEAR(s.mean_dur, dur / static_cast<double>(times.size()), 1e-6) << type;
  }
}

TEST(TrimOutliers, ZeroVarianceKeepsAll) {
  std::vector<FlattenedCase> cases(4, case_of_length(5));
  EXPECT_EQ(trim_outliers(cases).size(), 4u);
  EXPECT_TRUE(trim_outliers({}).empty());
}

TEST(TrimOutliers, LongCaseRemoved) {
  std::vector<FlattenedCase> cases(9, case_of_length(3));
  cases.push_back(case_of_length(30));
  // mean 5.7, population sigma 8.1, so the band is [-10.5, 21.9].
  auto band = length_band(cases);
  EXPECT_NEAR(band.mean, 5.7, 1e-12);
  EXPECT_NEAR(band.stddev, 8.1, 1e-12);
  auto kept = trim_outliers(cases);
  ASSERT_EQ(kept.size(), 9u);
  for (const auto& c : kept) EXPECT_EQ(c.events.size(), 3u);
}

TEST(RoundTrip, Fragment) {
  auto log = import_ocel_json(fragment_log_json());
  auto again = import_ocel_json(export_ocel_json(log));
  EXPECT_EQ(log, again);
  EXPECT_EQ(export_ocel_json(log), export_ocel_json(again));
}

TEST(RoundTrip, GeneratedLogs) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    synth::GenConfig gc;
    gc.seed = seed;
    gc.num_orders = 30;
    auto log = synth::generate(gc);
    EXPECT_EQ(import_ocel_json(export_ocel_json(log)), log) << seed;
  }
  auto toy = synth::generate_toy_linear(5, 3600);
  EXPECT_EQ(import_ocel_json(export_ocel_json(toy, 2)), toy);
}

}  // namespace
}  // namespace ocelgan

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

// Synthetic order-to-cash logs.
//
// Object types: customers, items, orders, packages. Each order is placed by
// a customer, its items are picked (possibly after running out of stock and
// being reordered), the order is confirmed and paid (possibly after a
// reminder), and the items are shipped in one or more packages:
//
//   create package -> send package -> [failed delivery] -> package delivered
//
// A package heavier than heavy_threshold takes twice as long per delivery
// attempt and fails its first attempt far more often, so the weight
// attribute carries information about both the next activity and the
// elapsed time.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocelgan/error.hpp"
#include "ocelgan/ocel.hpp"
#include "ocelgan/random.hpp"

namespace ocelgan::synth {

inline const std::vector<std::string>& activities() {
  static const std::vector<std::string> kAll = {
      "place order",    "pick item",       "confirm order",   "item out of stock",
      "reorder item",   "pay order",       "create package",  "send package",
      "failed delivery", "package delivered", "payment reminder"};
  return kAll;
}

struct PriorityClass {
  std::string name;
  double probability = 1.0;
  double delay_multiplier = 1.0;  // scales order handling delays
};

struct GenConfig {
  std::uint64_t seed = 0;
  std::size_t num_orders = 100;
  std::size_t num_customers = 17;
  std::size_t items_per_order_min = 1;
  std::size_t items_per_order_max = 6;
  std::size_t items_per_package_max = 3;
  double out_of_stock_prob = 0.1;
  double payment_reminder_prob = 0.2;
  std::vector<PriorityClass> priorities = {{"standard", 0.7, 1.0}, {"express", 0.3, 0.25}};

  // customers.age, items.color, orders.price, packages.weight
  int age_min = 18;
  int age_max = 80;
  std::vector<std::string> colors = {"black", "blue", "green", "red", "white"};
  double price_min = 5.0;
  double price_max = 500.0;
  double weight_min = 0.5;
  double weight_max = 30.0;
  double heavy_threshold = 21.0;

  double failure_prob_light = 0.08;
  double failure_prob_heavy = 0.8;
  /// Seconds per delivery attempt for a light package; doubled when heavy.
  double delivery_seconds_min = 20 * 3600.0;
  double delivery_seconds_max = 28 * 3600.0;
  double send_seconds_min = 1 * 3600.0;
  double send_seconds_max = 3 * 3600.0;

  Timestamp start = 1577836800;  // 2020-01-01T00:00:00Z
  double order_interarrival_seconds = 6 * 3600.0;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(errc::kInvalidConfig, what); };
    auto prob = [&](double p, const char* what) {
      if (!(p >= 0 && p <= 1)) bad(std::string(what) + " must lie in [0, 1]");
    };
    prob(out_of_stock_prob, "out_of_stock_prob");
    prob(payment_reminder_prob, "payment_reminder_prob");
    prob(failure_prob_light, "failure_prob_light");
    prob(failure_prob_heavy, "failure_prob_heavy");
    if (num_orders == 0) bad("num_orders must be positive");
    if (num_customers == 0) bad("num_customers must be positive");
    if (items_per_order_min == 0 || items_per_order_min > items_per_order_max) {
      bad("items_per_order range must satisfy 1 <= min <= max");
    }
    if (items_per_package_max == 0) bad("items_per_package_max must be positive");
    if (priorities.empty()) bad("at least one priority class is required");
    double total = 0;
    for (const auto& p : priorities) {
      prob(p.probability, "priority probability");
      if (!(p.delay_multiplier > 0)) bad("priority delay multipliers must be positive");
      total += p.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) bad("priority probabilities must sum to 1");
    if (age_min > age_max) bad("age range is empty");
    if (colors.empty()) bad("colors must be nonempty");
    if (!(price_min <= price_max)) bad("price range is empty");
    if (!(weight_min <= weight_max)) bad("weight range is empty");
    if (!(delivery_seconds_min > 0 && delivery_seconds_min <= delivery_seconds_max)) {
      bad("delivery time range must be positive and nonempty");
    }
    if (!(send_seconds_min > 0 && send_seconds_min <= send_seconds_max)) {
      bad("send time range must be positive and nonempty");
    }
    if (!(order_interarrival_seconds > 0)) bad("order_interarrival_seconds must be positive");
  }
};

inline void from_json(const nlohmann::json& j, GenConfig& c) {
  auto opt = [&](const char* k, auto& field) {
    if (j.contains(k)) j.at(k).get_to(field);
  };
  opt("seed", c.seed);
  opt("num_orders", c.num_orders);
  opt("num_customers", c.num_customers);
  opt("items_per_order_min", c.items_per_order_min);
  opt("items_per_order_max", c.items_per_order_max);
  opt("items_per_package_max", c.items_per_package_max);
  opt("out_of_stock_prob", c.out_of_stock_prob);
  opt("payment_reminder_prob", c.payment_reminder_prob);
  opt("age_min", c.age_min);
  opt("age_max", c.age_max);
  opt("colors", c.colors);
  opt("price_min", c.price_min);
  opt("price_max", c.price_max);
  opt("weight_min", c.weight_min);
  opt("weight_max", c.weight_max);
  opt("heavy_threshold", c.heavy_threshold);
  opt("failure_prob_light", c.failure_prob_light);
  opt("failure_prob_heavy", c.failure_prob_heavy);
  opt("delivery_seconds_min", c.delivery_seconds_min);
  opt("delivery_seconds_max", c.delivery_seconds_max);
  opt("send_seconds_min", c.send_seconds_min);
  opt("send_seconds_max", c.send_seconds_max);
  opt("start", c.start);
  opt("order_interarrival_seconds", c.order_interarrival_seconds);
  if (j.contains("priorities")) {
    c.priorities.clear();
    for (const auto& p : j.at("priorities")) {
      c.priorities.push_back({p.at("name").get<std::string>(), p.at("probability").get<double>(),
                              p.at("delay_multiplier").get<double>()});
    }
  }
}

namespace detail {

struct Builder {
  OcelLog log;
  std::size_t next_event = 0;

  void object(const std::string& id, const std::string& type, std::map<std::string, AttributeValue> attrs) {
    log.objects[id] = ObjectEntity{id, type, std::move(attrs)};
  }

  void event(const std::string& activity, double t, std::set<std::string> omap) {
    Event e;
    e.id = std::to_string(++next_event);
    e.activity = activity;
    e.timestamp = static_cast<Timestamp>(std::llround(t));
    e.omap = std::move(omap);
    log.events.push_back(std::move(e));
  }

  /// Round-trips through the OCEL codec, which sorts events and infers
  /// attribute types exactly as for a loaded file.
  OcelLog finish() {
    log.version = "1.0";
    for (const auto& [id, o] : log.objects) log.object_types.insert(o.otype);
    return import_ocel_json(export_ocel_json(log));
  }
};

inline std::string padded(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, n);
  return buf;
}

inline double round_to(double v, double step) { return std::round(v / step) * step; }

}  // namespace detail

inline OcelLog generate(const GenConfig& config) {
  config.validate();
  Rng rng(config.seed);
  detail::Builder b;

  std::vector<std::string> customers;
  for (std::size_t i = 1; i <= config.num_customers; ++i) {
    auto id = detail::padded("c", i);
    double age = config.age_min + static_cast<double>(rng.below(config.age_max - config.age_min + 1));
    b.object(id, "customers", {{"age", age}});
    customers.push_back(id);
  }

  std::size_t item_no = 0, package_no = 0;
  double t_order = static_cast<double>(config.start);
  for (std::size_t o = 1; o <= config.num_orders; ++o) {
    t_order += config.order_interarrival_seconds * rng.uniform(0.5, 1.5);
    const auto order = detail::padded("o", o);
    const auto& customer = customers[rng.below(customers.size())];

    double u = rng.uniform(), acc = 0;
    const PriorityClass* prio = &config.priorities.back();
    for (const auto& p : config.priorities) {
      acc += p.probability;
      if (u < acc) {
        prio = &p;
        break;
      }
    }
    const double slow = prio->delay_multiplier;

    std::size_t n_items = config.items_per_order_min +
                          rng.below(config.items_per_order_max - config.items_per_order_min + 1);
    std::vector<std::string> items;
    for (std::size_t i = 0; i < n_items; ++i) {
      auto id = detail::padded("i", ++item_no);
      b.object(id, "items", {{"color", config.colors[rng.below(config.colors.size())]}});
      items.push_back(id);
    }
    double price = detail::round_to(rng.uniform(config.price_min, config.price_max), 0.01);
    b.object(order, "orders", {{"price", price}});

    std::set<std::string> all(items.begin(), items.end());
    all.insert(order);
    all.insert(customer);
    double t = t_order;
    b.event("place order", t, all);

    for (const auto& item : items) {
      t += slow * rng.uniform(600, 3600);
      if (rng.bernoulli(config.out_of_stock_prob)) {
        b.event("item out of stock", t, {item, order, customer});
        t += slow * rng.uniform(1800, 7200);
        b.event("reorder item", t, {item, order, customer});
        t += slow * rng.uniform(24 * 3600.0, 72 * 3600.0);
      }
      b.event("pick item", t, {item, order, customer});
    }
    t += slow * rng.uniform(600, 3600);
    b.event("confirm order", t, all);

    double t_pay = t + slow * rng.uniform(3600, 48 * 3600.0);
    if (rng.bernoulli(config.payment_reminder_prob)) {
      b.event("payment reminder", t_pay, {order, customer});
      t_pay += rng.uniform(24 * 3600.0, 96 * 3600.0);
    }
    b.event("pay order", t_pay, {order, customer});

    // Packaging starts once the order is confirmed, independent of payment.
    double t_pack = t;
    for (std::size_t first = 0; first < items.size();) {
      std::size_t take = 1 + rng.below(std::min(config.items_per_package_max, items.size() - first));
      auto pkg = detail::padded("p", ++package_no);
      double weight = detail::round_to(rng.uniform(config.weight_min, config.weight_max), 0.1);
      b.object(pkg, "packages", {{"weight", weight}});
      const bool heavy = weight > config.heavy_threshold;

      std::set<std::string> rel(items.begin() + first, items.begin() + first + take);
      rel.insert({pkg, order, customer});
      first += take;

      t_pack += rng.uniform(600, 3600);
      double tp = t_pack;
      b.event("create package", tp, rel);
      tp += rng.uniform(config.send_seconds_min, config.send_seconds_max);
      b.event("send package", tp, rel);
      auto attempt = [&] {
        double d = rng.uniform(config.delivery_seconds_min, config.delivery_seconds_max);
        return heavy ? 2 * d : d;
      };
      if (rng.bernoulli(heavy ? config.failure_prob_heavy : config.failure_prob_light)) {
        tp += attempt();
        b.event("failed delivery", tp, rel);
      }
      tp += attempt();
      b.event("package delivered", tp, rel);
    }
  }
  return b.finish();
}

/// Single object type "cases"; every case runs a -> b -> c -> d with
/// exactly `gap_seconds` between consecutive events. Cases start one day
/// apart so no two events share a timestamp across cases.
inline OcelLog generate_toy_linear(std::size_t n_cases, std::int64_t gap_seconds) {
  detail::Builder b;
  const double day = 86400.0;
  for (std::size_t i = 1; i <= n_cases; ++i) {
    auto id = detail::padded("k", i);
    b.object(id, "cases", {});
    double t = 1577836800.0 + static_cast<double>(i) * day;
    for (const char* a : {"a", "b", "c", "d"}) {
      b.event(a, t, {id});
      t += static_cast<double>(gap_seconds);
    }
  }
  return b.finish();
}

}  // namespace ocelgan::synth

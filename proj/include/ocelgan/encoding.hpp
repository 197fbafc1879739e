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

// Turning flattened cases into fixed-width event vectors.
//
// Vector layout, left to right:
//
//   [ activity one-hot | categorical one-hot blocks | numeric attrs | elapsed | EOS ]
//
// Categorical blocks and numeric attributes appear in attribute-name order.
// Numeric values and elapsed seconds are min-max normalized into [0, 1]
// using ranges observed on the training cases; anything outside clamps.
// An encoded case ends with one EOS vector: all zeros except the last slot.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocelgan/autodiff.hpp"
#include "ocelgan/error.hpp"
#include "ocelgan/ocel.hpp"
#include "ocelgan/random.hpp"

namespace ocelgan {

using ad::Matrix;

struct Range {
  double min = 0;
  double max = 0;
  bool operator==(const Range&) const = default;
};

/// (v - min) / (max - min), clamped into [0, 1]; 0 for a degenerate range.
inline double normalize(double v, double min, double max) {
  if (!(max > min)) return 0.0;
  return std::clamp((v - min) / (max - min), 0.0, 1.0);
}

inline double denormalize(double u, double min, double max) { return min + u * (max - min); }

struct EncodingSchema {
  std::vector<std::string> activity_vocab;
  std::map<std::string, std::vector<std::string>> categorical_vocabs;
  std::map<std::string, Range> numeric_ranges;
  Range elapsed_range;

  bool operator==(const EncodingSchema&) const = default;

  std::size_t num_activities() const { return activity_vocab.size(); }
  std::size_t categorical_width() const {
    std::size_t w = 0;
    for (const auto& [name, vocab] : categorical_vocabs) w += vocab.size();
    return w;
  }
  std::size_t num_numeric() const { return numeric_ranges.size(); }

  std::size_t categorical_offset() const { return num_activities(); }
  std::size_t numeric_offset() const { return categorical_offset() + categorical_width(); }
  std::size_t elapsed_index() const { return numeric_offset() + num_numeric(); }
  std::size_t eos_index() const { return elapsed_index() + 1; }
  std::size_t vector_width() const { return eos_index() + 1; }

  std::optional<std::size_t> activity_index(const std::string& a) const {
    auto it = std::lower_bound(activity_vocab.begin(), activity_vocab.end(), a);
    if (it == activity_vocab.end() || *it != a) return std::nullopt;
    return static_cast<std::size_t>(it - activity_vocab.begin());
  }

  /// Names of the attributes the schema encodes, in layout order.
  std::vector<std::string> attributes() const {
    std::vector<std::string> out;
    for (const auto& [n, v] : categorical_vocabs) out.push_back(n);
    for (const auto& [n, r] : numeric_ranges) out.push_back(n);
    return out;
  }
};

inline void to_json(nlohmann::json& j, const Range& r) { j = nlohmann::json::array({r.min, r.max}); }
inline void from_json(const nlohmann::json& j, Range& r) {
  r.min = j.at(0).get<double>();
  r.max = j.at(1).get<double>();
}

inline void to_json(nlohmann::json& j, const EncodingSchema& s) {
  j = nlohmann::json{{"activity_vocab", s.activity_vocab},
                     {"categorical_vocabs", s.categorical_vocabs},
                     {"numeric_ranges", s.numeric_ranges},
                     {"elapsed_range", s.elapsed_range},
                     {"vector_width", s.vector_width()}};
}

inline void from_json(const nlohmann::json& j, EncodingSchema& s) {
  j.at("activity_vocab").get_to(s.activity_vocab);
  j.at("categorical_vocabs").get_to(s.categorical_vocabs);
  j.at("numeric_ranges").get_to(s.numeric_ranges);
  j.at("elapsed_range").get_to(s.elapsed_range);
}

/// Seconds since the preceding event; the first entry is 0.
inline std::vector<double> elapsed_times(const std::vector<Timestamp>& timestamps) {
  std::vector<double> out;
  out.reserve(timestamps.size());
  for (std::size_t k = 0; k < timestamps.size(); ++k) {
    if (k == 0) {
      out.push_back(0.0);
      continue;
    }
    auto d = timestamps[k] - timestamps[k - 1];
    if (d < 0) {
      throw Error(errc::kNegativeElapsed, "timestamps decrease at position " + std::to_string(k),
                  {{"position", std::to_string(k)}});
    }
    out.push_back(static_cast<double>(d));
  }
  return out;
}

inline std::vector<double> elapsed_times(const FlattenedCase& c) {
  std::vector<Timestamp> ts;
  ts.reserve(c.events.size());
  for (const auto& e : c.events) ts.push_back(e.timestamp);
  return elapsed_times(ts);
}

/// Builds vocabularies and ranges from `cases` (the training cases).
/// Attributes in `selected_attrs` that never occur on any case are skipped.
/// An attribute is numeric when every observed value is numeric.
inline EncodingSchema build_schema(const std::vector<FlattenedCase>& cases,
                                   const std::vector<std::string>& selected_attrs) {
  if (cases.empty()) throw Error(errc::kEmptyInput, "cannot build a schema from zero cases");
  EncodingSchema s;
  std::set<std::string> activities;
  bool have_elapsed = false;
  for (const auto& c : cases) {
    for (const auto& e : c.events) activities.insert(e.activity);
    for (double l : elapsed_times(c)) {
      if (!have_elapsed) {
        s.elapsed_range = {l, l};
        have_elapsed = true;
      }
      s.elapsed_range.min = std::min(s.elapsed_range.min, l);
      s.elapsed_range.max = std::max(s.elapsed_range.max, l);
    }
  }
  s.activity_vocab.assign(activities.begin(), activities.end());

  for (const auto& name : std::set<std::string>(selected_attrs.begin(), selected_attrs.end())) {
    std::set<std::string> strings;
    std::optional<Range> range;
    for (const auto& c : cases) {
      auto it = c.attributes.find(name);
      if (it == c.attributes.end()) continue;
      if (auto* d = std::get_if<double>(&it->second)) {
        if (!range) range = Range{*d, *d};
        range->min = std::min(range->min, *d);
        range->max = std::max(range->max, *d);
      } else {
        strings.insert(std::get<std::string>(it->second));
      }
    }
    if (!strings.empty()) {
      // Mixed numeric and string values are treated as categorical.
      for (const auto& c : cases) {
        auto it = c.attributes.find(name);
        if (it != c.attributes.end()) strings.insert(value_to_string(it->second));
      }
      s.categorical_vocabs[name].assign(strings.begin(), strings.end());
    } else if (range) {
      s.numeric_ranges[name] = *range;
    }
  }
  return s;
}

/// Writes the attribute part of an event vector for one case's attributes.
/// Unknown categorical values leave their block all zero; missing numeric
/// values encode as 0.
inline void encode_attributes(std::span<double> row, const EncodingSchema& s,
                              const std::map<std::string, AttributeValue>& attrs) {
  std::size_t off = s.categorical_offset();
  for (const auto& [name, vocab] : s.categorical_vocabs) {
    if (auto it = attrs.find(name); it != attrs.end()) {
      auto v = value_to_string(it->second);
      auto pos = std::lower_bound(vocab.begin(), vocab.end(), v);
      if (pos != vocab.end() && *pos == v) row[off + static_cast<std::size_t>(pos - vocab.begin())] = 1.0;
    }
    off += vocab.size();
  }
  for (const auto& [name, range] : s.numeric_ranges) {
    double u = 0.0;
    if (auto it = attrs.find(name); it != attrs.end()) {
      if (auto* d = std::get_if<double>(&it->second)) u = normalize(*d, range.min, range.max);
    }
    row[off++] = u;
  }
}

/// A raw event as typed into the prediction interface.
struct RawEvent {
  std::string activity;
  Timestamp timestamp = 0;
};

/// Encodes events without an EOS terminator: one row per event.
inline Matrix encode_events(const std::vector<RawEvent>& events,
                            const std::map<std::string, AttributeValue>& attrs,
                            const EncodingSchema& s) {
  std::vector<Timestamp> ts;
  for (const auto& e : events) ts.push_back(e.timestamp);
  auto elapsed = elapsed_times(ts);
  Matrix m(events.size(), s.vector_width());
  for (std::size_t k = 0; k < events.size(); ++k) {
    auto idx = s.activity_index(events[k].activity);
    if (!idx) {
      throw Error(errc::kUnknownActivity, "unknown activity '" + events[k].activity + "'",
                  {{"activity", events[k].activity}});
    }
    auto row = m.row(k);
    row[*idx] = 1.0;
    encode_attributes(row, s, attrs);
    row[s.elapsed_index()] = normalize(elapsed[k], s.elapsed_range.min, s.elapsed_range.max);
  }
  return m;
}

struct EncodedCase {
  std::string case_id;
  Matrix vectors;  // one row per event plus the trailing EOS row

  std::size_t num_events() const { return vectors.rows() - 1; }
};

inline Matrix eos_vector(const EncodingSchema& s) {
  Matrix m(1, s.vector_width());
  m[s.eos_index()] = 1.0;
  return m;
}

inline EncodedCase encode_case(const FlattenedCase& c, const EncodingSchema& s) {
  std::vector<RawEvent> events;
  for (const auto& e : c.events) events.push_back({e.activity, e.timestamp});
  Matrix body = encode_events(events, c.attributes, s);
  Matrix all(body.rows() + 1, s.vector_width());
  std::copy(body.values().begin(), body.values().end(), all.values().begin());
  all(body.rows(), s.eos_index()) = 1.0;
  return {c.object_id, std::move(all)};
}

/// Human-readable reading of one event vector.
struct DecodedEvent {
  bool eos = false;
  std::string activity;
  double elapsed_normalized = 0;
  double elapsed_seconds = 0;
};

/// Reads a vector back: activity by argmax of the activity block, EOS when
/// the EOS slot outweighs every activity slot.
inline DecodedEvent decode_vector(std::span<const double> row, const EncodingSchema& s) {
  DecodedEvent d;
  std::size_t best = 0;
  for (std::size_t a = 1; a < s.num_activities(); ++a) {
    if (row[a] > row[best]) best = a;
  }
  d.eos = s.num_activities() == 0 || row[s.eos_index()] > row[best];
  if (!d.eos) d.activity = s.activity_vocab[best];
  d.elapsed_normalized = row[s.elapsed_index()];
  d.elapsed_seconds = denormalize(d.elapsed_normalized, s.elapsed_range.min, s.elapsed_range.max);
  return d;
}

struct PrefixSuffixPair {
  std::string case_id;
  Matrix prefix;  // k rows, no EOS
  Matrix suffix;  // remaining events plus the EOS row
};

inline Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t count) {
  Matrix out(count, m.cols());
  std::copy(m.values().begin() + static_cast<std::ptrdiff_t>(begin * m.cols()),
            m.values().begin() + static_cast<std::ptrdiff_t>((begin + count) * m.cols()),
            out.values().begin());
  return out;
}

/// Every split point of a case: prefixes of length 1..n-1, each paired with
/// the disjoint remainder (which always ends in EOS).
inline std::vector<PrefixSuffixPair> make_pairs(const EncodedCase& c) {
  std::size_t n = c.num_events();
  if (n < 2) {
    throw Error(errc::kCaseTooShort, "case '" + c.case_id + "' needs at least two events",
                {{"case", c.case_id}});
  }
  std::vector<PrefixSuffixPair> out;
  out.reserve(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    out.push_back({c.case_id, slice_rows(c.vectors, 0, k), slice_rows(c.vectors, k, n + 1 - k)});
  }
  return out;
}

/// Pairs sharing both prefix and suffix length; the unit of batching.
struct Partition {
  std::size_t prefix_len = 0;
  std::size_t suffix_len = 0;
  std::vector<PrefixSuffixPair> pairs;

  /// Row `t` of every pair's prefix (or suffix), stacked into a batch.
  Matrix prefix_step(std::size_t t) const { return stack(t, true); }
  Matrix suffix_step(std::size_t t) const { return stack(t, false); }

 private:
  Matrix stack(std::size_t t, bool prefix) const {
    std::size_t w = pairs.front().prefix.cols();
    Matrix m(pairs.size(), w);
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      auto src = (prefix ? pairs[b].prefix : pairs[b].suffix).row(t);
      std::copy(src.begin(), src.end(), m.row(b).begin());
    }
    return m;
  }
};

inline std::vector<Partition> partition_pairs(std::vector<PrefixSuffixPair> pairs) {
  std::map<std::pair<std::size_t, std::size_t>, Partition> groups;
  for (auto& p : pairs) {
    auto key = std::make_pair(p.prefix.rows(), p.suffix.rows());
    auto& g = groups[key];
    g.prefix_len = key.first;
    g.suffix_len = key.second;
    g.pairs.push_back(std::move(p));
  }
  std::vector<Partition> out;
  for (auto& [k, g] : groups) out.push_back(std::move(g));
  return out;
}

struct Split {
  std::vector<std::string> case_ids;
  std::vector<Partition> partitions;

  std::size_t num_pairs() const {
    std::size_t n = 0;
    for (const auto& p : partitions) n += p.pairs.size();
    return n;
  }
};

struct DatasetBundle {
  EncodingSchema schema;
  std::vector<std::string> attributes;  // as requested
  std::uint64_t seed = 0;
  Split train;
  Split validation;
  Split test;
};

struct SplitSizes {
  std::size_t train = 0, validation = 0, test = 0;
};

/// 70/10/20 by case count: train and validation round down, test takes the
/// remainder.
inline SplitSizes split_sizes(std::size_t n) {
  SplitSizes s;
  s.train = n * 7 / 10;
  s.validation = n / 10;
  s.test = n - s.train - s.validation;
  return s;
}

struct CaseSplit {
  std::vector<FlattenedCase> train, validation, test;
};

/// Shuffles cases by `seed` and splits them 70/10/20. Cases with fewer than
/// two events yield no pairs and are dropped first.
inline CaseSplit split_cases(const std::vector<FlattenedCase>& all_cases, std::uint64_t seed) {
  std::vector<const FlattenedCase*> cases;
  for (const auto& c : all_cases) {
    if (c.events.size() >= 2) cases.push_back(&c);
  }
  if (cases.size() < 3) {
    throw Error(errc::kTooFewCases, "need at least 3 cases with two or more events, got " +
                                        std::to_string(cases.size()));
  }
  Rng rng(seed);
  rng.shuffle(cases);
  auto sizes = split_sizes(cases.size());
  auto take = [&](std::size_t begin, std::size_t count) {
    std::vector<FlattenedCase> out;
    for (std::size_t i = begin; i < begin + count; ++i) out.push_back(*cases[i]);
    return out;
  };
  return {take(0, sizes.train), take(sizes.train, sizes.validation),
          take(sizes.train + sizes.validation, sizes.test)};
}

/// Encodes cases with a fixed schema and groups their pairs into partitions.
inline Split encode_split(const std::vector<FlattenedCase>& cases, const EncodingSchema& schema) {
  Split split;
  std::vector<PrefixSuffixPair> pairs;
  for (const auto& c : cases) {
    if (c.events.size() < 2) continue;
    split.case_ids.push_back(c.object_id);
    auto ps = make_pairs(encode_case(c, schema));
    for (auto& p : ps) pairs.push_back(std::move(p));
  }
  split.partitions = partition_pairs(std::move(pairs));
  return split;
}

/// Splits cases 70/10/20 by `seed`, fits the schema on the training cases,
/// and encodes all three splits with it.
inline DatasetBundle split_and_partition(const std::vector<FlattenedCase>& all_cases,
                                         const std::vector<std::string>& attrs, std::uint64_t seed) {
  auto parts = split_cases(all_cases, seed);
  DatasetBundle bundle;
  bundle.schema = build_schema(parts.train, attrs);
  // The activity vocabulary covers every split so rare activities outside
  // the training cases still encode; value ranges stay train-only.
  std::set<std::string> vocab(bundle.schema.activity_vocab.begin(), bundle.schema.activity_vocab.end());
  for (const auto* split : {&parts.validation, &parts.test}) {
    for (const auto& c : *split) {
      for (const auto& e : c.events) vocab.insert(e.activity);
    }
  }
  bundle.schema.activity_vocab.assign(vocab.begin(), vocab.end());
  bundle.attributes = attrs;
  bundle.seed = seed;
  bundle.train = encode_split(parts.train, bundle.schema);
  bundle.validation = encode_split(parts.validation, bundle.schema);
  bundle.test = encode_split(parts.test, bundle.schema);
  return bundle;
}

}  // namespace ocelgan

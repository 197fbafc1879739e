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

// A trained model on disk is a directory:
//
//   model.bin     parameter checkpoint (generator and discriminator)
//   model.json    schema, schema hash, config, object type, attributes and
//                 validation metrics at the checkpoint
//   history.csv   per-epoch losses and validation metrics

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocelgan/checkpoint.hpp"
#include "ocelgan/gan.hpp"
#include "ocelgan/io.hpp"

namespace ocelgan {

struct ModelInfo {
  std::string object_type;
  std::vector<std::string> attributes;
  std::optional<std::size_t> best_epoch;
  std::optional<double> val_similarity;
  std::optional<double> val_mae;
  std::string log_hash;
};

inline std::string schema_hash(const EncodingSchema& s) { return io::fnv1a_hex(nlohmann::json(s).dump()); }

inline std::string checkpoint_bytes(gan::GanModel& m) {
  std::vector<ad::NamedMatrix> entries;
  for (auto* p : m.parameters()) entries.push_back({p->name, p->value});
  return ad::encode_checkpoint(entries);
}

inline nlohmann::json model_sidecar(const gan::GanModel& m, const ModelInfo& info) {
  auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"format", 1},
          {"object_type", info.object_type},
          {"attributes", info.attributes},
          {"log_hash", info.log_hash},
          {"schema", m.schema},
          {"schema_hash", schema_hash(m.schema)},
          {"config", m.config},
          {"max_len", m.max_len},
          {"best_epoch", opt(info.best_epoch)},
          {"val_similarity", opt(info.val_similarity)},
          {"val_mae", opt(info.val_mae)}};
}

/// Writes the three files. model.bin and model.json are each replaced
/// atomically, and model.json goes last so a reader that sees it also sees
/// the matching checkpoint.
inline void save_model(const std::filesystem::path& dir, gan::GanModel& m, const ModelInfo& info,
                       const std::vector<gan::EpochRecord>& history) {
  std::filesystem::create_directories(dir);
  io::atomic_write_file(dir / "model.bin", checkpoint_bytes(m));
  io::atomic_write_file(dir / "history.csv", gan::history_csv(history));
  io::atomic_write_file(dir / "model.json", model_sidecar(m, info).dump(2) + "\n");
}

struct LoadedModel {
  gan::GanModel model;
  ModelInfo info;
  nlohmann::json sidecar;
};

inline LoadedModel load_model(const std::filesystem::path& dir) {
  LoadedModel out;
  try {
    out.sidecar = nlohmann::json::parse(io::read_file(dir / "model.json"));
    EncodingSchema schema = out.sidecar.at("schema").get<EncodingSchema>();
    if (out.sidecar.at("schema_hash").get<std::string>() != schema_hash(schema)) {
      throw Error(errc::kBadFormat, "model.json schema hash does not match its schema");
    }
    auto config = out.sidecar.at("config").get<gan::TrainConfig>();
    out.model = gan::GanModel::create(schema, config);
    out.model.max_len = out.sidecar.at("max_len").get<std::size_t>();
    auto& s = out.sidecar;
    out.info.object_type = s.at("object_type").get<std::string>();
    out.info.attributes = s.at("attributes").get<std::vector<std::string>>();
    out.info.log_hash = s.value("log_hash", "");
    if (!s.at("best_epoch").is_null()) out.info.best_epoch = s.at("best_epoch").get<std::size_t>();
    if (!s.at("val_similarity").is_null()) out.info.val_similarity = s.at("val_similarity").get<double>();
    if (!s.at("val_mae").is_null()) out.info.val_mae = s.at("val_mae").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::kBadFormat, std::string("model.json: ") + e.what(), {{"path", dir.string()}});
  }
  ad::load_into(out.model.parameters(), ad::decode_checkpoint(io::read_file(dir / "model.bin")));
  return out;
}

}  // namespace ocelgan

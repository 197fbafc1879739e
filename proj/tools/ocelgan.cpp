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

// ocelgan: inspect OCEL logs, train suffix predictors, evaluate and predict.
// Failures print {code, message, details} JSON on stderr and exit nonzero.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ocelgan/app.hpp"
#include "ocelgan/service.hpp"
#include "ocelgan/synthgen.hpp"

namespace {

using namespace ocelgan;

int fail(const Error& e) {
  std::cerr << app::error_json(e).dump() << std::endl;
  return 1;
}

void emit(const std::optional<std::string>& json_out, const nlohmann::json& j) {
  if (json_out) io::atomic_write_file(*json_out, j.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Object-centric event log suffix prediction with a sequence-to-sequence GAN"};
  cli.require_subcommand(1);

  std::string log_path, object_type, model_dir, prefix_path, config_path, out_path, split = "test";
  std::optional<std::string> json_out;
  std::optional<std::string> type_filter;
  std::vector<std::string> attrs;
  bool json_stdout = false;

  auto* stats = cli.add_subcommand("stats", "Case statistics per object type (after outlier trimming)");
  stats->add_option("--log", log_path, "OCEL JSON file")->required();
  stats->add_option("--object-type", type_filter, "Restrict to one object type");
  stats->add_flag("--json", json_stdout, "Print JSON instead of a table");

  auto* relations = cli.add_subcommand("relations", "Activity by object type relations");
  relations->add_option("--log", log_path, "OCEL JSON file")->required();
  relations->add_flag("--json", json_stdout, "Print JSON instead of a table");
  relations->add_option("--json-out", json_out, "Also write JSON to this file");

  gan::TrainConfig config;
  std::optional<std::string> cache_dir;
  auto* train = cli.add_subcommand("train", "Train a model on one object type");
  train->add_option("--log", log_path, "OCEL JSON file")->required();
  train->add_option("--object-type", object_type, "Case notion")->required();
  train->add_option("--attrs", attrs, "Object attributes to condition on")->delimiter(',');
  train->add_option("--epochs", config.epochs, "Training epochs")->capture_default_str();
  train->add_option("--seed", config.seed, "Seed for splitting, initialization and sampling")->capture_default_str();
  train->add_option("--config", config_path, "JSON file with training config overrides");
  train->add_option("--out", model_dir, "Model directory")->required();
  train->add_option("--cache", cache_dir, "Dataset bundle cache directory");

  auto* eval = cli.add_subcommand("eval", "Evaluate a model on a log");
  eval->add_option("--model", model_dir, "Model directory")->required();
  eval->add_option("--log", log_path, "OCEL JSON file")->required();
  eval->add_option("--split", split, "'test' (held-out split by the model's seed) or 'all'")->capture_default_str();
  eval->add_option("--json-out", json_out, "Write the full report as JSON");
  eval->add_flag("--json", json_stdout, "Print the full report as JSON");

  auto* predict = cli.add_subcommand("predict", "Predict the suffix of a running case");
  predict->add_option("--model", model_dir, "Model directory")->required();
  predict->add_option("--prefix", prefix_path, "Prefix request JSON file")->required();
  predict->add_flag("--json", json_stdout, "Print JSON instead of a table");

  auto* generate = cli.add_subcommand("generate", "Write a synthetic OCEL log");
  generate->add_option("--config", config_path, "Generator config JSON (omit for defaults)");
  generate->add_option("--out", out_path, "Output file")->required();
  std::optional<std::size_t> toy_cases;
  std::int64_t toy_gap = 3600;
  generate->add_option("--toy", toy_cases, "Write the linear a-b-c-d process with this many cases instead");
  generate->add_option("--gap", toy_gap, "Seconds between toy events")->capture_default_str();

  auto* serve = cli.add_subcommand("serve", "Run the HTTP service (OCELGAN_DATA_DIR, OCELGAN_PORT)");
  std::optional<std::string> data_dir;
  std::optional<int> port;
  serve->add_option("--data-dir", data_dir, "Data directory");
  serve->add_option("--port", port, "Port");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return cli.exit(e);
    std::cerr << nlohmann::json{{"code", "UsageError"}, {"message", e.what()}, {"details", nlohmann::json::object()}}.dump()
              << std::endl;
    return 2;
  }

  try {
    if (*stats) {
      auto j = app::stats_json(app::load_log(log_path), type_filter);
      std::cout << (json_stdout ? j.dump() + "\n" : app::stats_table(j));
    } else if (*relations) {
      auto j = app::relations_json(app::load_log(log_path));
      std::cout << (json_stdout ? j.dump() + "\n" : app::relations_table(j));
      emit(json_out, j);
    } else if (*train) {
      if (!config_path.empty()) {
        auto overrides = nlohmann::json::parse(io::read_file(config_path));
        auto epochs = config.epochs;
        auto seed = config.seed;
        overrides.get_to(config);
        // Explicit flags win over the file.
        if (train->count("--epochs")) config.epochs = epochs;
        if (train->count("--seed")) config.seed = seed;
      }
      auto text = io::read_file(log_path);
      auto log = import_ocel_json(text);
      app::TrainRequest req{object_type, attrs, config};
      auto outcome = app::train_model(log, io::fnv1a_hex(export_ocel_json(log)), req, model_dir,
                                      cache_dir ? std::optional<std::filesystem::path>(*cache_dir) : std::nullopt,
                                      [](const gan::EpochRecord& r) {
                                        std::fprintf(stderr, "epoch %zu  L_D %.4f  L_G %.4f", r.epoch, r.loss_d, r.loss_g);
                                        if (r.val_similarity) {
                                          std::fprintf(stderr, "  val S %.4f  val MAE %.4f%s", *r.val_similarity,
                                                       *r.val_mae, r.improved ? "  *" : "");
                                        }
                                        std::fputc('\n', stderr);
                                      });
      std::cout << outcome.summary.dump(2) << std::endl;
    } else if (*eval) {
      auto model = load_model(model_dir);
      auto report = app::evaluate_on_log(model, app::load_log(log_path), split);
      auto j = app::eval_json(report);
      emit(json_out, j);
      if (json_stdout) {
        std::cout << j.dump() << std::endl;
      } else {
        std::cout << EvalReport::csv_header() << '\n' << report.csv_row() << std::endl;
      }
    } else if (*predict) {
      auto model = load_model(model_dir);
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(io::read_file(prefix_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(errc::kMalformedJson, e.what(), {{"path", prefix_path}});
      }
      auto j = app::predict_json(model, app::parse_prefix(body));
      if (json_stdout) {
        std::cout << j.dump() << std::endl;
      } else {
        std::printf("%-24s %-22s\n", "activity", "timestamp");
        for (const auto& row : j.at("suffix")) {
          std::printf("%-24s %-22s\n", row.at("activity").get<std::string>().c_str(),
                      row.at("timestamp").get<std::string>().c_str());
        }
      }
    } else if (*generate) {
      OcelLog log;
      if (toy_cases) {
        log = synth::generate_toy_linear(*toy_cases, toy_gap);
      } else {
        synth::GenConfig gc;
        if (!config_path.empty()) {
          try {
            nlohmann::json::parse(io::read_file(config_path)).get_to(gc);
          } catch (const nlohmann::json::exception& e) {
            throw Error(errc::kInvalidConfig, e.what(), {{"path", config_path}});
          }
        }
        log = synth::generate(gc);
      }
      io::atomic_write_file(out_path, export_ocel_json(log, 1) + "\n");
    } else if (*serve) {
      auto sc = service::ServiceConfig::from_env();
      if (data_dir) sc.data_dir = *data_dir;
      if (port) sc.port = *port;
      service::Service svc(sc);
      std::cerr << "listening on " << sc.host << ":" << sc.port << ", data in " << sc.data_dir << std::endl;
      if (!svc.listen()) throw Error(errc::kIoError, "cannot listen on port " + std::to_string(sc.port));
    }
  } catch (const Error& e) {
    return fail(e);
  } catch (const nlohmann::json::exception& e) {
    return fail(Error(errc::kMalformedJson, e.what()));
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(Error(errc::kIoError, e.what()));
  }
  return 0;
}

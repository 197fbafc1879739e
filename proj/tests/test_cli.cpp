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
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ocelgan/io.hpp"
#include "support.hpp"

namespace ocelgan {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const fs::path& dir, const std::string& args) {
  auto out = dir / "stdout.txt";
  auto err = dir / "stderr.txt";
  std::string cmd = std::string(OCELGAN_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = io::read_file(out);
  r.err = io::read_file(err);
  return r;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::scratch_dir(std::string("cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(CliTest, ToyStats) {
  auto g = run(dir_, "generate --toy 20 --gap 600 --out " + path("toy.json"));
  ASSERT_EQ(g.exit_code, 0) << g.err;
  auto r = run(dir_, "stats --json --log " + path("toy.json"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j.at("events"), 80);
  const auto& s = j.at("object_types").at("cases").at("stats");
  EXPECT_EQ(s.at("count"), 20);
  EXPECT_DOUBLE_EQ(s.at("mean_len").get<double>(), 4.0);
  EXPECT_DOUBLE_EQ(s.at("mean_dur").get<double>(), 1800.0);
  EXPECT_DOUBLE_EQ(s.at("min_dur").get<double>(), 1800.0);

  auto table = run(dir_, "stats --log " + path("toy.json"));
  ASSERT_EQ(table.exit_code, 0);
  EXPECT_NE(table.out.find("cases"), std::string::npos);
}

TEST_F(CliTest, FragmentStatsAndRelations) {
  write(dir_ / "frag.json", testing::fragment_log_json());
  auto r = run(dir_, "stats --json --object-type order --log " + path("frag.json"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("object_types").size(), 1u);

  auto rel = run(dir_, "relations --json --log " + path("frag.json") + " --json-out " + path("rel.json"));
  ASSERT_EQ(rel.exit_code, 0) << rel.err;
  EXPECT_EQ(json::parse(rel.out), json::parse(io::read_file(dir_ / "rel.json")));
}

TEST_F(CliTest, GenerateDefaultIsDeterministic) {
  ASSERT_EQ(run(dir_, "generate --out " + path("a.json")).exit_code, 0);
  ASSERT_EQ(run(dir_, "generate --out " + path("b.json")).exit_code, 0);
  EXPECT_EQ(io::read_file(dir_ / "a.json"), io::read_file(dir_ / "b.json"));
}

TEST_F(CliTest, TrainEvalPredictToy) {
  ASSERT_EQ(run(dir_, "generate --toy 60 --gap 3600 --out " + path("toy.json")).exit_code, 0);
  write(dir_ / "cfg.json",
        json{{"hidden_size", 16}, {"num_layers", 1}, {"learning_rate", 5e-3}, {"validation_every", 5}}.dump());
  auto t = run(dir_, "train --log " + path("toy.json") + " --object-type cases --epochs 40 --seed 1 --config " +
                         path("cfg.json") + " --out " + path("model"));
  ASSERT_EQ(t.exit_code, 0) << t.err;
  auto summary = json::parse(t.out);
  EXPECT_EQ(summary.at("epochs"), 40);
  EXPECT_TRUE(fs::exists(dir_ / "model" / "model.json"));
  EXPECT_NE(t.err.find("epoch 40"), std::string::npos);

  auto e = run(dir_, "eval --json --split all --model " + path("model") + " --log " + path("toy.json"));
  ASSERT_EQ(e.exit_code, 0) << e.err;
  auto report = json::parse(e.out);
  EXPECT_GE(report.at("mean_similarity").get<double>(), 0.95);

  auto csv = run(dir_, "eval --model " + path("model") + " --log " + path("toy.json"));
  ASSERT_EQ(csv.exit_code, 0) << csv.err;
  EXPECT_EQ(csv.out.substr(0, csv.out.find('\n')), "mean_similarity,mae_normalized,num_pairs,num_timestamps");

  write(dir_ / "prefix.json",
        json{{"events", {{{"activity", "a"}, {"timestamp", "2020-03-01T00:00:00Z"}}}}}.dump());
  auto p = run(dir_, "predict --json --model " + path("model") + " --prefix " + path("prefix.json"));
  ASSERT_EQ(p.exit_code, 0) << p.err;
  auto suffix = json::parse(p.out).at("suffix");
  std::vector<std::string> acts;
  for (const auto& s : suffix) acts.push_back(s.at("activity"));
  EXPECT_EQ(acts, (std::vector<std::string>{"b", "c", "d"}));
}

TEST_F(CliTest, TrainingRepeatsAcrossProcesses) {
  ASSERT_EQ(run(dir_, "generate --out " + path("log.json")).exit_code, 0);
  write(dir_ / "cfg.json", json{{"hidden_size", 8}, {"num_layers", 2}, {"validation_every", 2}}.dump());
  for (const char* out : {"m1", "m2"}) {
    auto t = run(dir_, "train --log " + path("log.json") + " --object-type packages --attrs weight --epochs 4 --seed 5 "
                        "--config " + path("cfg.json") + " --out " + path(out));
    ASSERT_EQ(t.exit_code, 0) << t.err;
  }
  EXPECT_EQ(io::read_file(dir_ / "m1" / "history.csv"), io::read_file(dir_ / "m2" / "history.csv"));
  EXPECT_EQ(io::read_file(dir_ / "m1" / "model.bin"), io::read_file(dir_ / "m2" / "model.bin"));
}

TEST_F(CliTest, ErrorsAreJsonOnStderr) {
  auto missing = run(dir_, "stats --log " + path("nope.json"));
  EXPECT_EQ(missing.exit_code, 1);
  auto j = json::parse(missing.err);
  EXPECT_EQ(j.at("code"), "IoError");
  EXPECT_TRUE(j.at("details").is_object());

  write(dir_ / "bad.json", "{\"objectTypes\": [");
  auto bad = run(dir_, "stats --log " + path("bad.json"));
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_EQ(json::parse(bad.err).at("code"), "MalformedJson");

  write(dir_ / "frag.json", testing::fragment_log_json());
  auto unknown = run(dir_, "stats --object-type trucks --log " + path("frag.json"));
  EXPECT_EQ(unknown.exit_code, 1);
  EXPECT_EQ(json::parse(unknown.err).at("code"), "UnknownObjectType");

  auto usage = run(dir_, "stats");
  EXPECT_EQ(usage.exit_code, 2);
  EXPECT_EQ(json::parse(usage.err).at("code"), "UsageError");
  EXPECT_EQ(run(dir_, "frobnicate").exit_code, 2);
}

}  // namespace
}  // namespace ocelgan

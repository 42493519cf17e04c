// Copyright 2026 The Looking Authors
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

#include <fstream>

#include "looking/checkpoint.hpp"
#include "looking/cli.hpp"
#include "looking/fileutil.hpp"
#include "oracles.hpp"

namespace looking
{
namespace
{

using nlohmann::json;

int run(std::vector<std::string> args)
{
  args.insert(args.begin(), "looking");
  args.insert(args.begin() + 1, {"--log-level", "warn"});
  std::vector<const char *> argv;
  for (const auto & a : args) {
    argv.push_back(a.c_str());
  }
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::vector<std::string> lines(const std::filesystem::path & p)
{
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    out.push_back(line);
  }
  return out;
}

class CliTest : public ::testing::Test
{
protected:
  static void SetUpTestSuite()
  {
    dir_ = new testing::TempDir();
    data_ = (*dir_ / "data.jsonl").string();
    ckpt_ = (*dir_ / "model.json").string();
    ASSERT_EQ(run({"synth", "--n-images", "60", "--seed", "4", "--out", data_}), kExitOk);
    ASSERT_EQ(run({"train", "--data", data_, "--out", ckpt_, "--epochs", "2", "--history", (*dir_ / "h.jsonl").string()}), kExitOk);
  }

  static void TearDownTestSuite() { delete dir_; }

  static testing::TempDir * dir_;
  static std::string data_;
  static std::string ckpt_;
};

testing::TempDir * CliTest::dir_ = nullptr;
std::string CliTest::data_;
std::string CliTest::ckpt_;

TEST_F(CliTest, SynthIsByteIdentical)
{
  const auto again = (*dir_ / "again.jsonl").string();
  ASSERT_EQ(run({"synth", "--n-images", "60", "--seed", "4", "--out", again}), kExitOk);
  EXPECT_EQ(read_file(again), read_file(data_));
  EXPECT_EQ(lines(again).size(), 60U);
}

TEST_F(CliTest, TrainWritesHistoryAndCheckpoint)
{
  const auto history = lines(*dir_ / "h.jsonl");
  ASSERT_EQ(history.size(), 2U);
  const json e = json::parse(history[1]);
  EXPECT_EQ(e.at("epoch"), 2);
  for (const char * key : {"train_loss", "val_ap", "elapsed_ms"}) {
    EXPECT_TRUE(e.contains(key)) << key;
  }
  const Checkpoint ckpt = load_checkpoint(ckpt_);
  EXPECT_EQ(ckpt.params.arch.input_dim, 51U);
}

TEST_F(CliTest, TrainHeadSubset)
{
  const auto out = (*dir_ / "head.json").string();
  ASSERT_EQ(run({"train", "--data", data_, "--out", out, "--epochs", "1", "--subset", "head"}), kExitOk);
  const Checkpoint ckpt = load_checkpoint(out);
  EXPECT_EQ(ckpt.subset, KeypointSubset::Head);
  EXPECT_EQ(ckpt.params.arch.input_dim, 15U);
}

TEST_F(CliTest, EvalReport)
{
  const auto report = (*dir_ / "report.json").string();
  ASSERT_EQ(run({"eval", "--data", data_, "--ckpt", ckpt_, "--report", report, "--tag", "synth"}), kExitOk);
  const json j = json::parse(read_file(report));
  EXPECT_EQ(j.at("dataset"), "synth");
  EXPECT_EQ(j.at("ap_seeds").size(), 10U);
  EXPECT_EQ(j.at("recall_iou50"), 1.0);
  EXPECT_EQ(j.at("quartiles").size(), 4U);

  ASSERT_EQ(run({"eval", "--data", data_, "--ckpt", ckpt_, "--report", report, "--no-quartiles"}), kExitOk);
  EXPECT_TRUE(json::parse(read_file(report)).at("quartiles").empty());
}

TEST_F(CliTest, EvalStdoutIsJsonOrTable)
{
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run({"eval", "--data", data_, "--ckpt", ckpt_, "--no-quartiles"}), kExitOk);
  const std::string json_out = ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(json::parse(json_out).at("ap_seeds").size(), 10U);

  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run({"eval", "--data", data_, "--ckpt", ckpt_, "--table", "--tag", "synth"}), kExitOk);
  const std::string table = ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(table.rfind("dataset", 0), 0U);
  EXPECT_NE(table.find("synth"), std::string::npos);
  EXPECT_EQ(table.find('{'), std::string::npos);
}

TEST_F(CliTest, PredictAndSaliency)
{
  const auto pred = (*dir_ / "pred.jsonl").string();
  ASSERT_EQ(run({"predict", "--data", data_, "--ckpt", ckpt_, "--out", pred, "--split", "test"}), kExitOk);
  const auto rows = lines(pred);
  ASSERT_FALSE(rows.empty());
  const json r = json::parse(rows[0]);
  EXPECT_TRUE(r.contains("image_id"));
  EXPECT_TRUE(r.contains("instance_index"));
  const double s = r.at("score").get<double>();
  EXPECT_EQ(r.at("pre_label"), s >= 0.5 ? "looking" : "not_looking");

  const auto sal = (*dir_ / "sal.csv").string();
  ASSERT_EQ(run({"saliency", "--data", data_, "--ckpt", ckpt_, "--out", sal}), kExitOk);
  const auto csv = lines(sal);
  ASSERT_EQ(csv.size(), 18U);
  EXPECT_EQ(csv[0], "keypoint_name,impact,impact_normalized");
  EXPECT_EQ(csv[1].rfind("nose,", 0), 0U);
}

TEST_F(CliTest, ConvertCanonicalRoundTrips)
{
  const auto out = (*dir_ / "conv.jsonl").string();
  ASSERT_EQ(run({"convert", "--layout", "canonical", "--input", data_, "--out", out}), kExitOk);
  EXPECT_EQ(read_file(out), read_file(data_));
}

TEST_F(CliTest, ValidationErrorsExitOne)
{
  EXPECT_EQ(run({"synth", "--bogus"}), kExitValidation);
  EXPECT_EQ(run({"frobnicate"}), kExitValidation);
  EXPECT_EQ(run({"eval", "--data", (*dir_ / "missing.jsonl").string(), "--ckpt", ckpt_}), kExitValidation);
  EXPECT_EQ(run({"train", "--data", data_, "--out", (*dir_ / "x.json").string(), "--subset", "legs"}), kExitValidation);
  EXPECT_EQ(run({"train", "--data", data_, "--out", (*dir_ / "x.json").string(), "--lr", "-1"}), kExitValidation);
  EXPECT_EQ(run({"synth", "--out", (*dir_ / "y.jsonl").string(), "--noise", "-2"}), kExitValidation);

  const auto bad = (*dir_ / "bad.jsonl").string();
  write_file_atomic(bad, "{\"image_id\": 1}\n");
  EXPECT_EQ(run({"eval", "--data", bad, "--ckpt", ckpt_}), kExitValidation);
  EXPECT_EQ(run({"eval", "--data", data_, "--ckpt", bad}), kExitValidation);
  EXPECT_EQ(run({"--help"}), kExitOk);
}

TEST_F(CliTest, StrictRejectsUnknownFields)
{
  auto text = read_file(data_);
  text.insert(1, "\"camera\":\"front\",");
  const auto extra = (*dir_ / "extra.jsonl").string();
  write_file_atomic(extra, text);
  const auto report = (*dir_ / "r2.json").string();
  EXPECT_EQ(run({"eval", "--data", extra, "--ckpt", ckpt_, "--report", report}), kExitOk);
  EXPECT_EQ(run({"--strict", "eval", "--data", extra, "--ckpt", ckpt_, "--report", report}), kExitValidation);
}

TEST_F(CliTest, ServeWithCorruptStoreExitsTwo)
{
  const auto store = (*dir_ / "store.json").string();
  write_file_atomic(store, "garbage");
  EXPECT_EQ(run({"serve", "--store", store, "--port", "0"}), kExitRuntime);
}

}  // namespace
}  // namespace looking

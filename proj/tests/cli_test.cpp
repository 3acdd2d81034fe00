/* Copyright 2026 The LWA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "lwa/layer_spec.hpp"
#include "lwa/lwa.hpp"
#include "lwa/mixcond.hpp"
#include "lwa/raster_io.hpp"
#include "lwa/synthetic.hpp"
#include "test_util.hpp"

namespace lwa {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::CommandResult;
using testing::TempDir;

class CliTest : public ::testing::Test {
 protected:
  CommandResult cli(const std::string& args, const std::string& env = "") {
    return testing::run("env -u LWA_LOG_LEVEL -u LWA_BACKEND_ENDPOINT " + env + " " +
                            std::string(LWA_CLI_PATH) + " " + args,
                        dir_.path());
  }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  fs::path write_frame(const std::string& name, std::uint64_t seed) {
    const SyntheticScene scene = make_scene(PixelDomain{36, 64}, seed, spec_);
    save_stack(dir_ / name, scene.frame);
    return dir_ / name;
  }

  TempDir dir_;
  LayerSpec spec_ = LayerSpec::default_spec();
};

TEST_F(CliTest, MissingInputReportsJsonError) {
  const auto r = cli("decompose --depth " + p("nope.lwa1") + " --out " + p("o"));
  EXPECT_NE(r.status, 0);
  ASSERT_FALSE(r.err.empty());
  const json e = json::parse(r.err.substr(0, r.err.find('\n')));
  EXPECT_EQ(e["level"], "error");
  EXPECT_TRUE(e.contains("code"));
  EXPECT_TRUE(e.contains("message"));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").status, 2);
  EXPECT_EQ(cli("decompose --no-such-flag").status, 2);
}

TEST_F(CliTest, DecomposeComposeRoundTrip) {
  const fs::path frame = write_frame("frame", 1);
  ASSERT_EQ(cli("decompose --input " + frame.string() + " --out " + p("lwa")).status, 0);
  ASSERT_EQ(cli("compose --lwa " + p("lwa") + " --out " + p("back")).status, 0);
  EXPECT_EQ(load_stack(dir_ / "back"), load_stack(frame));

  ASSERT_EQ(cli("decompose --depth " + (frame / "depth.lwa1").string() + " --semantic " +
                (frame / "semantic.lwa1").string() + " --out " + p("d") + " --modality depth")
                .status,
            0);
  EXPECT_EQ(load_condition(dir_ / "d" / "depth.lwa1", Modality::kDepth),
            load_stack(frame).at(Modality::kDepth));
  EXPECT_FALSE(fs::exists(dir_ / "d" / "semantic.lwa1"));
}

TEST_F(CliTest, RefineWithMockPreservesLayers) {
  const fs::path frame = write_frame("frame", 2);
  ASSERT_EQ(cli("decompose --input " + frame.string() + " --out " + p("lwa")).status, 0);
  auto r = cli("refine --lwa " + p("lwa") + " --out " + p("hard") + " --mock constant-fill");
  ASSERT_EQ(r.status, 0) << r.err;
  const Lwa src = load_lwa(dir_ / "lwa");
  const Lwa hard = load_lwa(dir_ / "hard");
  EXPECT_EQ(hard.at(Role::kTrafficParticipants), src.at(Role::kTrafficParticipants));
  EXPECT_EQ(hard.at(Role::kMapLayout), src.at(Role::kMapLayout));

  r = cli("refine --lwa " + p("lwa") + " --out " + p("soft") + " --mock constant-fill --no-hard-splice");
  ASSERT_EQ(r.status, 0) << r.err;
  const Lwa soft = load_lwa(dir_ / "soft");
  EXPECT_EQ(soft.at(Role::kMapLayout).mask, src.at(Role::kMapLayout).mask);

  const std::string stdio = std::string("stdio:") + LWA_CLI_PATH + " mock-backend --mode identity";
  r = cli("refine --lwa " + p("lwa") + " --out " + p("ctx") +
              " --with-context --panel-height 36 --panel-width 64",
          "LWA_BACKEND_ENDPOINT='" + stdio + "'");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(compose(load_lwa(dir_ / "ctx")), compose(src));
}

TEST_F(CliTest, CurateIsByteIdentical) {
  write_scenario_tree(dir_ / "tree", {2, 6, 10.0, PixelDomain{24, 32}, {}}, 3, spec_);
  const std::string base = "curate --root " + p("tree") + " --with-prompts --seed 9 --out ";
  ASSERT_EQ(cli(base + p("a.json")).status, 0);
  ASSERT_EQ(cli(base + p("b.json")).status, 0);
  EXPECT_EQ(testing::slurp(dir_ / "a.json"), testing::slurp(dir_ / "b.json"));
  const json m = json::parse(testing::slurp(dir_ / "a.json"));
  EXPECT_EQ(m["seed"], 9);
  EXPECT_EQ(m["samples"].size(), 12u);
  EXPECT_TRUE(m["samples"][0]["prompt"].is_string());

  ASSERT_EQ(cli("curate --root " + p("tree") + " --target-rate 5 --clip-len 2 --out " + p("c.json")).status, 0);
  EXPECT_EQ(json::parse(testing::slurp(dir_ / "c.json"))["samples"].size(), 6u);
  EXPECT_EQ(json::parse(testing::slurp(dir_ / "c.video.json"))["clips"].size(), 2u);

  auto r = cli("stats --manifest " + p("a.json"));
  ASSERT_EQ(r.status, 0) << r.err;
  const json stats = json::parse(r.out);
  std::int64_t sum = 0;
  for (const auto& [name, n] : stats["classes"].items()) sum += n.get<std::int64_t>();
  EXPECT_EQ(stats["total"], sum);
  EXPECT_GT(sum, 0);
}

TEST_F(CliTest, ConfigEnvFlagPrecedence) {
  std::ofstream(dir_ / "cfg.json") << R"({"prompts": {"count": 3}, "seed": 4})";
  auto r = cli("--config " + p("cfg.json") + " prompts");
  ASSERT_EQ(r.status, 0) << r.err;
  json j = json::parse(r.out);
  EXPECT_EQ(j["prompts"].size(), 3u);
  EXPECT_EQ(j["seed"], 4);
  r = cli("--config " + p("cfg.json") + " prompts --count 5 --seed 6");
  j = json::parse(r.out);
  EXPECT_EQ(j["prompts"].size(), 5u);
  EXPECT_EQ(j["seed"], 6);

  std::ofstream(dir_ / "bad.json") << R"({"log-level": "bogus"})";
  EXPECT_EQ(cli("--config " + p("bad.json") + " prompts").status, 1);
  EXPECT_EQ(cli("--config " + p("bad.json") + " prompts", "LWA_LOG_LEVEL=warn").status, 0);
  EXPECT_EQ(cli("--config " + p("bad.json") + " prompts --log-level warn", "LWA_LOG_LEVEL=bogus")
                .status,
            0);
  EXPECT_EQ(cli("prompts", "LWA_LOG_LEVEL=bogus").status, 1);
}

TEST_F(CliTest, TrainXiIsSeeded) {
  const std::string base = "train-xi --synthetic --c-in 6 --c-out 3 --cells 50 --steps 20 ";
  ASSERT_EQ(cli(base + "--lr 0 --out " + p("flat")).status, 0);
  const json flat = json::parse(testing::slurp(dir_ / "flat" / "loss_trace.json"));
  ASSERT_EQ(flat["trace"].size(), 20u);
  for (const auto& v : flat["trace"]) EXPECT_EQ(v, flat["trace"][0]);

  ASSERT_EQ(cli(base + "--lr 1 --seed 7 --out " + p("a")).status, 0);
  ASSERT_EQ(cli(base + "--lr 1 --seed 7 --out " + p("b")).status, 0);
  EXPECT_EQ(testing::slurp(dir_ / "a" / "weight.lwa1"), testing::slurp(dir_ / "b" / "weight.lwa1"));
  EXPECT_EQ(testing::slurp(dir_ / "a" / "bias.lwa1"), testing::slurp(dir_ / "b" / "bias.lwa1"));
  const json trace = json::parse(testing::slurp(dir_ / "a" / "loss_trace.json"));
  EXPECT_EQ(trace["seed"], 7);
  EXPECT_LT(trace["final_loss"].get<double>(), trace["trace"][0].get<double>());
  const auto xi = load_projection(dir_ / "a");
  EXPECT_EQ(xi.c_in(), 6);
  EXPECT_EQ(xi.c_out(), 3);
}

TEST_F(CliTest, EvalIdenticalInputs) {
  const fs::path frame = write_frame("frame", 3);
  ASSERT_EQ(cli("decompose --input " + frame.string() + " --out " + p("lwa")).status, 0);
  auto r = cli("eval --pred " + frame.string() + " --sim " + p("lwa") + " --region preserved");
  ASSERT_EQ(r.status, 0) << r.err;
  const json reports = json::parse(r.out);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0]["metric"], "si_rmse");
  EXPECT_EQ(reports[0]["value"], 0.0);
  EXPECT_EQ(reports[1]["metric"], "miou");
  EXPECT_EQ(reports[1]["value"], 1.0);
  EXPECT_EQ(reports[1]["region"], "preserved");

  Rng rng(1);
  Eigen::MatrixXd f(256, 16);
  for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] = standard_normal(rng);
  save_tensor(dir_ / "f.lwa1", f);
  r = cli("eval --features-a " + p("f.lwa1") + " --features-b " + p("f.lwa1"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_LE(json::parse(r.out)[0]["value"].get<double>(), 1e-6);
}

}  // namespace
}  // namespace lwa

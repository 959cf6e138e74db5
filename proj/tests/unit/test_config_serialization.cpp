// Copyright 2026 The kappa-toolkit Authors.
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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kappa/config.hpp"
#include "kappa/errors.hpp"
#include "kappa/serialization.hpp"

namespace kappa {
namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("kappa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

bool has_issue(const std::vector<ConfigIssue>& issues, const std::string& path, const std::string& fragment) {
  for (const auto& i : issues) {
    if (i.path == path && i.message.find(fragment) != std::string::npos) return true;
  }
  return false;
}

TEST(Config, DefaultIsValidAndRoundTrips) {
  const RunConfig def;
  EXPECT_TRUE(config_issues(def).empty());
  const Json j = config_to_json(def);
  std::vector<ConfigIssue> issues;
  EXPECT_EQ(config_from_json(j, issues), def);
  EXPECT_TRUE(issues.empty());
  EXPECT_EQ(load_config_text(j.dump()), def);
}

TEST(Config, EveryFieldSurvivesRoundTrip) {
  RunConfig c;
  c.experiment = "four_cell";
  c.seed = 99;
  c.tags = {"a", "b"};
  c.model.n_causal = 12;
  c.model.inert_complement = true;
  c.model.causal_coef_scale = 1.5;
  c.sweep.widths = {32, 64};
  c.sweep.m_ref = 32;
  c.sweep.seeds = {3, 4};
  c.sweep.arch = SaeArch::JumpRelu;
  c.sweep.attribution.loss_kind = LossKind::CeCleanTarget;
  c.sweep.train.lr = 0.5;
  c.fit.exclude = ExcludeRule::None;
  c.options.synthetic_recovery.cosine_thresholds = {0.9};
  c.options.paper_fixtures.file = "x.json";
  EXPECT_EQ(load_config_text(config_to_json(c).dump()), c);
}

TEST(Config, ModelBoundViolation) {
  const auto issues = [] {
    try {
      load_config_text(R"({"model": {"d": 8, "n_causal": 9, "vocab_size": 16}})");
    } catch (const ConfigValidationError& e) {
      return e.issues();
    }
    return std::vector<ConfigIssue>{};
  }();
  EXPECT_TRUE(has_issue(issues, "model.n_causal", "GroundTruthSpec"));
}

TEST(Config, SweepInvariantViolation) {
  try {
    load_config_text(R"({"sweep": {"widths": [64, 128], "m_ref": 32}})");
    FAIL();
  } catch (const ConfigValidationError& e) {
    EXPECT_TRUE(has_issue(e.issues(), "sweep.m_ref", "SweepConfig invariant"));
  }
}

TEST(Config, UnknownKeysTypesAndEnums) {
  std::vector<ConfigIssue> issues;
  const Json j = parse_config_text(R"({
    "experment": "width_sweep",
    "seed": -1,
    "model": {"d": "sixty-four"},
    "sweep": {"arch": "GATED"},
    "attribution": {"loss_kind": "L2"},
    "fit": {"exclude": "SOME"}
  })");
  config_from_json(j, issues);
  EXPECT_TRUE(has_issue(issues, "experment", "unknown"));
  EXPECT_TRUE(has_issue(issues, "seed", ""));
  EXPECT_TRUE(has_issue(issues, "model.d", "integer"));
  EXPECT_TRUE(has_issue(issues, "sweep.arch", "GATED"));
  EXPECT_TRUE(has_issue(issues, "attribution.loss_kind", "L2"));
  EXPECT_TRUE(has_issue(issues, "fit.exclude", "SOME"));
}

TEST(Config, UnknownExperiment) {
  RunConfig c;
  c.experiment = "nope";
  const auto issues = config_issues(c);
  ASSERT_FALSE(issues.empty());
  EXPECT_EQ(issues.front().path, "experiment");
  EXPECT_NE(issues.front().message.find("width_sweep"), std::string::npos);
}

TEST(Config, SyntaxErrorCarriesPosition) {
  try {
    parse_config_text("{\n  \"seed\": 1,\n  \"model\": {\"d\": }\n}");
    FAIL();
  } catch (const ConfigSyntaxError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GT(e.column(), 1u);
  }
}

TEST(Config, ValidateFile) {
  const auto dir = temp_dir("config");
  const auto good = dir / "good.json";
  const auto bad = dir / "bad.json";
  std::ofstream(good) << config_to_json(RunConfig{}).dump(2);
  std::ofstream(bad) << R"({"model": {"n_causal": 100}})";
  EXPECT_TRUE(validate_config(good).empty());
  EXPECT_FALSE(validate_config(bad).empty());
  EXPECT_THROW(load_config(dir / "missing.json"), Error);
}

TEST(Config, ReplicateSeedsDiffer) {
  EXPECT_NE(replicate_seed(0, 0), replicate_seed(0, 1));
  EXPECT_NE(replicate_seed(0, 1), replicate_seed(1, 0));
  EXPECT_EQ(replicate_seed(5, 2), replicate_seed(5, 2));
}

TEST(Serialization, NonFiniteNumbers) {
  EXPECT_EQ(number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(std::isnan(to_double(number(std::nan("")))));
  EXPECT_EQ(to_double(number(-std::numeric_limits<double>::infinity())), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(to_double(number(1.25)), 1.25);
}

TEST(Serialization, ModelRoundTrip) {
  GroundTruthSpec s;
  s.d = 12;
  s.n_features = 30;
  s.n_causal = 5;
  s.vocab_size = 20;
  s.depth = 3;
  const GroundTruthModel model = generate_model(s);
  const GroundTruthModel back = model_from_json(Json::parse(model_to_json(model).dump()));
  EXPECT_EQ(back.spec, model.spec);
  EXPECT_EQ(back.causal_projector, model.causal_projector);
  EXPECT_EQ(back.dictionary.directions, model.dictionary.directions);
  ASSERT_EQ(back.head.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.head[i].weight, model.head[i].weight);
    EXPECT_EQ(back.head[i].bias, model.head[i].bias);
  }
  const auto batch = sample_batch(model, 10, 3);
  const auto batch_back = batch_from_json(Json::parse(batch_to_json(batch, 3).dump()));
  ASSERT_EQ(batch_back.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(batch_back[i].h, batch[i].h);
    EXPECT_EQ(batch_back[i].active_set, batch[i].active_set);
  }
}

TEST(Serialization, SaeCheckpointRoundTrip) {
  const auto dir = temp_dir("ckpt");
  SaeParams sae = init_sae(8, 20, SaeArch::JumpRelu, 4);
  sae.theta.setConstant(0.25);
  save_sae(dir / "a.ksae", sae);
  const SaeParams back = load_sae(dir / "a.ksae");
  EXPECT_EQ(back.w_enc, sae.w_enc);
  EXPECT_EQ(back.w_dec, sae.w_dec);
  EXPECT_EQ(back.theta, sae.theta);
  EXPECT_EQ(back.arch, sae.arch);
  std::ofstream(dir / "junk.ksae") << "not a checkpoint";
  EXPECT_THROW(load_sae(dir / "junk.ksae"), InputError);
}

TEST(Serialization, AtomicWriteLeavesNoTemporary) {
  const auto dir = temp_dir("atomic");
  write_atomic(dir / "doc.json", "one");
  write_atomic(dir / "doc.json", "two");
  EXPECT_EQ(read_file(dir / "doc.json"), "two");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
}

}  // namespace
}  // namespace kappa

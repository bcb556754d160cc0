// Copyright 2026 The Localmark Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "localmark/config.hpp"
#include "localmark/errors.hpp"

using namespace localmark;

TEST_CASE("ini parsing: sections, comments, trimming") {
  const IniFile ini = IniFile::parse_string(
      "# top comment\n"
      "[train]\n"
      "batch_size = 4   ; trailing comment\n"
      "seed=9\n"
      "\n"
      "[losses]\n"
      "loud = 10.0\n");
  CHECK(ini.get("train", "batch_size", "") == "4");
  CHECK(ini.get("train", "seed", "") == "9");
  CHECK(ini.get("losses", "loud", "") == "10.0");
  CHECK(ini.get("losses", "missing", "fallback") == "fallback");
  CHECK_THROWS_AS(IniFile::parse_string("[train\nbatch=1\n"), ConfigError);
  CHECK_THROWS_AS(IniFile::parse_string("[a]\nnot a pair\n"), ConfigError);
}

TEST_CASE("run config: defaults and overrides") {
  const RunConfig def = RunConfig::from_ini(IniFile::parse_string(""));
  CHECK(def.train.batch_size == 32);
  CHECK(def.train.learning_rate == doctest::Approx(1e-4));
  CHECK(def.train.total_steps == 20000);
  CHECK(def.train.sample_length == 16000);
  CHECK(def.train.mask_windows == 5);
  CHECK(def.model.base_channels == 16);
  CHECK(def.model.latent_dim == 64);
  CHECK(def.model.hidden_dim == 32);
  CHECK(def.model.message_bits == 16);
  CHECK(def.train.weights.l1 == doctest::Approx(0.1));
  CHECK(def.train.weights.msspec == doctest::Approx(2.0));
  CHECK(def.train.weights.adv == doctest::Approx(4.0));
  CHECK(def.train.weights.loud == doctest::Approx(10.0));
  CHECK(def.train.weights.loc == doctest::Approx(10.0));
  CHECK(def.train.weights.dec == doctest::Approx(1.0));

  const RunConfig cfg = RunConfig::from_ini(IniFile::parse_string(
      "[model]\n"
      "preset = paper\n"
      "[train]\n"
      "batch_size = 8\n"
      "total_steps = 123\n"
      "[losses]\n"
      "adv = 1.5\n"
      "[eval]\n"
      "clip_count = 7\n"
      "[attack]\n"
      "alpha_grid = 1e-4, 1e-3\n"));
  CHECK(cfg.model.base_channels == 32);
  CHECK(cfg.model.latent_dim == 128);
  CHECK(cfg.train.batch_size == 8);
  CHECK(cfg.train.total_steps == 123);
  CHECK(cfg.train.weights.adv == doctest::Approx(1.5));
  CHECK(cfg.eval.clip_count == 7);
  REQUIRE(cfg.attack.alpha_grid.size() == 2);
  CHECK(cfg.attack.alpha_grid[1] == doctest::Approx(1e-3));
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK_THROWS_AS(RunConfig::from_ini(IniFile::parse_string("[train]\nbatchsize = 4\n")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_ini(IniFile::parse_string("[nope]\nx = 1\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_ini(IniFile::parse_string("[train]\nbatch_size = four\n")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_ini(IniFile::parse_string("[model]\npreset = huge\n")),
                  ConfigError);
}

TEST_CASE("augment section: battery selection and parameter overrides") {
  const RunConfig cfg = RunConfig::from_ini(IniFile::parse_string(
      "[augment]\n"
      "edits = lowpass, boost\n"
      "lowpass.cutoff = 750\n"));
  REQUIRE(cfg.eval_augments.size() == 2);
  CHECK(cfg.eval_augments[0].kind == EditKind::kLowpass);
  CHECK(cfg.eval_augments[0].param("cutoff") == doctest::Approx(750.0));
  CHECK(cfg.eval_augments[1].kind == EditKind::kBoost);

  CHECK_THROWS_AS(RunConfig::from_ini(IniFile::parse_string(
                      "[augment]\nedits = lowpass\nlowpass.wrong = 1\n")),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::from_ini(IniFile::parse_string(
                      "[augment]\nedits = lowpass\nboost.factor = 2\n")),
                  ConfigError);
}

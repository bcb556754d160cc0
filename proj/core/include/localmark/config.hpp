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

#pragma once

#include <map>
#include <string>
#include <vector>

#include "localmark/augment.hpp"
#include "localmark/models.hpp"
#include "localmark/trainer.hpp"

namespace localmark {

// INI-style sections of key=value lines; '#' and ';' start comments.
struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static IniFile parse_file(const std::string& path);
  static IniFile parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
};

struct EvalConfig {
  int clip_count = 200;
  double clip_seconds = 1.0;
  double loc_clip_seconds = 10.0;
  int loc_clip_count = 100;
  std::vector<double> loc_durations{0.2, 0.5, 1.0, 2.0, 5.0, 10.0};
  std::vector<int> attribution_sizes{1, 10, 100, 1000, 10000};
  int attribution_clip_count = 200;
  double detect_threshold = 0.5;
  double attribution_fpr = 1e-3;
  int runtime_clip_count = 20;
  double runtime_clip_seconds = 10.0;
};

struct AttackSectionConfig {
  std::vector<double> alpha_grid{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  int steps = 100;
  double learning_rate = 0.1;
  int clip_count = 100;
  double clip_seconds = 1.0;
};

// Parsed run configuration for the CLI: [model], [train], [losses],
// [augment], [eval], [attack]. Unknown sections or keys are rejected.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::vector<AugmentSpec> eval_augments = AugmentSpec::eval_battery();
  EvalConfig eval;
  AttackSectionConfig attack;

  static RunConfig from_ini(const IniFile& ini);
  static RunConfig from_file(const std::string& path);
};

}  // namespace localmark

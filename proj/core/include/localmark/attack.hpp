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

#include <string>
#include <vector>

#include "localmark/models.hpp"

namespace localmark {

struct AttackConfig {
  double alpha = 1e-3;        // distortion scale; |x_adv - x| <= alpha per sample
  int steps = 100;            // Adam iterations
  double learning_rate = 0.1;
  enum class Target { kRemove, kForge } target = Target::kRemove;
  uint64_t seed = 0;

  void validate() const;
};

// Gradient attack against a frozen detector: optimizes a distortion d so that
// x + alpha * tanh(d) pushes the mean presence toward the target label.
// Deterministic given the seed; never touches detector parameters.
AudioClip adversarial_attack(const ParameterStore& detector, const AudioClip& x,
                             const AttackConfig& cfg);

struct SurrogateResult {
  ParameterStore classifier;
  double validation_accuracy = 0.0;
};

// Trains a detector-architecture binary classifier separating watermarked
// from genuine clips (per-sample constant labels). 10% of each set is held
// out for the validation accuracy.
SurrogateResult train_surrogate(const std::vector<AudioClip>& watermarked,
                                const std::vector<AudioClip>& genuine,
                                const ModelConfig& cfg, int steps, double learning_rate,
                                uint64_t seed);

struct AttackSweepRow {
  std::string mode;
  double alpha = 0.0;
  double si_snr_mean = 0.0;         // attacked vs. input audio
  double detection_accuracy = 0.0;  // fraction still flagged by the true detector
};

struct AttackSweepOptions {
  std::vector<double> alpha_grid{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  int steps = 100;
  double learning_rate = 0.1;
  double detect_threshold = 0.5;
  uint64_t seed = 0;
};

// One sweep curve. gradient_proxy is the detector the attacker differentiates
// through (the true one for white-box, a stand-in otherwise); pass nullptr
// for the gaussian-noise baseline at sigma = alpha. Evaluation always uses
// true_detector.
std::vector<AttackSweepRow> attack_sweep(const ParameterStore& true_detector,
                                         const ParameterStore* gradient_proxy,
                                         const std::string& mode_name,
                                         const std::vector<AudioClip>& clips,
                                         const AttackSweepOptions& options);

}  // namespace localmark

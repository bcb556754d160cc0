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
#include <optional>
#include <string>
#include <vector>

#include "localmark/audio.hpp"
#include "localmark/nn_ops.hpp"
#include "localmark/rng.hpp"

namespace localmark {

enum class EditKind {
  kBandpass,
  kHighpass,
  kLowpass,
  kSpeed,
  kResample,
  kBoost,
  kDuck,
  kEcho,
  kPinkNoise,
  kWhiteNoise,
  kSmooth,
  kCodecProxy,
  kIdentity,
};

// One audio edit with its parameter set. Train mode uses the milder training
// parameters (some randomized); eval mode uses the fixed aggressive ones.
struct AugmentSpec {
  enum class Mode { kTrain, kEval };

  EditKind kind = EditKind::kIdentity;
  Mode mode = Mode::kEval;
  std::map<std::string, double> params;

  std::string name() const;
  static EditKind kind_from_name(const std::string& name);
  static AugmentSpec train_default(EditKind kind);
  static AugmentSpec eval_default(EditKind kind);
  static std::vector<AugmentSpec> train_battery();
  static std::vector<AugmentSpec> eval_battery();

  double param(const std::string& key) const;
  bool length_preserving() const { return kind != EditKind::kSpeed; }
  bool differentiable() const { return kind != EditKind::kCodecProxy; }
  void validate() const;
};

// Applies the edit. Deterministic given (clip, spec, rng state).
AudioClip apply_augment(const AudioClip& clip, const AugmentSpec& spec, Rng& rng);

// Forward equals apply_augment bit-exactly; backward passes the upstream
// gradient through unchanged (identity Jacobian). Rejects length-changing
// edits.
ad::FTape::Id straight_through_op(ad::FTape& tape, ad::FTape::Id x, const AugmentSpec& spec,
                                  int sample_rate, Rng& rng);

// Differentiable train-time path. For speed the output is shorter and
// *label_scale reports the factor so masks can be rescaled; otherwise
// *label_scale is 1. codec_proxy routes through straight_through_op.
ad::FTape::Id apply_augment_op(ad::FTape& tape, ad::FTape::Id x, const AugmentSpec& spec,
                               int sample_rate, Rng& rng, double* label_scale = nullptr);

// Inverse-accuracy sampling policy over an edit battery.
struct AugmentPolicy {
  std::vector<AugmentSpec> specs;
  std::vector<double> weights;   // normalized sampling probabilities
  std::vector<double> accuracy;  // running per-edit detection accuracy
  double accuracy_floor = 0.05;
  double smoothing = 0.9;  // EMA factor for accuracy updates

  static AugmentPolicy from_specs(std::vector<AugmentSpec> specs);
  static AugmentPolicy train_default();

  void renormalize();
  int sample_index(Rng& rng) const;
  void update_accuracy(int index, double observed_accuracy);
  void validate() const;
};

// Nearest-neighbor time scaling of 0/1 labels, used when the speed edit
// changes the signal length.
std::vector<uint8_t> rescale_labels(const std::vector<uint8_t>& labels, int64_t new_length);

// Pink noise via the Voss-McCartney rows, normalized to unit sample stddev.
std::vector<float> pink_noise(int64_t n, Rng& rng);

}  // namespace localmark

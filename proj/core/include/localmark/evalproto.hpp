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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "localmark/augment.hpp"
#include "localmark/inference.hpp"
#include "localmark/models.hpp"

namespace localmark {

// Evaluation protocols shared by the `eval` command and the acceptance suite.

struct RobustnessRow {
  std::string edit;
  double accuracy = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double auc = 0.0;
  double threshold = 0.0;
};

// Balanced watermarked/genuine sets per edit; accuracy at the
// best-accuracy threshold plus ROC AUC. The first row is the clean
// ("none") condition.
std::vector<RobustnessRow> robustness_table(const ParameterStore& generator,
                                            const ParameterStore& detector,
                                            const std::vector<AudioClip>& clips,
                                            const std::vector<AugmentSpec>& edits,
                                            bool with_messages, uint64_t seed);

struct LocalizationRow {
  double duration_seconds = 0.0;
  double mean_iou = 0.0;
  double sample_accuracy = 0.0;
};

// Localization predictor: receives the edited clip and the ground-truth mask
// (ignored by real detectors, returned verbatim by the self-test oracle).
using DetectorFn = std::function<PresenceMask(const AudioClip&, const PresenceMask& truth)>;

// Watermarks a randomly placed segment of each duration inside every clip and
// measures IoU / per-sample accuracy of the localization. `detector_fn`
// defaults to thresholded detector probabilities; tests may substitute a
// ground-truth oracle.
std::vector<LocalizationRow> localization_curve(const ParameterStore& generator,
                                                const std::vector<AudioClip>& clips,
                                                const std::vector<double>& durations,
                                                const DetectorFn& detector_fn, uint64_t seed,
                                                std::optional<int> message_bits = std::nullopt);

DetectorFn detector_mask_fn(const ParameterStore& detector, double threshold = 0.5);

struct AttributionRow {
  int versions = 0;           // registry size N
  double accuracy = 0.0;      // detected and correctly attributed, over all clips
  double far = 0.0;           // wrong attributions among detected
  double detection_rate = 0.0;
  double threshold = 0.0;
};

// Tab-style attribution protocol: up to 100 live messages watermark the
// clips; the registry is padded with decoys up to N. Detection threshold is
// calibrated on genuine clips at `target_fpr`.
std::vector<AttributionRow> attribution_table(const ParameterStore& generator,
                                              const ParameterStore& detector,
                                              const std::vector<AudioClip>& clips,
                                              const std::vector<int>& registry_sizes,
                                              double target_fpr, uint64_t seed);

struct RuntimeRow {
  double clip_seconds = 0.0;
  double single_ms = 0.0;
  double sliding_ms = 0.0;
  int64_t single_passes = 1;
  int64_t sliding_passes = 0;
  double speedup = 0.0;
};

RuntimeRow runtime_benchmark(const ParameterStore& detector, const std::vector<AudioClip>& clips,
                             double window_seconds = 1.0, double shift_seconds = 0.05);

// Embeds a watermark into just [start, start+len) of the clip, returning the
// edited clip and the ground-truth mask.
struct SegmentEmbed {
  AudioClip audio;
  PresenceMask truth;
};
SegmentEmbed embed_segment(const ParameterStore& generator, const AudioClip& clip, int64_t start,
                           int64_t length, const std::optional<Message>& message);

}  // namespace localmark

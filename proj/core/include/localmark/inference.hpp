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

#include <optional>
#include <string>
#include <vector>

#include "localmark/models.hpp"
#include "localmark/trainer.hpp"

namespace localmark {

struct DetectionResult {
  double score = 0.0;    // mean presence probability
  bool flagged = false;  // score strictly above the threshold
  double threshold = 0.5;
};

// score = mean(presence); flagged iff score > threshold (strict).
DetectionResult detect(const DetectorOutput& out, double threshold = 0.5);

// mask_t = 1 iff presence_t > threshold (strict).
PresenceMask localize(const DetectorOutput& out, double threshold = 0.5);

// |pred AND truth| / |pred OR truth|; 1 when both masks are empty.
double iou(const PresenceMask& pred, const PresenceMask& truth);

// bit_i = 1 iff mean sigmoid(logit_i) over masked samples > 0.5 (strict).
// Throws ValidationError when the mask has no positive sample.
Message decode_message(const DetectorOutput& out, const PresenceMask& mask);

struct AttributionRegistry {
  struct Entry {
    std::string model_id;
    Message message;
  };
  std::vector<Entry> entries;

  void add(const std::string& model_id, const Message& message);
  void validate(int bits) const;
  void save(const std::string& path) const;
  static AttributionRegistry load(const std::string& path, int bits);
};

struct AttributionResult {
  std::optional<std::string> model_id;  // empty when detection failed
  int hamming_distance = -1;
  DetectionResult detection;
};

// Detect, then decode over the localized mask (all samples when the mask is
// empty) and return the registry argmin by Hamming distance, lowest index on
// ties. model_id stays empty exactly when detection fails.
AttributionResult attribute(const DetectorOutput& out, const AttributionRegistry& registry,
                            double det_threshold = 0.5);

// Rank-statistic AUC: P(pos > neg) + 0.5 P(pos == neg).
double roc_auc(const std::vector<double>& scores_pos, const std::vector<double>& scores_neg);

struct ThresholdSweepResult {
  double threshold = 0.0;
  double accuracy = 0.0;  // (TPR + 1 - FPR) / 2
  double tpr = 0.0;
  double fpr = 0.0;
};

// Sweeps midpoints of sorted unique scores; on accuracy ties the lowest
// threshold wins.
ThresholdSweepResult best_accuracy_threshold(const std::vector<double>& scores_pos,
                                             const std::vector<double>& scores_neg);

struct SlidingWindowResult {
  DetectionResult detection;  // aggregated max window score
  int64_t passes = 0;         // detector invocations
  double seconds = 0.0;       // wall clock
  std::vector<double> window_scores;
};

// Brute-force baseline: independent detector passes over windows of
// `window_seconds`, shifted by `shift_seconds`; score is the max window mean.
SlidingWindowResult sliding_window_detect(const ParameterStore& det, const AudioClip& clip,
                                          double window_seconds = 1.0,
                                          double shift_seconds = 0.05,
                                          double threshold = 0.5);

// Single-pass detection with wall-clock timing, for the efficiency benchmark.
struct SinglePassResult {
  DetectionResult detection;
  double seconds = 0.0;
};
SinglePassResult single_pass_detect(const ParameterStore& det, const AudioClip& clip,
                                    double threshold = 0.5);

// Threshold with empirical FPR closest to (and not above, when possible) the
// target on a set of negative scores.
double calibrate_threshold_for_fpr(std::vector<double> negative_scores, double target_fpr);

}  // namespace localmark

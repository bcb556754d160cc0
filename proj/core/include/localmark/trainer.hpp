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
#include <string>
#include <vector>

#include "localmark/augment.hpp"
#include "localmark/losses.hpp"
#include "localmark/models.hpp"

namespace localmark {

// Per-sample 0/1 watermark labels.
struct PresenceMask {
  std::vector<uint8_t> labels;

  int64_t length() const { return static_cast<int64_t>(labels.size()); }
  void validate() const;
};

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int64_t total_steps = 20000;
  int sample_length = 16000;  // T
  int mask_windows = 5;       // k
  LossWeights weights;
  uint64_t seed = 0;
  int64_t checkpoint_interval = 2000;
  int64_t metrics_interval = 50;
  bool use_message = true;
  bool train_discriminator = true;
  bool use_augmentations = true;
  // Perceptual weights ramp linearly from 0 over this many steps so the
  // detector first learns on a clearly audible watermark; 0 disables.
  int64_t perc_warmup_steps = 1000;

  void validate() const;
};

// ---- watermark masking (training stage ii) --------------------------------

enum class MaskBranch { kRevert, kZero, kNeighbor, kKeep };

struct MaskSpan {
  int64_t start = 0;
  int64_t length = 0;
  MaskBranch branch = MaskBranch::kKeep;
};

struct MaskResult {
  std::vector<float> mixed;
  PresenceMask labels;  // 1 where the final sample comes from s_w
  std::vector<MaskSpan> spans;
};

// Draws k spans of length T/(2k) with the branch distribution
// (revert 0.4, zero 0.2, neighbor 0.2, keep 0.2). Starts are uniform over
// [0, T - span] so spans stay whole; spans are clamped when T < span.
std::vector<MaskSpan> draw_mask_spans(int64_t length, int window_count, Rng& rng);

// Deterministic core: applies spans in order (later spans overwrite earlier
// ones) and labels samples by their final provenance.
MaskResult apply_mask_spans(const std::vector<float>& s, const std::vector<float>& s_w,
                            const std::vector<float>& neighbor,
                            const std::vector<MaskSpan>& spans);

MaskResult mask_watermark(const std::vector<float>& s, const std::vector<float>& s_w,
                          int window_count, const std::vector<float>& neighbor, Rng& rng);

// ---- localization / decoding losses ----------------------------------------

inline constexpr double kProbClamp = 1e-7;

// (1/T) sum BCE(presence_t, y_t) with probabilities clamped at 1e-7.
double loc_loss(const DetectorOutput& out, const PresenceMask& y);

// Mean BCE(sigmoid(logit), bit) over watermarked samples and bits; 0 when no
// sample is watermarked.
double dec_loss(const DetectorOutput& out, const Message& m, const PresenceMask& y);

// Tape versions used by the training loop and the gradient tests.
template <typename S>
typename ad::Tape<S>::Id loc_loss_op(ad::Tape<S>& t, typename ad::Tape<S>::Id presence,
                                     const std::vector<uint8_t>& y) {
  const auto& p = t.val(presence);
  if (static_cast<int64_t>(y.size()) != p.size()) {
    throw ValidationError("loc_loss: label length mismatch");
  }
  ad::Tensor<S> labels(p.rows, p.cols);
  for (int64_t i = 0; i < labels.size(); ++i) labels.v[i] = static_cast<S>(y[i]);
  return t.bce_mean(presence, labels, kProbClamp);
}

template <typename S>
typename ad::Tape<S>::Id dec_loss_op(ad::Tape<S>& t, typename ad::Tape<S>::Id message_logits,
                                     const Message& m, const std::vector<uint8_t>& y) {
  return t.masked_bce_logits(message_logits, m.bits, y);
}

// ---- optimization -----------------------------------------------------------

struct NamedGrads {
  std::vector<std::pair<std::string, ad::FTensor>> items;

  void accumulate(const std::string& name, const ad::FTensor& g);
  void scale_all(double s);
  bool all_finite() const;
};

class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double beta1, double beta2, double eps)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one step; returns false (and leaves parameters untouched) when a
  // gradient is non-finite.
  bool step(ParameterStore& store, const NamedGrads& grads);

  int64_t steps_taken() const { return t_; }
  int64_t steps_skipped() const { return skipped_; }

 private:
  struct Moments {
    ad::FTensor m, v;
  };
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  int64_t skipped_ = 0;
  std::unordered_map<std::string, Moments> state_;
};

// Rescales each perceptual-loss gradient at the generated audio to unit norm
// before weighting; λ-weighted sum is the seed used for the generator sweep.
ad::FTensor balance_gradients(const std::vector<std::pair<double, ad::FTensor>>& weighted,
                              double eps = 1e-12);

// ---- training loop -----------------------------------------------------------

struct StepMetrics {
  int64_t step = 0;
  double l1 = 0, msspec = 0, adv = 0, loud = 0, loc = 0, dec = 0, disc = 0;
  double si_snr_probe = 0;
  double mask_accuracy = 0;  // detector accuracy on the masked signal
  double clean_accuracy = 0; // detector accuracy on the clean signal

  std::string to_json() const;
};

struct TrainResult {
  ParameterStore generator;
  ParameterStore detector;
  ParameterStore discriminator;
  std::vector<StepMetrics> metrics;
};

// Joint training. `clips` must each hold at least sample_length samples at
// 16 kHz. Checkpoints and metrics stream into out_dir when it is non-empty.
TrainResult train_loop(const TrainConfig& cfg, const ModelConfig& model_cfg,
                       const std::vector<std::vector<float>>& clips,
                       const std::string& out_dir,
                       const std::function<void(const StepMetrics&)>& on_metrics = nullptr);

}  // namespace localmark

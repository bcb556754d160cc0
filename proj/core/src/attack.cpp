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

#include "localmark/attack.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "localmark/errors.hpp"
#include "localmark/inference.hpp"
#include "localmark/losses.hpp"
#include "localmark/trainer.hpp"

namespace localmark {

void AttackConfig::validate() const {
  if (alpha <= 0.0) throw ConfigError("attack: alpha must be positive");
  if (steps < 0) throw ConfigError("attack: steps must be >= 0");
  if (learning_rate <= 0.0) throw ConfigError("attack: learning rate must be positive");
}

AudioClip adversarial_attack(const ParameterStore& detector, const AudioClip& x,
                             const AttackConfig& cfg) {
  cfg.validate();
  x.validate();
  const ModelConfig mc = ModelConfig::deserialize(detector.config_text);
  const int64_t n = x.length();
  const float label = cfg.target == AttackConfig::Target::kForge ? 1.0f : 0.0f;

  Rng rng(cfg.seed);
  std::vector<float> d(n);
  for (auto& v : d) v = static_cast<float>(rng.normal());

  // Inline Adam on the distortion vector.
  std::vector<float> m(n, 0.0f), vv(n, 0.0f);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  for (int it = 0; it < cfg.steps; ++it) {
    ad::FTape tape;
    ad::FTensor dt(1, n);
    std::copy(d.begin(), d.end(), dt.v.begin());
    auto d_leaf = tape.leaf(std::move(dt), true);
    auto bounded = tape.scale(tape.tanh_(d_leaf), cfg.alpha);
    ad::FTensor xt(1, n);
    std::copy(x.samples.begin(), x.samples.end(), xt.v.begin());
    auto x_adv = tape.add_const(bounded, xt);

    BoundParams params(tape, detector, false);
    auto det_out = detector_forward_op(tape, params, x_adv, mc);
    auto score = tape.mean_all(det_out.presence);
    ad::FTensor lab(1, 1);
    lab.v[0] = label;
    auto loss = tape.bce_mean(score, lab, 1e-7);
    tape.backward(loss);

    const ad::FTensor& g = tape.grad(d_leaf);
    if (g.empty()) break;
    const double bc1 = 1.0 - std::pow(kBeta1, it + 1);
    const double bc2 = 1.0 - std::pow(kBeta2, it + 1);
    for (int64_t i = 0; i < n; ++i) {
      const double gi = g.v[i];
      m[i] = static_cast<float>(kBeta1 * m[i] + (1.0 - kBeta1) * gi);
      vv[i] = static_cast<float>(kBeta2 * vv[i] + (1.0 - kBeta2) * gi * gi);
      d[i] -= static_cast<float>(cfg.learning_rate * (m[i] / bc1) /
                                 (std::sqrt(vv[i] / bc2) + kEps));
    }
  }

  AudioClip out = x;
  for (int64_t i = 0; i < n; ++i) {
    out.samples[i] =
        static_cast<float>(x.samples[i] + cfg.alpha * std::tanh(static_cast<double>(d[i])));
  }
  return out;
}

SurrogateResult train_surrogate(const std::vector<AudioClip>& watermarked,
                                const std::vector<AudioClip>& genuine, const ModelConfig& cfg,
                                int steps, double learning_rate, uint64_t seed) {
  if (watermarked.empty() || genuine.empty()) {
    throw ConfigError("surrogate: both classes must be non-empty");
  }
  ModelConfig clf_cfg = cfg;
  clf_cfg.message_bits = 0;  // classifier head only
  clf_cfg.validate();

  // Hold out ~10% of each class for validation.
  const size_t wm_holdout = std::max<size_t>(1, watermarked.size() / 10);
  const size_t gn_holdout = std::max<size_t>(1, genuine.size() / 10);
  if (watermarked.size() <= wm_holdout || genuine.size() <= gn_holdout) {
    throw ConfigError("surrogate: classes too small to split");
  }

  SurrogateResult result;
  result.classifier = init_detector(clf_cfg, Rng::mix(seed, 0x737572));
  AdamOptimizer opt(learning_rate, 0.9, 0.999, 1e-8);
  Rng rng(Rng::mix(seed, 0x737567));

  constexpr int kBatch = 8;
  for (int step = 0; step < steps; ++step) {
    NamedGrads grads;
    for (int e = 0; e < kBatch; ++e) {
      const bool positive = rng.uniform() < 0.5;
      const auto& pool = positive ? watermarked : genuine;
      const size_t holdout = positive ? wm_holdout : gn_holdout;
      const size_t idx = static_cast<size_t>(
          rng.uniform_int(static_cast<int64_t>(holdout), static_cast<int64_t>(pool.size()) - 1));
      const AudioClip& clip = pool[idx];

      ad::FTape tape;
      BoundParams params(tape, result.classifier, true);
      ad::FTensor xt(1, clip.length());
      std::copy(clip.samples.begin(), clip.samples.end(), xt.v.begin());
      auto x = tape.constant(std::move(xt));
      auto out = detector_forward_op(tape, params, x, clf_cfg);
      std::vector<uint8_t> labels(clip.samples.size(), positive ? 1 : 0);
      auto loss = loc_loss_op(tape, out.presence, labels);
      tape.backward(loss);
      for (const auto& [name, g] : params.grads()) grads.accumulate(name, *g);
    }
    grads.scale_all(1.0 / kBatch);
    opt.step(result.classifier, grads);
    result.classifier.step = step + 1;
  }

  int64_t hits = 0, total = 0;
  auto validate_class = [&](const std::vector<AudioClip>& pool, size_t holdout, bool positive) {
    for (size_t i = 0; i < holdout; ++i) {
      const DetectorOutput out = detector_forward(result.classifier, pool[i]);
      const bool flagged = detect(out).flagged;
      hits += flagged == positive ? 1 : 0;
      ++total;
    }
  };
  validate_class(watermarked, wm_holdout, true);
  validate_class(genuine, gn_holdout, false);
  result.validation_accuracy = static_cast<double>(hits) / static_cast<double>(total);
  return result;
}

std::vector<AttackSweepRow> attack_sweep(const ParameterStore& true_detector,
                                         const ParameterStore* gradient_proxy,
                                         const std::string& mode_name,
                                         const std::vector<AudioClip>& clips,
                                         const AttackSweepOptions& options) {
  if (clips.empty()) throw ConfigError("attack_sweep: no clips");
  std::vector<AttackSweepRow> rows;
  for (double alpha : options.alpha_grid) {
    AttackSweepRow row;
    row.mode = mode_name;
    row.alpha = alpha;
    std::vector<double> sisnrs(clips.size());
    std::vector<int> flagged(clips.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (size_t i = 0; i < clips.size(); ++i) {
      AudioClip attacked;
      if (gradient_proxy) {
        AttackConfig cfg;
        cfg.alpha = alpha;
        cfg.steps = options.steps;
        cfg.learning_rate = options.learning_rate;
        cfg.target = AttackConfig::Target::kRemove;
        cfg.seed = Rng::mix(options.seed, i);
        attacked = adversarial_attack(*gradient_proxy, clips[i], cfg);
      } else {
        attacked = clips[i];
        Rng rng(Rng::mix(options.seed, i));
        for (auto& v : attacked.samples) {
          v += static_cast<float>(rng.normal(0.0, alpha));
        }
      }
      sisnrs[i] = si_snr(clips[i], attacked);
      const DetectorOutput out = detector_forward(true_detector, attacked);
      flagged[i] = detect(out, options.detect_threshold).flagged ? 1 : 0;
    }
    double si_sum = 0.0;
    int64_t flag_sum = 0;
    for (size_t i = 0; i < clips.size(); ++i) {
      si_sum += sisnrs[i];
      flag_sum += flagged[i];
    }
    row.si_snr_mean = si_sum / static_cast<double>(clips.size());
    row.detection_accuracy = static_cast<double>(flag_sum) / static_cast<double>(clips.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace localmark

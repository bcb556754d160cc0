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

#include "localmark/evalproto.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "localmark/errors.hpp"

namespace localmark {

namespace {

AudioClip edited_copy(const AudioClip& clip, const AugmentSpec& spec, uint64_t seed) {
  Rng rng(seed);
  return apply_augment(clip, spec, rng);
}

}  // namespace

std::vector<RobustnessRow> robustness_table(const ParameterStore& generator,
                                            const ParameterStore& detector,
                                            const std::vector<AudioClip>& clips,
                                            const std::vector<AugmentSpec>& edits,
                                            bool with_messages, uint64_t seed) {
  if (clips.empty()) throw ValidationError("robustness_table: no clips");
  const ModelConfig cfg = ModelConfig::deserialize(generator.config_text);

  // Watermark once; edits apply to both the marked and the genuine copy.
  std::vector<AudioClip> marked(clips.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (size_t i = 0; i < clips.size(); ++i) {
    Rng rng(Rng::mix(seed, i));
    std::optional<Message> msg;
    if (with_messages && cfg.message_bits > 0) msg = Message::random(cfg.message_bits, rng);
    marked[i] = apply_watermark(clips[i], generator_forward(generator, clips[i], msg));
  }

  std::vector<AugmentSpec> all_edits;
  AugmentSpec none;
  none.kind = EditKind::kIdentity;
  none.mode = AugmentSpec::Mode::kEval;
  all_edits.push_back(none);
  all_edits.insert(all_edits.end(), edits.begin(), edits.end());

  std::vector<RobustnessRow> rows;
  for (const AugmentSpec& edit : all_edits) {
    std::vector<double> pos(clips.size()), neg(clips.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (size_t i = 0; i < clips.size(); ++i) {
      const uint64_t s = Rng::mix(seed ^ 0xed17, i);
      const AudioClip em = edited_copy(marked[i], edit, s);
      const AudioClip eg = edited_copy(clips[i], edit, s + 1);
      pos[i] = detect(detector_forward(detector, em)).score;
      neg[i] = detect(detector_forward(detector, eg)).score;
    }
    RobustnessRow row;
    row.edit = edit.kind == EditKind::kIdentity ? "none" : edit.name();
    const ThresholdSweepResult sweep = best_accuracy_threshold(pos, neg);
    row.accuracy = sweep.accuracy;
    row.tpr = sweep.tpr;
    row.fpr = sweep.fpr;
    row.threshold = sweep.threshold;
    row.auc = roc_auc(pos, neg);
    rows.push_back(row);
  }
  return rows;
}

SegmentEmbed embed_segment(const ParameterStore& generator, const AudioClip& clip, int64_t start,
                           int64_t length, const std::optional<Message>& message) {
  clip.validate();
  if (start < 0 || start + length > clip.length()) {
    throw ValidationError("embed_segment: segment out of range");
  }
  AudioClip segment;
  segment.sample_rate = clip.sample_rate;
  segment.samples.assign(clip.samples.begin() + start, clip.samples.begin() + start + length);
  const WatermarkDelta delta = generator_forward(generator, segment, message);

  SegmentEmbed out;
  out.audio = clip;
  out.truth.labels.assign(clip.samples.size(), 0);
  for (int64_t i = 0; i < length; ++i) {
    out.audio.samples[start + i] =
        std::clamp(out.audio.samples[start + i] + delta[i], -1.0f, 1.0f);
    out.truth.labels[start + i] = 1;
  }
  return out;
}

DetectorFn detector_mask_fn(const ParameterStore& detector, double threshold) {
  return [&detector, threshold](const AudioClip& clip, const PresenceMask&) {
    return localize(detector_forward(detector, clip), threshold);
  };
}

std::vector<LocalizationRow> localization_curve(const ParameterStore& generator,
                                                const std::vector<AudioClip>& clips,
                                                const std::vector<double>& durations,
                                                const DetectorFn& detector_fn, uint64_t seed,
                                                std::optional<int> message_bits) {
  if (clips.empty()) throw ValidationError("localization_curve: no clips");
  std::vector<LocalizationRow> rows;
  for (double dur : durations) {
    double iou_sum = 0.0, acc_sum = 0.0;
    std::vector<double> ious(clips.size()), accs(clips.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (size_t i = 0; i < clips.size(); ++i) {
      Rng rng(Rng::mix(seed ^ 0x10c, i * 1000 + static_cast<uint64_t>(dur * 100)));
      const AudioClip& clip = clips[i];
      int64_t len = std::min<int64_t>(clip.length(),
                                      std::llround(dur * clip.sample_rate));
      const int64_t start = rng.uniform_int(0, clip.length() - len);
      std::optional<Message> msg;
      if (message_bits && *message_bits > 0) msg = Message::random(*message_bits, rng);
      const SegmentEmbed emb = embed_segment(generator, clip, start, len, msg);
      const PresenceMask pred = detector_fn(emb.audio, emb.truth);
      ious[i] = iou(pred, emb.truth);
      int64_t hits = 0;
      for (size_t t = 0; t < pred.labels.size(); ++t) {
        hits += pred.labels[t] == emb.truth.labels[t] ? 1 : 0;
      }
      accs[i] = static_cast<double>(hits) / static_cast<double>(pred.labels.size());
    }
    for (size_t i = 0; i < clips.size(); ++i) {
      iou_sum += ious[i];
      acc_sum += accs[i];
    }
    LocalizationRow row;
    row.duration_seconds = dur;
    row.mean_iou = iou_sum / static_cast<double>(clips.size());
    row.sample_accuracy = acc_sum / static_cast<double>(clips.size());
    rows.push_back(row);
  }
  return rows;
}

std::vector<AttributionRow> attribution_table(const ParameterStore& generator,
                                              const ParameterStore& detector,
                                              const std::vector<AudioClip>& clips,
                                              const std::vector<int>& registry_sizes,
                                              double target_fpr, uint64_t seed) {
  if (clips.empty()) throw ValidationError("attribution_table: no clips");
  const ModelConfig cfg = ModelConfig::deserialize(generator.config_text);
  if (cfg.message_bits <= 0) throw ValidationError("attribution_table: model has no message bits");

  constexpr int kMaxLive = 100;  // versions that actually produce audio
  Rng reg_rng(Rng::mix(seed, 0xa77));
  std::vector<Message> live_messages;
  live_messages.reserve(kMaxLive);
  for (int i = 0; i < kMaxLive; ++i) {
    live_messages.push_back(Message::random(cfg.message_bits, reg_rng));
  }

  std::vector<double> negative_scores(clips.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (size_t i = 0; i < clips.size(); ++i) {
    negative_scores[i] = detect(detector_forward(detector, clips[i])).score;
  }
  const double threshold = calibrate_threshold_for_fpr(negative_scores, target_fpr);

  // Detector outputs depend only on how many live versions share the clips.
  std::map<int, std::vector<DetectorOutput>> outputs_by_live;
  auto outputs_for = [&](int live) -> const std::vector<DetectorOutput>& {
    auto it = outputs_by_live.find(live);
    if (it != outputs_by_live.end()) return it->second;
    std::vector<DetectorOutput> outputs(clips.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (size_t i = 0; i < clips.size(); ++i) {
      const Message& m = live_messages[i % live];
      const AudioClip marked =
          apply_watermark(clips[i], generator_forward(generator, clips[i], m));
      outputs[i] = detector_forward(detector, marked);
    }
    return outputs_by_live.emplace(live, std::move(outputs)).first->second;
  };

  std::vector<AttributionRow> rows;
  for (int n : registry_sizes) {
    const int live = std::min(kMaxLive, n);
    AttributionRegistry registry;
    Rng decoy_rng(Rng::mix(seed, 0xdec0 + n));
    for (int i = 0; i < live; ++i) registry.add("v" + std::to_string(i), live_messages[i]);
    // Extra registry entries stand for versions that never produced audio.
    for (int i = live; i < n; ++i) {
      registry.add("v" + std::to_string(i), Message::random(cfg.message_bits, decoy_rng));
    }

    const auto& outputs = outputs_for(live);
    int64_t detected = 0, correct = 0, wrong = 0;
    for (size_t i = 0; i < clips.size(); ++i) {
      const AttributionResult res = attribute(outputs[i], registry, threshold);
      if (!res.model_id) continue;
      ++detected;
      const std::string want = "v" + std::to_string(i % live);
      if (*res.model_id == want) ++correct;
      else ++wrong;
    }
    AttributionRow row;
    row.versions = n;
    row.threshold = threshold;
    row.detection_rate = static_cast<double>(detected) / static_cast<double>(clips.size());
    row.accuracy = static_cast<double>(correct) / static_cast<double>(clips.size());
    row.far = detected > 0 ? static_cast<double>(wrong) / static_cast<double>(detected) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

RuntimeRow runtime_benchmark(const ParameterStore& detector, const std::vector<AudioClip>& clips,
                             double window_seconds, double shift_seconds) {
  if (clips.empty()) throw ValidationError("runtime_benchmark: no clips");
  RuntimeRow row;
  row.clip_seconds = clips.front().duration_seconds();
  double single_total = 0.0, sliding_total = 0.0;
  for (const AudioClip& clip : clips) {
    const SinglePassResult sp = single_pass_detect(detector, clip);
    const SlidingWindowResult sw =
        sliding_window_detect(detector, clip, window_seconds, shift_seconds);
    single_total += sp.seconds;
    sliding_total += sw.seconds;
    row.sliding_passes = sw.passes;
  }
  row.single_ms = 1000.0 * single_total / static_cast<double>(clips.size());
  row.sliding_ms = 1000.0 * sliding_total / static_cast<double>(clips.size());
  row.speedup = row.single_ms > 0 ? row.sliding_ms / row.single_ms : 0.0;
  return row;
}

}  // namespace localmark

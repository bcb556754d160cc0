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

#include "localmark/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "localmark/errors.hpp"

namespace localmark {

DetectionResult detect(const DetectorOutput& out, double threshold) {
  if (out.presence.empty()) throw ValidationError("detect: empty detector output");
  double acc = 0.0;
  for (float p : out.presence) acc += p;
  DetectionResult r;
  r.score = acc / static_cast<double>(out.presence.size());
  r.threshold = threshold;
  r.flagged = r.score > threshold;
  return r;
}

PresenceMask localize(const DetectorOutput& out, double threshold) {
  PresenceMask mask;
  mask.labels.resize(out.presence.size());
  for (size_t t = 0; t < out.presence.size(); ++t) {
    mask.labels[t] = out.presence[t] > threshold ? 1 : 0;
  }
  return mask;
}

double iou(const PresenceMask& pred, const PresenceMask& truth) {
  if (pred.labels.size() != truth.labels.size()) {
    throw ValidationError("iou: mask length mismatch");
  }
  int64_t inter = 0, uni = 0;
  for (size_t t = 0; t < pred.labels.size(); ++t) {
    const bool a = pred.labels[t] != 0;
    const bool b = truth.labels[t] != 0;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Message decode_message(const DetectorOutput& out, const PresenceMask& mask) {
  if (out.message_logits.rows == 0) throw ValidationError("decode: detector has no message head");
  if (static_cast<int64_t>(mask.labels.size()) != out.length()) {
    throw ValidationError("decode: mask length mismatch");
  }
  int64_t active = 0;
  for (uint8_t v : mask.labels) active += v;
  if (active == 0) throw ValidationError("decode: no watermarked samples in mask");

  const int bits = out.message_logits.rows;
  Message m;
  m.bits.resize(bits);
  for (int b = 0; b < bits; ++b) {
    double mean = 0.0;
    for (int64_t t = 0; t < out.length(); ++t) {
      if (!mask.labels[t]) continue;
      mean += 1.0 / (1.0 + std::exp(-static_cast<double>(out.message_logits(b, t))));
    }
    mean /= static_cast<double>(active);
    m.bits[b] = mean > 0.5 ? 1 : 0;
  }
  return m;
}

void AttributionRegistry::add(const std::string& model_id, const Message& message) {
  for (const Entry& e : entries) {
    if (e.model_id == model_id) throw ValidationError("registry: duplicate id " + model_id);
  }
  entries.push_back({model_id, message});
}

void AttributionRegistry::validate(int bits) const {
  std::set<std::string> seen;
  for (const Entry& e : entries) {
    if (!seen.insert(e.model_id).second) {
      throw ValidationError("registry: duplicate id " + e.model_id);
    }
    e.message.validate(bits);
  }
}

void AttributionRegistry::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write registry " + path);
  out << "# localmark-registry v1\n";
  for (const Entry& e : entries) {
    out << e.model_id << " " << e.message.to_hex() << "\n";
  }
  if (!out) throw IoError("write failed for registry " + path);
}

AttributionRegistry AttributionRegistry::load(const std::string& path, int bits) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open registry " + path);
  std::string header;
  std::getline(in, header);
  if (header.rfind("# localmark-registry", 0) != 0) {
    throw FormatError(path + ": missing registry header");
  }
  AttributionRegistry reg;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string id, hex;
    if (!(ls >> id >> hex)) throw FormatError(path + ": bad registry line: " + line);
    reg.add(id, Message::from_hex(hex, bits));
  }
  reg.validate(bits);
  return reg;
}

namespace {
int hamming(const Message& a, const Message& b) {
  int d = 0;
  for (size_t i = 0; i < a.bits.size(); ++i) d += a.bits[i] != b.bits[i] ? 1 : 0;
  return d;
}
}  // namespace

AttributionResult attribute(const DetectorOutput& out, const AttributionRegistry& registry,
                            double det_threshold) {
  if (registry.entries.empty()) throw ValidationError("attribute: empty registry");
  AttributionResult result;
  result.detection = detect(out, det_threshold);
  if (!result.detection.flagged) return result;

  PresenceMask mask = localize(out, det_threshold);
  int64_t active = 0;
  for (uint8_t v : mask.labels) active += v;
  if (active == 0) {
    // Flagged on the mean but no sample individually above threshold: decode
    // over everything rather than fail.
    std::fill(mask.labels.begin(), mask.labels.end(), uint8_t{1});
  }
  const Message decoded = decode_message(out, mask);

  int best = std::numeric_limits<int>::max();
  size_t best_idx = 0;
  for (size_t i = 0; i < registry.entries.size(); ++i) {
    const int d = hamming(decoded, registry.entries[i].message);
    if (d < best) {
      best = d;
      best_idx = i;
    }
  }
  result.model_id = registry.entries[best_idx].model_id;
  result.hamming_distance = best;
  return result;
}

double roc_auc(const std::vector<double>& scores_pos, const std::vector<double>& scores_neg) {
  if (scores_pos.empty() || scores_neg.empty()) {
    throw ValidationError("roc_auc: empty score list");
  }
  // Rank statistic over the merged sorted order; ties share average rank.
  std::vector<std::pair<double, int>> all;
  all.reserve(scores_pos.size() + scores_neg.size());
  for (double s : scores_pos) all.emplace_back(s, 1);
  for (double s : scores_neg) all.emplace_back(s, 0);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t k = i; k < j; ++k) {
      if (all[k].second) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(scores_pos.size());
  const double nn = static_cast<double>(scores_neg.size());
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

ThresholdSweepResult best_accuracy_threshold(const std::vector<double>& scores_pos,
                                             const std::vector<double>& scores_neg) {
  if (scores_pos.empty() || scores_neg.empty()) {
    throw ValidationError("best_accuracy_threshold: empty score list");
  }
  std::vector<double> uniq;
  uniq.insert(uniq.end(), scores_pos.begin(), scores_pos.end());
  uniq.insert(uniq.end(), scores_neg.begin(), scores_neg.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  std::vector<double> candidates;
  candidates.push_back(uniq.front() - 1.0);  // everything flagged
  for (size_t i = 0; i + 1 < uniq.size(); ++i) {
    candidates.push_back(0.5 * (uniq[i] + uniq[i + 1]));
  }
  candidates.push_back(uniq.back() + 1.0);  // nothing flagged

  auto eval = [&](double thr) {
    ThresholdSweepResult r;
    r.threshold = thr;
    int64_t tp = 0, fp = 0;
    for (double s : scores_pos) tp += s > thr ? 1 : 0;
    for (double s : scores_neg) fp += s > thr ? 1 : 0;
    r.tpr = static_cast<double>(tp) / static_cast<double>(scores_pos.size());
    r.fpr = static_cast<double>(fp) / static_cast<double>(scores_neg.size());
    r.accuracy = (r.tpr + 1.0 - r.fpr) / 2.0;
    return r;
  };

  ThresholdSweepResult best = eval(candidates.front());
  for (size_t i = 1; i < candidates.size(); ++i) {
    const ThresholdSweepResult r = eval(candidates[i]);
    if (r.accuracy > best.accuracy + 1e-15) best = r;  // ties keep the lowest
  }
  return best;
}

SinglePassResult single_pass_detect(const ParameterStore& det, const AudioClip& clip,
                                    double threshold) {
  SinglePassResult r;
  const auto start = std::chrono::steady_clock::now();
  const DetectorOutput out = detector_forward(det, clip);
  r.detection = detect(out, threshold);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SlidingWindowResult sliding_window_detect(const ParameterStore& det, const AudioClip& clip,
                                          double window_seconds, double shift_seconds,
                                          double threshold) {
  clip.validate();
  const int64_t window = std::llround(window_seconds * clip.sample_rate);
  const int64_t shift = std::max<int64_t>(1, std::llround(shift_seconds * clip.sample_rate));
  if (clip.length() < window) {
    throw ValidationError("sliding_window_detect: clip shorter than the window");
  }
  SlidingWindowResult r;
  const auto start = std::chrono::steady_clock::now();
  for (int64_t pos = 0; pos + window <= clip.length(); pos += shift) {
    AudioClip piece;
    piece.sample_rate = clip.sample_rate;
    piece.samples.assign(clip.samples.begin() + pos, clip.samples.begin() + pos + window);
    const DetectorOutput out = detector_forward(det, piece);
    const DetectionResult d = detect(out, threshold);
    r.window_scores.push_back(d.score);
    ++r.passes;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double best = 0.0;
  for (double s : r.window_scores) best = std::max(best, s);
  r.detection.score = best;
  r.detection.threshold = threshold;
  r.detection.flagged = best > threshold;
  return r;
}

double calibrate_threshold_for_fpr(std::vector<double> negative_scores, double target_fpr) {
  if (negative_scores.empty()) throw ValidationError("calibrate: no negative scores");
  std::sort(negative_scores.begin(), negative_scores.end());
  const int64_t n = static_cast<int64_t>(negative_scores.size());
  // Allow at most floor(target * n) negatives above the threshold.
  const int64_t allowed = static_cast<int64_t>(std::floor(target_fpr * static_cast<double>(n)));
  const int64_t idx = n - 1 - allowed;
  if (idx < 0) return negative_scores.front() - 1e-9;
  return negative_scores[idx];
}

}  // namespace localmark

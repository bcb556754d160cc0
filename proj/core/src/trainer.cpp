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

#include "localmark/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "localmark/errors.hpp"

namespace localmark {

void PresenceMask::validate() const {
  for (uint8_t v : labels) {
    if (v != 0 && v != 1) throw ValidationError("presence mask entries must be 0/1");
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (learning_rate <= 0) throw ConfigError("train: learning_rate must be positive");
  if (total_steps < 0) throw ConfigError("train: total_steps must be >= 0");
  if (sample_length < 1) throw ConfigError("train: sample_length must be >= 1");
  if (mask_windows < 1) throw ConfigError("train: mask_windows must be >= 1");
  const int64_t span = sample_length / (2 * mask_windows);
  if (static_cast<int64_t>(mask_windows) * span > sample_length) {
    throw ConfigError("train: mask windows exceed the sample length");
  }
}

// ---- masking ---------------------------------------------------------------

std::vector<MaskSpan> draw_mask_spans(int64_t length, int window_count, Rng& rng) {
  if (window_count < 1) throw ValidationError("mask: window count must be >= 1");
  const int64_t span = std::max<int64_t>(1, length / (2 * window_count));
  std::vector<MaskSpan> spans(window_count);
  for (MaskSpan& s : spans) {
    const int64_t max_start = std::max<int64_t>(0, length - span);
    s.start = rng.uniform_int(0, max_start);
    s.length = std::min(span, length - s.start);
    const double u = rng.uniform();
    if (u < 0.4) s.branch = MaskBranch::kRevert;
    else if (u < 0.6) s.branch = MaskBranch::kZero;
    else if (u < 0.8) s.branch = MaskBranch::kNeighbor;
    else s.branch = MaskBranch::kKeep;
  }
  return spans;
}

MaskResult apply_mask_spans(const std::vector<float>& s, const std::vector<float>& s_w,
                            const std::vector<float>& neighbor,
                            const std::vector<MaskSpan>& spans) {
  const int64_t n = static_cast<int64_t>(s.size());
  if (s_w.size() != s.size() || neighbor.size() != s.size()) {
    throw ValidationError("mask: signal length mismatch");
  }
  MaskResult out;
  out.mixed = s_w;
  out.labels.labels.assign(n, 1);
  out.spans = spans;
  for (const MaskSpan& sp : spans) {
    const int64_t end = std::min<int64_t>(n, sp.start + sp.length);
    for (int64_t t = sp.start; t < end; ++t) {
      switch (sp.branch) {
        case MaskBranch::kRevert:
          out.mixed[t] = s[t];
          out.labels.labels[t] = 0;
          break;
        case MaskBranch::kZero:
          out.mixed[t] = 0.0f;
          out.labels.labels[t] = 0;
          break;
        case MaskBranch::kNeighbor:
          out.mixed[t] = neighbor[t];
          out.labels.labels[t] = 0;
          break;
        case MaskBranch::kKeep:
          out.mixed[t] = s_w[t];
          out.labels.labels[t] = 1;
          break;
      }
    }
  }
  return out;
}

MaskResult mask_watermark(const std::vector<float>& s, const std::vector<float>& s_w,
                          int window_count, const std::vector<float>& neighbor, Rng& rng) {
  return apply_mask_spans(s, s_w, neighbor,
                          draw_mask_spans(static_cast<int64_t>(s.size()), window_count, rng));
}

// ---- plain losses ------------------------------------------------------------

double loc_loss(const DetectorOutput& out, const PresenceMask& y) {
  if (out.length() != y.length()) throw ValidationError("loc_loss: length mismatch");
  double acc = 0.0;
  for (int64_t t = 0; t < out.length(); ++t) {
    const double p =
        std::clamp(static_cast<double>(out.presence[t]), kProbClamp, 1.0 - kProbClamp);
    acc += y.labels[t] ? -std::log(p) : -std::log(1.0 - p);
  }
  return acc / static_cast<double>(out.length());
}

double dec_loss(const DetectorOutput& out, const Message& m, const PresenceMask& y) {
  if (out.length() != y.length()) throw ValidationError("dec_loss: length mismatch");
  const int bits = out.message_logits.rows;
  m.validate(bits);
  int64_t active = 0;
  for (uint8_t v : y.labels) active += v;
  if (active == 0) return 0.0;
  double acc = 0.0;
  for (int b = 0; b < bits; ++b) {
    for (int64_t t = 0; t < out.length(); ++t) {
      if (!y.labels[t]) continue;
      const double z = out.message_logits(b, t);
      const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      acc += softplus - m.bits[b] * z;
    }
  }
  return acc / static_cast<double>(active * bits);
}

// ---- optimizer -----------------------------------------------------------------

void NamedGrads::accumulate(const std::string& name, const ad::FTensor& g) {
  for (auto& [n, t] : items) {
    if (n == name) {
      for (int64_t i = 0; i < t.size(); ++i) t.v[i] += g.v[i];
      return;
    }
  }
  items.emplace_back(name, g);
}

void NamedGrads::scale_all(double s) {
  for (auto& [n, t] : items) {
    for (auto& v : t.v) v = static_cast<float>(v * s);
  }
}

bool NamedGrads::all_finite() const {
  for (const auto& [n, t] : items) {
    for (float v : t.v) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

bool AdamOptimizer::step(ParameterStore& store, const NamedGrads& grads) {
  if (!grads.all_finite()) {
    ++skipped_;
    std::fprintf(stderr, "[adam] non-finite gradient at update %lld, step skipped\n",
                 static_cast<long long>(t_ + 1));
    return false;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, g] : grads.items) {
    ad::FTensor& p = store.at(name);
    if (!p.same_shape(g)) throw ValidationError("adam: gradient shape mismatch for " + name);
    Moments& mo = state_[name];
    if (mo.m.empty()) {
      mo.m = ad::FTensor(p.rows, p.cols);
      mo.v = ad::FTensor(p.rows, p.cols);
    }
    for (int64_t i = 0; i < p.size(); ++i) {
      const double gi = g.v[i];
      mo.m.v[i] = static_cast<float>(beta1_ * mo.m.v[i] + (1.0 - beta1_) * gi);
      mo.v.v[i] = static_cast<float>(beta2_ * mo.v.v[i] + (1.0 - beta2_) * gi * gi);
      const double mhat = mo.m.v[i] / bc1;
      const double vhat = mo.v.v[i] / bc2;
      p.v[i] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
  return true;
}

ad::FTensor balance_gradients(const std::vector<std::pair<double, ad::FTensor>>& weighted,
                              double eps) {
  if (weighted.empty()) throw ValidationError("balance_gradients: no gradients");
  ad::FTensor out(weighted.front().second.rows, weighted.front().second.cols);
  for (const auto& [lambda, g] : weighted) {
    if (!g.same_shape(out)) throw ValidationError("balance_gradients: shape mismatch");
    double norm = 0.0;
    for (float v : g.v) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (norm < eps) continue;  // silent loss contributes nothing
    const double scale = lambda / norm;
    for (int64_t i = 0; i < out.size(); ++i) {
      out.v[i] += static_cast<float>(scale * g.v[i]);
    }
  }
  return out;
}

// ---- training loop ---------------------------------------------------------------

namespace {

struct ElementOutcome {
  NamedGrads gen_grads;
  NamedGrads det_grads;
  NamedGrads disc_grads;
  double l1 = 0, msspec = 0, adv = 0, loud = 0, loc = 0, dec = 0, disc = 0;
  double si_snr_probe = 0;
  double mask_accuracy = 0;
  double clean_accuracy = 0;
  int augment_index = -1;
};

ad::FTensor row_tensor(const std::vector<float>& v) {
  ad::FTensor t(1, static_cast<int64_t>(v.size()));
  std::copy(v.begin(), v.end(), t.v.begin());
  return t;
}

// Hinge adversarial objective for the generator plus an L1 feature-matching
// term, both folded under the adv weight.
ad::FTape::Id generator_adv_op(ad::FTape& t, BoundParams& disc_params, ad::FTape::Id s_const,
                               ad::FTape::Id s_w, const ModelConfig& mc) {
  auto fake = discriminator_forward_op(t, disc_params, s_w, mc);
  auto real = discriminator_forward_op(t, disc_params, s_const, mc);
  ad::FTape::Id total = t.constant(ad::FTensor::scalar(0.0f));
  int terms = 0;
  for (size_t i = 0; i < fake.scores.size(); ++i) {
    auto ones_minus = t.add_scalar(t.scale(fake.scores[i], -1.0), 1.0);
    total = t.add(total, t.mean_all(t.relu(ones_minus)));
    ++terms;
  }
  ad::FTape::Id feat = t.constant(ad::FTensor::scalar(0.0f));
  int feat_terms = 0;
  for (size_t i = 0; i < fake.features.size(); ++i) {
    for (size_t j = 0; j < fake.features[i].size(); ++j) {
      feat = t.add(feat, t.mean_all(t.abs_(t.sub(fake.features[i][j], real.features[i][j]))));
      ++feat_terms;
    }
  }
  auto hinge = t.scale(total, 1.0 / std::max(1, terms));
  auto fm = t.scale(feat, 1.0 / std::max(1, feat_terms));
  return t.add(hinge, fm);
}

ElementOutcome run_element(const TrainConfig& cfg, const ModelConfig& mc,
                           const ParameterStore& gen, const ParameterStore& det,
                           const ParameterStore& disc, const AugmentPolicy& policy,
                           const LoudnessConfig& loud_cfg, const std::vector<float>& s,
                           const std::vector<float>& neighbor, uint64_t element_seed,
                           double perc_scale) {
  constexpr int kSampleRate = 16000;
  Rng rng(element_seed);
  ElementOutcome out;

  Message message = cfg.use_message && mc.message_bits > 0
                        ? Message::random(mc.message_bits, rng)
                        : Message::zeros(std::max(1, mc.message_bits));

  // Stage (i): generator forward on the main tape.
  ad::FTape tape;
  BoundParams gen_params(tape, gen, true);
  auto s_leaf = tape.constant(row_tensor(s));
  std::optional<Message> maybe_msg;
  if (cfg.use_message && mc.message_bits > 0) maybe_msg = message;
  auto delta = generator_delta_op(tape, gen_params, s_leaf, mc, maybe_msg);
  auto s_w = tape.add(s_leaf, delta);
  const std::vector<float> s_w_val = tape.val(s_w).v;

  // Stage (ii): watermark masking; the graph keeps s_w where provenance is
  // watermarked and injects constants elsewhere.
  MaskResult mask = mask_watermark(s, s_w_val, cfg.mask_windows, neighbor, rng);
  ad::FTensor keep(1, static_cast<int64_t>(s.size()));
  ad::FTensor override_vals(1, static_cast<int64_t>(s.size()));
  for (size_t t = 0; t < s.size(); ++t) {
    keep.v[t] = mask.labels.labels[t] ? 1.0f : 0.0f;
    override_vals.v[t] = mask.labels.labels[t] ? 0.0f : mask.mixed[t];
  }
  auto mixed = tape.add_const(tape.mul_const(s_w, keep), override_vals);

  // Stage (iii): one robustness edit per element.
  std::vector<uint8_t> y_aug = mask.labels.labels;
  auto edited = mixed;
  if (cfg.use_augmentations) {
    out.augment_index = policy.sample_index(rng);
    double label_scale = 1.0;
    edited = apply_augment_op(tape, mixed, policy.specs[out.augment_index], kSampleRate, rng,
                              &label_scale);
    const int64_t new_len = tape.val(edited).cols;
    if (new_len != static_cast<int64_t>(y_aug.size())) {
      y_aug = rescale_labels(y_aug, new_len);
    }
  }

  // Stage (iv): detector on the processed watermarked signal and on the clean
  // original.
  BoundParams det_params(tape, det, true);
  auto det_aug = detector_forward_op(tape, det_params, edited, mc);
  auto loc1 = loc_loss_op(tape, det_aug.presence, y_aug);
  ad::FTape::Id dec_node = -1;
  if (cfg.use_message && mc.message_bits > 0) {
    dec_node = dec_loss_op(tape, det_aug.message_logits, message, y_aug);
  }
  auto det_clean = detector_forward_op(tape, det_params, s_leaf, mc);
  std::vector<uint8_t> zeros(s.size(), 0);
  auto loc0 = loc_loss_op(tape, det_clean.presence, zeros);
  auto loc_node = tape.scale(tape.add(loc1, loc0), 0.5);

  // Perceptual losses on a side tape with s_w detached, so each gradient can
  // be renormalized at the generated audio before entering the generator.
  ad::Tape<float> ltape;
  auto ls = ltape.constant(row_tensor(s));
  auto lsw = ltape.leaf(row_tensor(s_w_val), true);
  auto ldelta = ltape.sub(lsw, ls);
  auto l1_node = l1_loss_op(ltape, ldelta);
  auto ms_node = msspec_loss_op(ltape, ls, lsw, kSampleRate);
  TfGridParams grid;
  auto loud_node = tf_loudness_loss_op(ltape, ls, ldelta, kSampleRate, grid, loud_cfg);
  BoundParams disc_frozen(ltape, disc, false);
  auto adv_node = generator_adv_op(ltape, disc_frozen, ls, lsw, mc);

  std::vector<std::pair<double, ad::FTensor>> weighted;
  auto pull = [&](ad::FTape::Id node, double lambda) {
    ltape.backward(node);
    weighted.emplace_back(lambda, ltape.grad(lsw));
    ltape.zero_grads();
  };
  pull(l1_node, cfg.weights.l1 * perc_scale);
  pull(ms_node, cfg.weights.msspec * perc_scale);
  pull(adv_node, cfg.weights.adv * perc_scale);
  pull(loud_node, cfg.weights.loud * perc_scale);
  ad::FTensor g_perceptual = balance_gradients(weighted);

  // One sweep: weighted localization/decoding seeds plus the balanced
  // perceptual seed injected at s_w.
  std::vector<std::pair<ad::FTape::Id, ad::FTensor>> seeds;
  seeds.emplace_back(loc_node, ad::FTensor::scalar(static_cast<float>(cfg.weights.loc)));
  if (dec_node >= 0) {
    seeds.emplace_back(dec_node, ad::FTensor::scalar(static_cast<float>(cfg.weights.dec)));
  }
  seeds.emplace_back(s_w, g_perceptual);
  tape.backward_seeded(seeds);

  for (const auto& [name, g] : gen_params.grads()) out.gen_grads.accumulate(name, *g);
  for (const auto& [name, g] : det_params.grads()) out.det_grads.accumulate(name, *g);

  // Discriminator hinge step on its own tape (simultaneous update).
  if (cfg.train_discriminator) {
    ad::FTape dtape;
    BoundParams disc_train(dtape, disc, true);
    auto dr = dtape.constant(row_tensor(s));
    auto df = dtape.constant(row_tensor(s_w_val));
    auto real = discriminator_forward_op(dtape, disc_train, dr, mc);
    auto fake = discriminator_forward_op(dtape, disc_train, df, mc);
    ad::FTape::Id dloss = dtape.constant(ad::FTensor::scalar(0.0f));
    for (size_t i = 0; i < real.scores.size(); ++i) {
      auto real_term = dtape.relu(dtape.add_scalar(dtape.scale(real.scores[i], -1.0), 1.0));
      auto fake_term = dtape.relu(dtape.add_scalar(fake.scores[i], 1.0));
      dloss = dtape.add(dloss, dtape.add(dtape.mean_all(real_term), dtape.mean_all(fake_term)));
    }
    dloss = dtape.scale(dloss, 1.0 / std::max<size_t>(1, real.scores.size()));
    dtape.backward(dloss);
    for (const auto& [name, g] : disc_train.grads()) out.disc_grads.accumulate(name, *g);
    out.disc = dtape.val(dloss).v[0];
  }

  // Scalar diagnostics.
  out.l1 = ltape.val(l1_node).v[0];
  out.msspec = ltape.val(ms_node).v[0];
  out.adv = ltape.val(adv_node).v[0];
  out.loud = ltape.val(loud_node).v[0];
  out.loc = tape.val(loc_node).v[0];
  out.dec = dec_node >= 0 ? tape.val(dec_node).v[0] : 0.0;
  // Silent crops (speech pauses) have no reference energy; skip the probe.
  double ref_energy = 0.0;
  for (float v : s) ref_energy += static_cast<double>(v) * v;
  out.si_snr_probe = ref_energy > 0.0 ? si_snr(s, s_w_val) : 0.0;

  const auto& p_aug = tape.val(det_aug.presence);
  int64_t hits = 0;
  for (int64_t t = 0; t < p_aug.cols; ++t) {
    const bool pred = p_aug.v[t] > 0.5f;
    if (pred == (y_aug[t] != 0)) ++hits;
  }
  out.mask_accuracy = static_cast<double>(hits) / static_cast<double>(p_aug.cols);
  const auto& p_clean = tape.val(det_clean.presence);
  hits = 0;
  for (int64_t t = 0; t < p_clean.cols; ++t) {
    if (p_clean.v[t] <= 0.5f) ++hits;
  }
  out.clean_accuracy = static_cast<double>(hits) / static_cast<double>(p_clean.cols);
  return out;
}

}  // namespace

std::string StepMetrics::to_json() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\"step\":%lld,\"l1\":%.6g,\"msspec\":%.6g,\"adv\":%.6g,\"loud\":%.6g,"
                "\"loc\":%.6g,\"dec\":%.6g,\"disc\":%.6g,\"si_snr\":%.6g,"
                "\"mask_acc\":%.6g,\"clean_acc\":%.6g}",
                static_cast<long long>(step), l1, msspec, adv, loud, loc, dec, disc,
                si_snr_probe, mask_accuracy, clean_accuracy);
  return buf;
}

TrainResult train_loop(const TrainConfig& cfg, const ModelConfig& model_cfg,
                       const std::vector<std::vector<float>>& clips,
                       const std::string& out_dir,
                       const std::function<void(const StepMetrics&)>& on_metrics) {
  cfg.validate();
  model_cfg.validate();
  if (clips.empty()) throw ConfigError("train: dataset is empty");
  for (const auto& c : clips) {
    if (static_cast<int>(c.size()) < cfg.sample_length) {
      throw ConfigError("train: every clip must hold at least sample_length samples");
    }
  }

  TrainResult result;
  result.generator = init_generator(model_cfg, cfg.seed);
  result.detector = init_detector(model_cfg, cfg.seed);
  result.discriminator = init_discriminator(model_cfg, cfg.seed);

  const LoudnessConfig loud_cfg = LoudnessConfig::for_rate(16000);
  AugmentPolicy policy = AugmentPolicy::train_default();

  std::ofstream metrics_file;
  const bool persist = !out_dir.empty();
  if (persist) {
    std::filesystem::create_directories(out_dir);
    metrics_file.open(out_dir + "/metrics.jsonl", std::ios::app);
  }
  auto save_all = [&]() {
    if (!persist) return;
    save_checkpoint(result.generator, out_dir + "/generator.ckpt");
    save_checkpoint(result.detector, out_dir + "/detector.ckpt");
    save_checkpoint(result.discriminator, out_dir + "/discriminator.ckpt");
  };
  save_all();  // init checkpoint

  AdamOptimizer gen_opt(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
  AdamOptimizer det_opt(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
  AdamOptimizer disc_opt(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);

  const int64_t n_clips = static_cast<int64_t>(clips.size());
  for (int64_t step = 0; step < cfg.total_steps; ++step) {
    // Batch composition comes from a per-step stream so runs are reproducible
    // regardless of worker scheduling.
    Rng batch_rng(Rng::mix(cfg.seed, 0x627463 + step));
    struct Draw {
      const std::vector<float>* clip;
      int64_t offset;
      const std::vector<float>* neighbor_clip;
      int64_t neighbor_offset;
      uint64_t seed;
    };
    std::vector<Draw> draws(cfg.batch_size);
    for (int e = 0; e < cfg.batch_size; ++e) {
      Draw& d = draws[e];
      d.clip = &clips[batch_rng.uniform_int(0, n_clips - 1)];
      d.offset = batch_rng.uniform_int(
          0, static_cast<int64_t>(d.clip->size()) - cfg.sample_length);
      d.neighbor_clip = &clips[batch_rng.uniform_int(0, n_clips - 1)];
      d.neighbor_offset = batch_rng.uniform_int(
          0, static_cast<int64_t>(d.neighbor_clip->size()) - cfg.sample_length);
      d.seed = Rng::mix(cfg.seed, 0x656c656dULL + static_cast<uint64_t>(step) * 8191 + e);
    }

    const double perc_scale =
        cfg.perc_warmup_steps > 0
            ? std::min(1.0, static_cast<double>(step + 1) /
                                static_cast<double>(cfg.perc_warmup_steps))
            : 1.0;

    std::vector<ElementOutcome> outcomes(cfg.batch_size);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (int e = 0; e < cfg.batch_size; ++e) {
      const Draw& d = draws[e];
      std::vector<float> s(d.clip->begin() + d.offset,
                           d.clip->begin() + d.offset + cfg.sample_length);
      std::vector<float> neighbor(
          d.neighbor_clip->begin() + d.neighbor_offset,
          d.neighbor_clip->begin() + d.neighbor_offset + cfg.sample_length);
      outcomes[e] = run_element(cfg, model_cfg, result.generator, result.detector,
                                result.discriminator, policy, loud_cfg, s, neighbor, d.seed,
                                perc_scale);
    }

    // Deterministic reduction in element order.
    NamedGrads gen_grads, det_grads, disc_grads;
    StepMetrics m;
    m.step = step + 1;
    for (int e = 0; e < cfg.batch_size; ++e) {
      ElementOutcome& o = outcomes[e];
      for (auto& [name, g] : o.gen_grads.items) gen_grads.accumulate(name, g);
      for (auto& [name, g] : o.det_grads.items) det_grads.accumulate(name, g);
      for (auto& [name, g] : o.disc_grads.items) disc_grads.accumulate(name, g);
      m.l1 += o.l1;
      m.msspec += o.msspec;
      m.adv += o.adv;
      m.loud += o.loud;
      m.loc += o.loc;
      m.dec += o.dec;
      m.disc += o.disc;
      m.si_snr_probe += o.si_snr_probe;
      m.mask_accuracy += o.mask_accuracy;
      m.clean_accuracy += o.clean_accuracy;
      if (o.augment_index >= 0) policy.update_accuracy(o.augment_index, o.mask_accuracy);
    }
    const double inv_b = 1.0 / cfg.batch_size;
    gen_grads.scale_all(inv_b);
    det_grads.scale_all(inv_b);
    disc_grads.scale_all(inv_b);
    m.l1 *= inv_b;
    m.msspec *= inv_b;
    m.adv *= inv_b;
    m.loud *= inv_b;
    m.loc *= inv_b;
    m.dec *= inv_b;
    m.disc *= inv_b;
    m.si_snr_probe *= inv_b;
    m.mask_accuracy *= inv_b;
    m.clean_accuracy *= inv_b;

    gen_opt.step(result.generator, gen_grads);
    det_opt.step(result.detector, det_grads);
    if (cfg.train_discriminator) disc_opt.step(result.discriminator, disc_grads);
    result.generator.step = step + 1;
    result.detector.step = step + 1;
    result.discriminator.step = step + 1;

    if (cfg.metrics_interval > 0 &&
        ((step + 1) % cfg.metrics_interval == 0 || step + 1 == cfg.total_steps)) {
      result.metrics.push_back(m);
      if (metrics_file.is_open()) metrics_file << m.to_json() << "\n" << std::flush;
      if (on_metrics) on_metrics(m);
    }
    if (cfg.checkpoint_interval > 0 && (step + 1) % cfg.checkpoint_interval == 0) {
      save_all();
    }
  }
  save_all();
  return result;
}

}  // namespace localmark

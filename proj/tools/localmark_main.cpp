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

// localmark: embed and detect sample-localized audio watermarks.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "localmark/attack.hpp"
#include "localmark/config.hpp"
#include "localmark/dataset.hpp"
#include "localmark/errors.hpp"
#include "localmark/evalproto.hpp"
#include "localmark/fpr.hpp"
#include "localmark/inference.hpp"
#include "localmark/losses.hpp"
#include "localmark/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace localmark;

namespace {

std::vector<std::string> collect_wavs(const std::string& input) {
  std::vector<std::string> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && e.path().extension() == ".wav") {
        files.push_back(e.path().string());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(input)) {
    files.push_back(input);
  }
  if (files.empty()) throw UsageError("no .wav inputs under " + input);
  return files;
}

AudioClip load_at_16k(const std::string& path) {
  AudioClip clip = load_wav(path);
  if (clip.sample_rate != 16000) clip = resample(clip, 16000);
  return clip;
}

ParameterStore load_ckpt_arg(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("checkpoint not found: " + path);
  return load_checkpoint(path);
}

// Atomic line-oriented writer: write to .tmp then rename.
class AtomicFile {
 public:
  explicit AtomicFile(const std::string& path) : path_(path), tmp_(path + ".tmp"), out_(tmp_) {
    if (!out_) throw IoError("cannot write " + path);
  }
  std::ofstream& stream() { return out_; }
  void commit() {
    out_.close();
    fs::rename(tmp_, path_);
  }

 private:
  std::string path_, tmp_;
  std::ofstream out_;
};

std::vector<std::pair<int64_t, int64_t>> run_lengths(const PresenceMask& mask) {
  std::vector<std::pair<int64_t, int64_t>> runs;
  int64_t start = -1;
  for (int64_t t = 0; t < mask.length(); ++t) {
    if (mask.labels[t] && start < 0) start = t;
    if (!mask.labels[t] && start >= 0) {
      runs.emplace_back(start, t - start);
      start = -1;
    }
  }
  if (start >= 0) runs.emplace_back(start, mask.length() - start);
  return runs;
}

RunConfig load_run_config(const std::string& config_path) {
  if (config_path.empty()) return RunConfig{};
  if (!fs::is_regular_file(config_path)) throw UsageError("config not found: " + config_path);
  return RunConfig::from_file(config_path);
}

// ---- commands -----------------------------------------------------------

void set_jobs(int jobs) {
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

int cmd_embed(const std::string& checkpoint, const std::string& input,
              const std::string& out_dir, const std::string& message_hex, bool pcm16,
              int jobs) {
  set_jobs(jobs);
  const ParameterStore gen = load_ckpt_arg(checkpoint);
  const ModelConfig cfg = ModelConfig::deserialize(gen.config_text);
  const auto files = collect_wavs(input);
  fs::create_directories(out_dir);

  std::optional<Message> message;
  if (cfg.message_bits > 0) {
    message = message_hex.empty() ? Message::zeros(cfg.message_bits)
                                  : Message::from_hex(message_hex, cfg.message_bits);
  } else if (!message_hex.empty()) {
    throw UsageError("model carries no message bits but --message was given");
  }

  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(gen.config_hash));
  std::vector<std::string> manifest_lines(files.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (size_t i = 0; i < files.size(); ++i) {
    const AudioClip clip = load_at_16k(files[i]);
    const WatermarkDelta delta = generator_forward(gen, clip, message);
    const AudioClip marked = apply_watermark(clip, delta);
    const std::string out_path =
        out_dir + "/" + fs::path(files[i]).stem().string() + ".wm.wav";
    save_wav(marked, out_path, pcm16 ? WavEncoding::kPcm16 : WavEncoding::kFloat32);
    manifest_lines[i] =
        out_path + " " + (message ? message->to_hex() : "-") + " " + hash_hex;
  }
  AtomicFile manifest(out_dir + "/manifest.txt");
  manifest.stream() << "# localmark-embed-manifest v1\n";
  for (const auto& line : manifest_lines) manifest.stream() << line << "\n";
  manifest.commit();
  std::printf("embedded %zu file(s) into %s\n", files.size(), out_dir.c_str());
  return 0;
}

int cmd_detect_family(const std::string& mode, const std::string& checkpoint,
                      const std::string& input, double threshold,
                      const std::string& registry_path, const std::string& out_path,
                      int jobs) {
  set_jobs(jobs);
  const ParameterStore det = load_ckpt_arg(checkpoint);
  const ModelConfig cfg = ModelConfig::deserialize(det.config_text);
  const auto files = collect_wavs(input);

  AttributionRegistry registry;
  if (mode == "attribute") {
    if (registry_path.empty()) throw UsageError("attribute requires --registry");
    if (!fs::is_regular_file(registry_path)) {
      throw UsageError("registry not found: " + registry_path);
    }
    registry = AttributionRegistry::load(registry_path, cfg.message_bits);
  }

  std::vector<std::string> lines(files.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (size_t fi = 0; fi < files.size(); ++fi) {
    const std::string& f = files[fi];
    const AudioClip clip = load_at_16k(f);
    const DetectorOutput out = detector_forward(det, clip);
    const DetectionResult d = detect(out, threshold);
    json rec;
    rec["file"] = f;
    rec["score"] = d.score;
    rec["flagged"] = d.flagged;
    rec["threshold"] = d.threshold;
    if (mode == "localize" || mode == "attribute") {
      const PresenceMask mask = localize(out, threshold);
      json runs = json::array();
      for (const auto& [start, len] : run_lengths(mask)) {
        runs.push_back({start, len});
      }
      rec["mask_runlengths"] = runs;
      if (cfg.message_bits > 0 && d.flagged) {
        PresenceMask decode_mask = mask;
        int64_t active = 0;
        for (uint8_t v : decode_mask.labels) active += v;
        if (active == 0) std::fill(decode_mask.labels.begin(), decode_mask.labels.end(), uint8_t{1});
        rec["decoded_bits"] = decode_message(out, decode_mask).to_hex();
      }
    }
    if (mode == "attribute") {
      const AttributionResult res = attribute(out, registry, threshold);
      rec["model_id"] = res.model_id ? json(*res.model_id) : json(nullptr);
      rec["distance"] = res.model_id ? json(res.hamming_distance) : json(nullptr);
    }
    lines[fi] = rec.dump();
  }

  if (!out_path.empty()) {
    AtomicFile out(out_path);
    for (const auto& l : lines) out.stream() << l << "\n";
    out.commit();
  }
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, int64_t steps_override, int64_t seed_override,
              const std::string& preset) {
  RunConfig cfg = load_run_config(config_path);
  if (!preset.empty()) {
    if (preset == "desk") cfg.model = ModelConfig{};
    else if (preset == "paper") cfg.model = ModelConfig::paper_scale();
    else if (preset == "small") cfg.model = ModelConfig::small();
    else throw UsageError("unknown preset " + preset);
  }
  if (steps_override >= 0) cfg.train.total_steps = steps_override;
  if (seed_override >= 0) cfg.train.seed = static_cast<uint64_t>(seed_override);
  if (!fs::is_directory(data_dir)) throw UsageError("data dir not found: " + data_dir);

  const WavFolder data = WavFolder::load(data_dir, 16000, cfg.train.sample_length);
  if (data.clips.empty()) {
    throw UsageError("no usable clips (need >= sample_length) in " + data_dir);
  }
  std::fprintf(stderr, "training on %zu clips for %lld steps\n", data.clips.size(),
               static_cast<long long>(cfg.train.total_steps));
  train_loop(cfg.train, cfg.model, data.clips, out_dir, [](const StepMetrics& m) {
    std::fprintf(stderr, "%s\n", m.to_json().c_str());
  });
  std::printf("checkpoints written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_augment_eval(const std::string& input, const std::string& out_dir,
                     const std::string& config_path, uint64_t seed) {
  const RunConfig cfg = load_run_config(config_path);
  const auto files = collect_wavs(input);
  fs::create_directories(out_dir);
  AtomicFile manifest(out_dir + "/manifest.txt");
  manifest.stream() << "# localmark-augment-manifest v1\n";
  for (const std::string& f : files) {
    const AudioClip clip = load_at_16k(f);
    for (const AugmentSpec& spec : cfg.eval_augments) {
      Rng rng(Rng::mix(seed, std::hash<std::string>{}(f + spec.name())));
      const AudioClip edited = apply_augment(clip, spec, rng);
      const std::string out_path =
          out_dir + "/" + fs::path(f).stem().string() + "." + spec.name() + ".wav";
      save_wav(edited, out_path, WavEncoding::kFloat32);
      manifest.stream() << out_path << " " << spec.name();
      for (const auto& [k, v] : spec.params) manifest.stream() << " " << k << "=" << v;
      manifest.stream() << "\n";
    }
  }
  manifest.commit();
  std::printf("augmented %zu file(s) into %s\n", files.size(), out_dir.c_str());
  return 0;
}

std::vector<AudioClip> eval_clips_from(const std::string& data_dir, int count, double seconds,
                                       int64_t offset_index) {
  const WavFolder data =
      WavFolder::load(data_dir, 16000, static_cast<int64_t>(seconds * 16000));
  if (data.clips.empty()) throw UsageError("no usable clips in " + data_dir);
  std::vector<AudioClip> clips;
  const int64_t want = std::llround(seconds * 16000);
  for (int i = 0; i < count; ++i) {
    const auto& src = data.clips[(offset_index + i) % data.clips.size()];
    AudioClip c;
    c.sample_rate = 16000;
    c.samples.assign(src.begin(), src.begin() + std::min<int64_t>(want, src.size()));
    if (c.length() < want) continue;
    clips.push_back(std::move(c));
  }
  if (clips.empty()) throw UsageError("clips in " + data_dir + " are shorter than requested");
  return clips;
}

int cmd_eval(const std::string& model_dir, const std::string& data_dir,
             const std::string& out_dir, const std::string& config_path, bool quality,
             uint64_t seed) {
  const RunConfig cfg = load_run_config(config_path);
  const ParameterStore gen = load_ckpt_arg(model_dir + "/generator.ckpt");
  const ParameterStore det = load_ckpt_arg(model_dir + "/detector.ckpt");
  const ModelConfig mc = ModelConfig::deserialize(gen.config_text);
  fs::create_directories(out_dir);

  // Robustness table (per-edit Acc/TPR/FPR at best-accuracy threshold + AUC).
  {
    const auto clips =
        eval_clips_from(data_dir, cfg.eval.clip_count, cfg.eval.clip_seconds, 0);
    const auto rows =
        robustness_table(gen, det, clips, cfg.eval_augments, mc.message_bits > 0, seed);
    AtomicFile f(out_dir + "/robustness.csv");
    f.stream() << "edit,accuracy,tpr,fpr,auc,threshold\n";
    for (const auto& r : rows) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.edit.c_str(),
                    r.accuracy, r.tpr, r.fpr, r.auc, r.threshold);
      f.stream() << buf;
    }
    f.commit();
  }

  // Localization IoU vs watermarked duration.
  {
    const auto clips = eval_clips_from(data_dir, cfg.eval.loc_clip_count,
                                       cfg.eval.loc_clip_seconds, 1000);
    const auto rows = localization_curve(gen, clips, cfg.eval.loc_durations,
                                         detector_mask_fn(det, cfg.eval.detect_threshold),
                                         seed, mc.message_bits > 0
                                                   ? std::optional<int>(mc.message_bits)
                                                   : std::nullopt);
    AtomicFile f(out_dir + "/localization.csv");
    f.stream() << "duration_seconds,mean_iou,sample_accuracy\n";
    for (const auto& r : rows) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%.3f,%.6f,%.6f\n", r.duration_seconds, r.mean_iou,
                    r.sample_accuracy);
      f.stream() << buf;
    }
    f.commit();
  }

  // Attribution over simulated version registries.
  if (mc.message_bits > 0) {
    const auto clips = eval_clips_from(data_dir, cfg.eval.attribution_clip_count,
                                       cfg.eval.clip_seconds, 2000);
    const auto rows = attribution_table(gen, det, clips, cfg.eval.attribution_sizes,
                                        cfg.eval.attribution_fpr, seed);
    AtomicFile f(out_dir + "/attribution.csv");
    f.stream() << "versions,accuracy,far,detection_rate,threshold\n";
    for (const auto& r : rows) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f\n", r.versions, r.accuracy,
                    r.far, r.detection_rate, r.threshold);
      f.stream() << buf;
    }
    f.commit();
  }

  // Runtime: single pass vs sliding window.
  {
    const auto clips = eval_clips_from(data_dir, cfg.eval.runtime_clip_count,
                                       cfg.eval.runtime_clip_seconds, 3000);
    const RuntimeRow r = runtime_benchmark(det, clips);
    AtomicFile f(out_dir + "/runtime.csv");
    f.stream() << "clip_seconds,single_ms,sliding_ms,single_passes,sliding_passes,speedup\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.2f,%.3f,%.3f,%lld,%lld,%.2f\n", r.clip_seconds,
                  r.single_ms, r.sliding_ms, static_cast<long long>(r.single_passes),
                  static_cast<long long>(r.sliding_passes), r.speedup);
    f.stream() << buf;
    f.commit();
  }

  // Per-file quality metrics.
  if (quality) {
    const auto clips =
        eval_clips_from(data_dir, cfg.eval.clip_count, cfg.eval.clip_seconds, 0);
    const LoudnessConfig lc = LoudnessConfig::for_rate(16000);
    AtomicFile f(out_dir + "/quality.csv");
    f.stream() << "index,si_snr_db,loudness_delta_lu\n";
    for (size_t i = 0; i < clips.size(); ++i) {
      Rng rng(Rng::mix(seed, i));
      std::optional<Message> msg;
      if (mc.message_bits > 0) msg = Message::random(mc.message_bits, rng);
      const AudioClip marked =
          apply_watermark(clips[i], generator_forward(gen, clips[i], msg));
      const double snr = si_snr(clips[i], marked);
      const double delta_lu = loudness(marked.samples, lc) - loudness(clips[i].samples, lc);
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%zu,%.3f,%.4f\n", i, snr, delta_lu);
      f.stream() << buf;
    }
    f.commit();
  }

  std::printf("eval reports written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_attack(const std::string& model_dir, const std::string& mode,
               const std::string& data_dir, const std::string& out_csv,
               const std::string& proxy_path, const std::string& surrogate_path,
               const std::string& config_path, int surrogate_steps, uint64_t seed) {
  const RunConfig cfg = load_run_config(config_path);
  const ParameterStore gen = load_ckpt_arg(model_dir + "/generator.ckpt");
  const ParameterStore det = load_ckpt_arg(model_dir + "/detector.ckpt");
  const ModelConfig mc = ModelConfig::deserialize(gen.config_text);

  auto clips = eval_clips_from(data_dir, cfg.attack.clip_count, cfg.attack.clip_seconds, 0);
  std::vector<AudioClip> marked(clips.size());
  for (size_t i = 0; i < clips.size(); ++i) {
    Rng rng(Rng::mix(seed, i));
    std::optional<Message> msg;
    if (mc.message_bits > 0) msg = Message::random(mc.message_bits, rng);
    marked[i] = apply_watermark(clips[i], generator_forward(gen, clips[i], msg));
  }

  AttackSweepOptions opt;
  opt.alpha_grid = cfg.attack.alpha_grid;
  opt.steps = cfg.attack.steps;
  opt.learning_rate = cfg.attack.learning_rate;
  opt.seed = seed;

  std::vector<AttackSweepRow> rows;
  if (mode == "whitebox") {
    rows = attack_sweep(det, &det, "whitebox", marked, opt);
  } else if (mode == "semiblackbox") {
    if (proxy_path.empty()) throw UsageError("semiblackbox requires --proxy-detector");
    const ParameterStore proxy = load_ckpt_arg(proxy_path);
    rows = attack_sweep(det, &proxy, "semiblackbox", marked, opt);
  } else if (mode == "blackbox") {
    ParameterStore surrogate;
    if (!surrogate_path.empty() && fs::is_regular_file(surrogate_path)) {
      surrogate = load_checkpoint(surrogate_path);
    } else {
      std::fprintf(stderr, "training surrogate classifier (%d steps)...\n", surrogate_steps);
      const SurrogateResult sr =
          train_surrogate(marked, clips, mc, surrogate_steps, 1e-4, seed);
      std::fprintf(stderr, "surrogate validation accuracy: %.3f\n", sr.validation_accuracy);
      surrogate = sr.classifier;
      if (!surrogate_path.empty()) save_checkpoint(surrogate, surrogate_path);
    }
    rows = attack_sweep(det, &surrogate, "blackbox", marked, opt);
  } else if (mode == "noise") {
    rows = attack_sweep(det, nullptr, "noise", marked, opt);
  } else {
    throw UsageError("unknown attack mode " + mode);
  }

  AtomicFile f(out_csv);
  f.stream() << "mode,alpha,si_snr_mean,detection_accuracy\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%.6g,%.3f,%.4f\n", r.mode.c_str(), r.alpha,
                  r.si_snr_mean, r.detection_accuracy);
    f.stream() << buf;
  }
  f.commit();
  std::printf("attack sweep written to %s\n", out_csv.c_str());
  return 0;
}

int cmd_fpr(int k, int tau, bool tau_grid, int64_t trials, double bias,
            const std::string& out_csv, const std::string& hist_csv, uint64_t seed) {
  if (k < 1) throw UsageError("--k must be >= 1");
  if (!tau_grid) {
    if (tau < 0 || tau > k) throw UsageError("--tau must be in 0..k");
    std::printf("%.6f\n", theoretical_fpr(k, tau));
    return 0;
  }

  // Monte-Carlo bit decisions against the all-zero reference message.
  const Message reference = Message::zeros(k);
  Rng rng(seed);
  std::vector<std::vector<double>> soft(trials, std::vector<double>(k));
  for (auto& row : soft) {
    for (double& s : row) s = rng.uniform() < bias ? 0.9 : 0.1;  // bit=1 w.p. bias
  }
  const EmpiricalFpr emp = empirical_fpr(soft, reference);

  std::string csv = "tau,theoretical,empirical,stderr\n";
  for (int t = 0; t <= k; ++t) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g\n", t, theoretical_fpr(k, t),
                  emp.fpr[t], emp.stderr_[t]);
    csv += buf;
  }
  if (!out_csv.empty()) {
    AtomicFile f(out_csv);
    f.stream() << csv;
    f.commit();
  } else {
    std::fputs(csv.c_str(), stdout);
  }
  if (!hist_csv.empty()) {
    AtomicFile f(hist_csv);
    f.stream() << "bin_low,bin_high,count\n";
    for (int b = 0; b < emp.histogram_bins; ++b) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%.3f,%.3f,%lld\n",
                    static_cast<double>(b) / emp.histogram_bins,
                    static_cast<double>(b + 1) / emp.histogram_bins,
                    static_cast<long long>(emp.histogram[b]));
      f.stream() << buf;
    }
    f.commit();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"localmark: localized audio watermarking"};
  app.require_subcommand(1);

  // embed
  auto* embed = app.add_subcommand("embed", "watermark WAV files");
  std::string e_ckpt, e_in, e_out, e_msg;
  bool e_pcm16 = false;
  embed->add_option("--checkpoint", e_ckpt, "generator checkpoint")->required();
  embed->add_option("--in", e_in, "input wav file or directory")->required();
  embed->add_option("--out-dir", e_out, "output directory")->required();
  embed->add_option("--message", e_msg, "message payload as hex");
  embed->add_flag("--pcm16", e_pcm16, "write PCM-16 instead of float32");
  int e_jobs = 0;
  embed->add_option("--jobs", e_jobs, "parallel file workers");

  // detect / localize / attribute share options
  std::string d_ckpt, d_in, d_out, d_registry;
  double d_threshold = 0.5;
  int d_jobs = 0;
  auto add_detect_opts = [&](CLI::App* cmd) {
    cmd->add_option("--checkpoint", d_ckpt, "detector checkpoint")->required();
    cmd->add_option("--in", d_in, "input wav file or directory")->required();
    cmd->add_option("--threshold", d_threshold, "detection threshold");
    cmd->add_option("--out", d_out, "write JSONL records here");
    cmd->add_option("--jobs", d_jobs, "parallel file workers");
  };
  auto* detect_cmd = app.add_subcommand("detect", "flag watermarked audio");
  add_detect_opts(detect_cmd);
  auto* localize_cmd = app.add_subcommand("localize", "per-sample watermark masks");
  add_detect_opts(localize_cmd);
  auto* attribute_cmd = app.add_subcommand("attribute", "match audio to a registry entry");
  add_detect_opts(attribute_cmd);
  attribute_cmd->add_option("--registry", d_registry, "registry manifest path");

  // train
  auto* train_cmd = app.add_subcommand("train", "joint generator/detector training");
  std::string t_config, t_data, t_out, t_preset;
  int64_t t_steps = -1, t_seed = -1;
  train_cmd->add_option("--config", t_config, "INI config file");
  train_cmd->add_option("--data", t_data, "folder of 16 kHz wav clips")->required();
  train_cmd->add_option("--out", t_out, "output run directory")->required();
  train_cmd->add_option("--steps", t_steps, "override total steps");
  train_cmd->add_option("--seed", t_seed, "override seed");
  train_cmd->add_option("--preset", t_preset, "model preset: desk|paper|small");

  // augment-eval
  auto* aug_cmd = app.add_subcommand("augment-eval", "apply the eval edit battery");
  std::string a_in, a_out, a_config;
  uint64_t a_seed = 0;
  aug_cmd->add_option("--in", a_in, "input wav file or directory")->required();
  aug_cmd->add_option("--out-dir", a_out, "output directory")->required();
  aug_cmd->add_option("--config", a_config, "INI config file");
  aug_cmd->add_option("--seed", a_seed, "random seed");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "robustness/localization/attribution reports");
  std::string v_model, v_data, v_out, v_config;
  bool v_quality = false;
  uint64_t v_seed = 0;
  eval_cmd->add_option("--model-dir", v_model, "run dir with generator/detector ckpts")->required();
  eval_cmd->add_option("--data", v_data, "held-out wav folder")->required();
  eval_cmd->add_option("--out", v_out, "report directory")->required();
  eval_cmd->add_option("--config", v_config, "INI config file");
  eval_cmd->add_flag("--quality", v_quality, "also write per-file SI-SNR / loudness");
  eval_cmd->add_option("--seed", v_seed, "random seed");

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "watermark-removal attack sweeps");
  std::string k_model, k_mode, k_data, k_out, k_proxy, k_surrogate, k_config;
  int k_surrogate_steps = 1000;
  uint64_t k_seed = 0;
  attack_cmd->add_option("--model-dir", k_model, "run dir with generator/detector ckpts")->required();
  attack_cmd->add_option("--mode", k_mode, "whitebox|semiblackbox|blackbox|noise")->required();
  attack_cmd->add_option("--data", k_data, "wav folder to watermark and attack")->required();
  attack_cmd->add_option("--out", k_out, "output CSV")->required();
  attack_cmd->add_option("--proxy-detector", k_proxy, "retrained detector (semiblackbox)");
  attack_cmd->add_option("--surrogate", k_surrogate, "surrogate checkpoint (blackbox)");
  attack_cmd->add_option("--surrogate-steps", k_surrogate_steps, "surrogate training steps");
  attack_cmd->add_option("--config", k_config, "INI config file");
  attack_cmd->add_option("--seed", k_seed, "random seed");

  // fpr
  auto* fpr_cmd = app.add_subcommand("fpr", "bit-match false-positive statistics");
  int f_k = 16, f_tau = -1;
  bool f_grid = false;
  int64_t f_trials = 100000;
  double f_bias = 0.5;
  std::string f_out, f_hist;
  uint64_t f_seed = 0;
  fpr_cmd->add_option("--k", f_k, "payload bits");
  fpr_cmd->add_option("--tau", f_tau, "decision threshold");
  fpr_cmd->add_flag("--tau-grid", f_grid, "emit the whole tau grid as CSV");
  fpr_cmd->add_option("--trials", f_trials, "Monte-Carlo trials for the empirical column");
  fpr_cmd->add_option("--bias", f_bias, "per-bit P(bit=1) for the Monte-Carlo run");
  fpr_cmd->add_option("--out", f_out, "CSV output path");
  fpr_cmd->add_option("--hist-out", f_hist, "bit-score histogram CSV path");
  fpr_cmd->add_option("--seed", f_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (embed->parsed()) return cmd_embed(e_ckpt, e_in, e_out, e_msg, e_pcm16, e_jobs);
    if (detect_cmd->parsed()) {
      return cmd_detect_family("detect", d_ckpt, d_in, d_threshold, "", d_out, d_jobs);
    }
    if (localize_cmd->parsed()) {
      return cmd_detect_family("localize", d_ckpt, d_in, d_threshold, "", d_out, d_jobs);
    }
    if (attribute_cmd->parsed()) {
      return cmd_detect_family("attribute", d_ckpt, d_in, d_threshold, d_registry, d_out, d_jobs);
    }
    if (train_cmd->parsed()) return cmd_train(t_config, t_data, t_out, t_steps, t_seed, t_preset);
    if (aug_cmd->parsed()) return cmd_augment_eval(a_in, a_out, a_config, a_seed);
    if (eval_cmd->parsed()) return cmd_eval(v_model, v_data, v_out, v_config, v_quality, v_seed);
    if (attack_cmd->parsed()) {
      return cmd_attack(k_model, k_mode, k_data, k_out, k_proxy, k_surrogate, k_config,
                        k_surrogate_steps, k_seed);
    }
    if (fpr_cmd->parsed()) {
      return cmd_fpr(f_k, f_tau, f_grid, f_trials, f_bias, f_out, f_hist, f_seed);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

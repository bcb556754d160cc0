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

#include "localmark/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "localmark/biquad.hpp"
#include "localmark/dsp_ops.hpp"
#include "localmark/errors.hpp"
#include "localmark/resample_kernel.hpp"

namespace localmark {

namespace {

constexpr int kFilterOrder = 8;

struct NameEntry {
  EditKind kind;
  const char* name;
};

constexpr NameEntry kNames[] = {
    {EditKind::kBandpass, "bandpass"},   {EditKind::kHighpass, "highpass"},
    {EditKind::kLowpass, "lowpass"},     {EditKind::kSpeed, "speed"},
    {EditKind::kResample, "resample"},   {EditKind::kBoost, "boost"},
    {EditKind::kDuck, "duck"},           {EditKind::kEcho, "echo"},
    {EditKind::kPinkNoise, "pink_noise"},{EditKind::kWhiteNoise, "white_noise"},
    {EditKind::kSmooth, "smooth"},       {EditKind::kCodecProxy, "codec_proxy"},
    {EditKind::kIdentity, "identity"},
};

// Randomized train parameters resolved against the rng at application time.
struct ResolvedEcho {
  double delay_seconds;
  double volume;
};

ResolvedEcho resolve_echo(const AugmentSpec& spec, Rng& rng) {
  if (spec.mode == AugmentSpec::Mode::kTrain) {
    return {rng.uniform(spec.param("delay_min"), spec.param("delay_max")),
            rng.uniform(spec.param("vol_min"), spec.param("vol_max"))};
  }
  return {spec.param("delay"), spec.param("volume")};
}

double resolve_speed(const AugmentSpec& spec, Rng& rng) {
  if (spec.mode == AugmentSpec::Mode::kTrain) {
    return rng.uniform(spec.param("min"), spec.param("max"));
  }
  return spec.param("factor");
}

int resolve_smooth(const AugmentSpec& spec, Rng& rng) {
  if (spec.mode == AugmentSpec::Mode::kTrain) {
    return static_cast<int>(rng.uniform_int(static_cast<int64_t>(spec.param("win_min")),
                                            static_cast<int64_t>(spec.param("win_max"))));
  }
  return static_cast<int>(spec.param("window"));
}

BiquadCascade filter_for(const AugmentSpec& spec, int sample_rate) {
  switch (spec.kind) {
    case EditKind::kHighpass:
      return butterworth_highpass(kFilterOrder, spec.param("cutoff"), sample_rate);
    case EditKind::kLowpass:
      return butterworth_lowpass(kFilterOrder, spec.param("cutoff"), sample_rate);
    case EditKind::kBandpass: {
      auto hp = butterworth_highpass(kFilterOrder, spec.param("low"), sample_rate);
      auto lp = butterworth_lowpass(kFilterOrder, spec.param("high"), sample_rate);
      hp.insert(hp.end(), lp.begin(), lp.end());
      return hp;
    }
    default:
      throw ConfigError("filter_for: not a filter edit");
  }
}

std::vector<double> smooth_kernel(int window) {
  if (window < 1) throw ConfigError("smooth window must be >= 1");
  return std::vector<double>(window, 1.0 / window);
}

int64_t smooth_origin(int window) { return (window - 1) / 2; }

std::vector<float> codec_proxy_values(const std::vector<float>& x, const AugmentSpec& spec) {
  const double proxy_rate = spec.param("rate");
  const double bits = spec.param("bits");
  const double levels = std::pow(2.0, bits - 1) - 1.0;
  const int64_t n = static_cast<int64_t>(x.size());
  SincPlan down(n, proxy_rate / 16000.0);
  auto low = down.apply(x.data());
  for (float& v : low) {
    const double c = std::clamp(static_cast<double>(v), -1.0, 1.0);
    v = static_cast<float>(std::round(c * levels) / levels);
  }
  SincPlan up(down.out_len, static_cast<double>(n) / static_cast<double>(down.out_len));
  auto restored = up.apply(low.data());
  restored.resize(n, 0.0f);
  return restored;
}

}  // namespace

std::string AugmentSpec::name() const {
  for (const auto& e : kNames) {
    if (e.kind == kind) return e.name;
  }
  throw ConfigError("unknown edit kind");
}

EditKind AugmentSpec::kind_from_name(const std::string& name) {
  for (const auto& e : kNames) {
    if (name == e.name) return e.kind;
  }
  throw ConfigError("unknown edit name: " + name);
}

double AugmentSpec::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) {
    throw ConfigError("edit " + name() + " is missing parameter " + key);
  }
  return it->second;
}

AugmentSpec AugmentSpec::train_default(EditKind kind) {
  AugmentSpec s;
  s.kind = kind;
  s.mode = Mode::kTrain;
  switch (kind) {
    case EditKind::kBandpass: s.params = {{"low", 300.0}, {"high", 8000.0}}; break;
    case EditKind::kHighpass: s.params = {{"cutoff", 500.0}}; break;
    case EditKind::kLowpass: s.params = {{"cutoff", 5000.0}}; break;
    case EditKind::kSpeed: s.params = {{"min", 0.9}, {"max", 1.1}}; break;
    case EditKind::kResample: s.params = {{"intermediate", 32000.0}}; break;
    case EditKind::kBoost: s.params = {{"factor", 1.2}}; break;
    case EditKind::kDuck: s.params = {{"factor", 0.8}}; break;
    case EditKind::kEcho:
      s.params = {{"delay_min", 0.1}, {"delay_max", 0.5}, {"vol_min", 0.1}, {"vol_max", 0.5}};
      break;
    case EditKind::kPinkNoise: s.params = {{"std", 0.01}}; break;
    case EditKind::kWhiteNoise: s.params = {{"std", 0.001}}; break;
    case EditKind::kSmooth: s.params = {{"win_min", 2.0}, {"win_max", 10.0}}; break;
    case EditKind::kCodecProxy: s.params = {{"rate", 8000.0}, {"bits", 8.0}}; break;
    case EditKind::kIdentity: break;
  }
  return s;
}

AugmentSpec AugmentSpec::eval_default(EditKind kind) {
  AugmentSpec s;
  s.kind = kind;
  s.mode = Mode::kEval;
  switch (kind) {
    case EditKind::kBandpass: s.params = {{"low", 500.0}, {"high", 5000.0}}; break;
    case EditKind::kHighpass: s.params = {{"cutoff", 1500.0}}; break;
    case EditKind::kLowpass: s.params = {{"cutoff", 500.0}}; break;
    case EditKind::kSpeed: s.params = {{"factor", 1.25}}; break;
    case EditKind::kResample: s.params = {{"intermediate", 32000.0}}; break;
    case EditKind::kBoost: s.params = {{"factor", 10.0}}; break;
    case EditKind::kDuck: s.params = {{"factor", 0.1}}; break;
    case EditKind::kEcho: s.params = {{"delay", 0.5}, {"volume", 0.5}}; break;
    case EditKind::kPinkNoise: s.params = {{"std", 0.1}}; break;
    case EditKind::kWhiteNoise: s.params = {{"std", 0.05}}; break;
    case EditKind::kSmooth: s.params = {{"window", 40.0}}; break;
    case EditKind::kCodecProxy: s.params = {{"rate", 8000.0}, {"bits", 8.0}}; break;
    case EditKind::kIdentity: break;
  }
  return s;
}

std::vector<AugmentSpec> AugmentSpec::train_battery() {
  std::vector<AugmentSpec> out;
  for (EditKind k :
       {EditKind::kBandpass, EditKind::kHighpass, EditKind::kLowpass, EditKind::kSpeed,
        EditKind::kResample, EditKind::kBoost, EditKind::kDuck, EditKind::kEcho,
        EditKind::kPinkNoise, EditKind::kWhiteNoise, EditKind::kSmooth,
        EditKind::kCodecProxy, EditKind::kIdentity}) {
    out.push_back(train_default(k));
  }
  return out;
}

std::vector<AugmentSpec> AugmentSpec::eval_battery() {
  std::vector<AugmentSpec> out;
  for (EditKind k :
       {EditKind::kBandpass, EditKind::kHighpass, EditKind::kLowpass, EditKind::kSpeed,
        EditKind::kResample, EditKind::kBoost, EditKind::kDuck, EditKind::kEcho,
        EditKind::kPinkNoise, EditKind::kWhiteNoise, EditKind::kSmooth,
        EditKind::kCodecProxy, EditKind::kIdentity}) {
    out.push_back(eval_default(k));
  }
  return out;
}

void AugmentSpec::validate() const {
  name();  // rejects unknown kinds
  const AugmentSpec ref =
      mode == Mode::kTrain ? train_default(kind) : eval_default(kind);
  for (const auto& [key, unused] : ref.params) {
    (void)unused;
    param(key);
  }
}

std::vector<float> pink_noise(int64_t n, Rng& rng) {
  constexpr int kRows = 16;
  std::array<double, kRows> rows{};
  for (auto& r : rows) r = rng.normal();
  std::vector<float> out(n);
  double sum = 0.0;
  for (double r : rows) sum += r;
  uint64_t counter = 0;
  for (int64_t i = 0; i < n; ++i) {
    // Voss-McCartney: update the row selected by the lowest set bit.
    ++counter;
    int row = 0;
    uint64_t c = counter;
    while ((c & 1) == 0 && row < kRows - 1) {
      c >>= 1;
      ++row;
    }
    sum -= rows[row];
    rows[row] = rng.normal();
    sum += rows[row];
    out[i] = static_cast<float>(sum + rng.normal());
  }
  double mean = 0.0;
  for (float v : out) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (float v : out) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  for (float& v : out) v = static_cast<float>((v - mean) * inv);
  return out;
}

AudioClip apply_augment(const AudioClip& clip, const AugmentSpec& spec, Rng& rng) {
  clip.validate();
  spec.validate();
  AudioClip out = clip;
  const int64_t n = clip.length();

  switch (spec.kind) {
    case EditKind::kIdentity:
      break;
    case EditKind::kBoost:
    case EditKind::kDuck: {
      // Double multiply keeps the value bit-identical to the tape path.
      const double f = spec.param("factor");
      for (float& v : out.samples) v = static_cast<float>(v * f);
      break;
    }
    case EditKind::kHighpass:
    case EditKind::kLowpass:
    case EditKind::kBandpass: {
      const auto cascade = filter_for(spec, clip.sample_rate);
      std::vector<float> y(n);
      run_cascade(cascade, clip.samples.data(), y.data(), n);
      out.samples = std::move(y);
      break;
    }
    case EditKind::kEcho: {
      const auto echo = resolve_echo(spec, rng);
      const int64_t d = std::llround(echo.delay_seconds * clip.sample_rate);
      for (int64_t i = n - 1; i >= 0; --i) {
        double v = out.samples[i];
        if (i >= d) v += echo.volume * clip.samples[i - d];
        out.samples[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
      }
      break;
    }
    case EditKind::kWhiteNoise: {
      const double sigma = spec.param("std");
      for (float& v : out.samples) v += static_cast<float>(rng.normal(0.0, sigma));
      break;
    }
    case EditKind::kPinkNoise: {
      const double sigma = spec.param("std");
      const auto noise = pink_noise(n, rng);
      for (int64_t i = 0; i < n; ++i) {
        out.samples[i] += static_cast<float>(sigma * noise[i]);
      }
      break;
    }
    case EditKind::kSmooth: {
      const int w = resolve_smooth(spec, rng);
      const auto kernel = smooth_kernel(w);
      const int64_t origin = smooth_origin(w);
      std::vector<float> y(n, 0.0f);
      for (int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = 0; k < w; ++k) {
          const int64_t j = i + k - origin;
          if (j >= 0 && j < n) acc += kernel[k] * clip.samples[j];
        }
        y[i] = static_cast<float>(acc);
      }
      out.samples = std::move(y);
      break;
    }
    case EditKind::kSpeed: {
      const double factor = resolve_speed(spec, rng);
      SincPlan plan(n, 1.0 / factor);
      out.samples = plan.apply(clip.samples.data());
      break;
    }
    case EditKind::kResample: {
      const int inter = static_cast<int>(spec.param("intermediate"));
      AudioClip up = resample(clip, inter);
      AudioClip down = resample(up, clip.sample_rate);
      down.samples.resize(n, 0.0f);
      out.samples = std::move(down.samples);
      break;
    }
    case EditKind::kCodecProxy:
      out.samples = codec_proxy_values(clip.samples, spec);
      break;
  }
  return out;
}

ad::FTape::Id straight_through_op(ad::FTape& tape, ad::FTape::Id x, const AugmentSpec& spec,
                                  int sample_rate, Rng& rng) {
  if (!spec.length_preserving()) {
    throw ConfigError("straight_through: length-changing edit " + spec.name());
  }
  const ad::FTensor& in = tape.val(x);
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples = in.v;
  AudioClip edited = apply_augment(clip, spec, rng);
  ad::FTensor out(1, in.cols);
  std::copy(edited.samples.begin(), edited.samples.end(), out.v.begin());
  return tape.make_node(std::move(out), tape.requires_grad(x),
                        [x](ad::FTape& t, ad::FTape::Id self) {
                          t.accumulate(x, t.grad(self));
                        });
}

ad::FTape::Id apply_augment_op(ad::FTape& tape, ad::FTape::Id x, const AugmentSpec& spec,
                               int sample_rate, Rng& rng, double* label_scale) {
  spec.validate();
  if (label_scale) *label_scale = 1.0;
  const int64_t n = tape.val(x).cols;

  switch (spec.kind) {
    case EditKind::kIdentity:
      return x;
    case EditKind::kBoost:
    case EditKind::kDuck:
      return tape.scale(x, spec.param("factor"));
    case EditKind::kHighpass:
    case EditKind::kLowpass:
    case EditKind::kBandpass:
      return ad::iir(tape, x, filter_for(spec, sample_rate));
    case EditKind::kEcho: {
      const auto echo = resolve_echo(spec, rng);
      const int64_t d = std::llround(echo.delay_seconds * sample_rate);
      std::vector<double> kernel(d + 1, 0.0);
      kernel[0] = echo.volume;
      kernel[d] = 1.0;
      // Train path skips the [-1,1] clip so the gradient stays exact.
      return ad::fir(tape, x, std::move(kernel), d);
    }
    case EditKind::kWhiteNoise: {
      const double sigma = spec.param("std");
      ad::FTensor noise(1, n);
      for (auto& v : noise.v) v = static_cast<float>(rng.normal(0.0, sigma));
      return tape.add_const(x, noise);
    }
    case EditKind::kPinkNoise: {
      const double sigma = spec.param("std");
      const auto pn = pink_noise(n, rng);
      ad::FTensor noise(1, n);
      for (int64_t i = 0; i < n; ++i) noise.v[i] = pn[i];
      return tape.add_const(x, noise, sigma);
    }
    case EditKind::kSmooth: {
      const int w = resolve_smooth(spec, rng);
      return ad::fir(tape, x, smooth_kernel(w), smooth_origin(w));
    }
    case EditKind::kSpeed: {
      const double factor = resolve_speed(spec, rng);
      if (label_scale) *label_scale = factor;
      return ad::sinc_resample(tape, x, 1.0 / factor);
    }
    case EditKind::kResample: {
      const double inter = spec.param("intermediate");
      auto up = ad::sinc_resample(tape, x, inter / sample_rate);
      auto down = ad::sinc_resample(tape, up, sample_rate / inter);
      if (tape.val(down).cols != n) {
        // Length drift only possible for pathological rates; keep the contract.
        down = tape.row_window(down, 0, 0, n);
      }
      return down;
    }
    case EditKind::kCodecProxy:
      return straight_through_op(tape, x, spec, sample_rate, rng);
  }
  throw ConfigError("unknown edit kind");
}

AugmentPolicy AugmentPolicy::from_specs(std::vector<AugmentSpec> specs) {
  if (specs.empty()) throw ConfigError("augment policy needs at least one edit");
  AugmentPolicy p;
  p.specs = std::move(specs);
  p.accuracy.assign(p.specs.size(), 1.0);
  p.renormalize();
  return p;
}

AugmentPolicy AugmentPolicy::train_default() {
  return from_specs(AugmentSpec::train_battery());
}

void AugmentPolicy::renormalize() {
  weights.resize(specs.size());
  double total = 0.0;
  for (size_t i = 0; i < specs.size(); ++i) {
    weights[i] = 1.0 / std::max(accuracy[i], accuracy_floor);
    total += weights[i];
  }
  for (double& w : weights) w /= total;
}

int AugmentPolicy::sample_index(Rng& rng) const {
  if (specs.empty()) throw ConfigError("augment policy is empty");
  const double u = rng.uniform();
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

void AugmentPolicy::update_accuracy(int index, double observed_accuracy) {
  if (index < 0 || index >= static_cast<int>(specs.size())) {
    throw ConfigError("augment policy index out of range");
  }
  observed_accuracy = std::clamp(observed_accuracy, 0.0, 1.0);
  accuracy[index] = smoothing * accuracy[index] + (1.0 - smoothing) * observed_accuracy;
  renormalize();
}

void AugmentPolicy::validate() const {
  if (specs.empty()) throw ConfigError("augment policy is empty");
  if (weights.size() != specs.size() || accuracy.size() != specs.size()) {
    throw ConfigError("augment policy arrays out of sync");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ConfigError("augment policy has a negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("augment policy weights not normalized");
}

std::vector<uint8_t> rescale_labels(const std::vector<uint8_t>& labels, int64_t new_length) {
  std::vector<uint8_t> out(new_length, 0);
  if (labels.empty() || new_length < 1) return out;
  const double scale = static_cast<double>(labels.size()) / static_cast<double>(new_length);
  for (int64_t i = 0; i < new_length; ++i) {
    const int64_t src = std::min<int64_t>(static_cast<int64_t>(labels.size()) - 1,
                                          std::llround(i * scale));
    out[i] = labels[src];
  }
  return out;
}

}  // namespace localmark

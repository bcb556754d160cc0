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

#include "localmark/losses.hpp"

#include <algorithm>
#include <cmath>

#include "localmark/errors.hpp"

namespace localmark {

double loudness(const double* x, int64_t n, const LoudnessConfig& cfg) {
  if (n < 1) throw ValidationError("loudness: empty segment");
  for (int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) throw ValidationError("loudness: non-finite input");
  }
  std::vector<double> y(n);
  run_cascade(cfg.k_weighting, x, y.data(), n);
  double energy = 0.0;
  for (int64_t i = 0; i < n; ++i) energy += y[i] * y[i];
  energy /= static_cast<double>(n);
  return kLoudnessOffset + 10.0 * std::log10(energy + cfg.energy_floor);
}

double loudness(const std::vector<float>& x, const LoudnessConfig& cfg) {
  std::vector<double> d(x.begin(), x.end());
  return loudness(d.data(), static_cast<int64_t>(d.size()), cfg);
}

LoudnessDiffMatrix tf_loudness_diff(const AudioClip& s, const std::vector<float>& delta,
                                    const TfGridParams& grid, const LoudnessConfig& cfg) {
  s.validate();
  if (delta.size() != s.samples.size()) {
    throw ValidationError("tf_loudness_diff: length mismatch");
  }
  for (float v : delta) {
    if (!std::isfinite(v)) throw ValidationError("tf_loudness_diff: non-finite delta");
  }

  const int64_t n = s.length();
  auto s_bands = band_split(s.samples.data(), n, grid.bands, s.sample_rate);
  auto d_bands = band_split(delta.data(), n, grid.bands, s.sample_rate);

  LoudnessDiffMatrix out;
  out.bands = grid.bands;
  out.windows = grid.window_count(n);
  out.v.assign(static_cast<size_t>(out.bands) * out.windows, 0.0);

  const int64_t hop = grid.hop();
  std::vector<double> seg(grid.window);
  auto cell = [&](const std::vector<float>& band, int64_t w0) {
    std::fill(seg.begin(), seg.end(), 0.0);
    for (int i = 0; i < grid.window; ++i) {
      const int64_t t = w0 + i;
      if (t < n) seg[i] = band[t];
    }
    return loudness(seg.data(), grid.window, cfg);
  };
  for (int b = 0; b < grid.bands; ++b) {
    for (int64_t w = 0; w < out.windows; ++w) {
      out.at(b, w) = cell(d_bands[b], w * hop) - cell(s_bands[b], w * hop);
    }
  }
  return out;
}

double tf_loudness_loss(const LoudnessDiffMatrix& l) {
  if (l.v.empty()) throw ValidationError("tf_loudness_loss: empty matrix");
  double mx = l.v[0];
  for (double v : l.v) {
    if (!std::isfinite(v)) throw ValidationError("tf_loudness_loss: non-finite entry");
    mx = std::max(mx, v);
  }
  double z = 0.0;
  for (double v : l.v) z += std::exp(v - mx);
  double acc = 0.0;
  for (double v : l.v) acc += std::exp(v - mx) / z * v;
  return acc;
}

double l1_loss(const std::vector<float>& delta) {
  if (delta.empty()) throw ValidationError("l1_loss: empty input");
  double acc = 0.0;
  for (float v : delta) {
    if (!std::isfinite(v)) throw ValidationError("l1_loss: non-finite input");
    acc += std::abs(static_cast<double>(v));
  }
  return acc / static_cast<double>(delta.size());
}

double msspec_loss(const AudioClip& s, const AudioClip& s_w, const MsSpecParams& params) {
  s.validate();
  s_w.validate();
  if (s.length() != s_w.length()) throw ValidationError("msspec: length mismatch");
  ad::Tape<double> t;
  ad::Tensor<double> a(1, s.length()), b(1, s.length());
  for (int64_t i = 0; i < s.length(); ++i) {
    a.v[i] = s.samples[i];
    b.v[i] = s_w.samples[i];
  }
  auto sa = t.leaf(std::move(a));
  auto sb = t.leaf(std::move(b));
  return t.val(msspec_loss_op(t, sa, sb, s.sample_rate, params)).v[0];
}

double si_snr(const std::vector<float>& s, const std::vector<float>& s_w, double epsilon) {
  if (s.size() != s_w.size()) throw ValidationError("si_snr: length mismatch");
  if (s.empty()) throw ValidationError("si_snr: empty input");
  double dot = 0.0, ref = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    dot += static_cast<double>(s[i]) * s_w[i];
    ref += static_cast<double>(s[i]) * s[i];
  }
  if (ref == 0.0) throw ValidationError("si_snr: reference signal is all-zero");
  const double alpha = dot / ref;
  double signal = 0.0, noise = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    const double proj = alpha * s[i];
    signal += proj * proj;
    const double e = proj - s_w[i];
    noise += e * e;
  }
  return 10.0 * std::log10(signal / (noise + epsilon));
}

double si_snr(const AudioClip& s, const AudioClip& s_w, double epsilon) {
  return si_snr(s.samples, s_w.samples, epsilon);
}

}  // namespace localmark

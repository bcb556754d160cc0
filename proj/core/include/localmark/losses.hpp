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

#include <cmath>
#include <vector>

#include "localmark/audio.hpp"
#include "localmark/biquad.hpp"
#include "localmark/dsp_ops.hpp"
#include "localmark/mel.hpp"
#include "localmark/tape.hpp"

namespace localmark {

// Loss weights used when assembling the training objective.
struct LossWeights {
  double l1 = 0.1;
  double msspec = 2.0;
  double adv = 4.0;
  double loud = 10.0;
  double loc = 10.0;
  double dec = 1.0;
};

// K-weighted block loudness configuration.
struct LoudnessConfig {
  BiquadCascade k_weighting;
  int block_size = 2048;
  double energy_floor = 1e-8;

  static LoudnessConfig for_rate(int sample_rate) {
    LoudnessConfig cfg;
    cfg.k_weighting = k_weighting_filter(sample_rate);
    return cfg;
  }
};

// Time-frequency grid used by the loudness loss.
struct TfGridParams {
  int bands = 8;
  int window = 2048;
  double overlap = 0.5;

  int64_t hop() const {
    return std::max<int64_t>(1, std::llround(window * (1.0 - overlap)));
  }
  int64_t window_count(int64_t length) const { return (length + hop() - 1) / hop(); }
};

inline constexpr double kLoudnessOffset = -0.691;

// Block loudness in LU: -0.691 + 10 log10(mean(kw(x)^2) + floor).
double loudness(const double* x, int64_t n, const LoudnessConfig& cfg);
double loudness(const std::vector<float>& x, const LoudnessConfig& cfg);

// Loudness difference matrix of Eq-style cells: rows = bands, cols = windows.
struct LoudnessDiffMatrix {
  int bands = 0;
  int64_t windows = 0;
  std::vector<double> v;  // row-major
  double& at(int b, int64_t w) { return v[static_cast<size_t>(b) * windows + w]; }
  double at(int b, int64_t w) const { return v[static_cast<size_t>(b) * windows + w]; }
};

LoudnessDiffMatrix tf_loudness_diff(const AudioClip& s, const std::vector<float>& delta,
                                    const TfGridParams& grid, const LoudnessConfig& cfg);

// Softmax-weighted sum of the matrix entries (joint softmax over all cells).
double tf_loudness_loss(const LoudnessDiffMatrix& l);

double l1_loss(const std::vector<float>& delta);

// Multi-scale spectrogram parameters: L1 + L2 distances between log-mel
// spectrograms at each scale.
struct MsSpecParams {
  std::vector<int> windows = {64, 128, 256, 512, 1024, 2048};
  int mel_bins = 64;
  double log_floor = 1e-5;
};

double msspec_loss(const AudioClip& s, const AudioClip& s_w,
                   const MsSpecParams& params = MsSpecParams{});

// Scale-invariant SNR in dB; invariant to positive rescaling of s_w.
double si_snr(const std::vector<float>& s, const std::vector<float>& s_w,
              double epsilon = 1e-8);
double si_snr(const AudioClip& s, const AudioClip& s_w, double epsilon = 1e-8);

// ---- tape versions (shared by training and the gradient tests) -----------

// Loudness of a (1, W) segment node, without the constant offset (the offset
// cancels in every use as a difference).
template <typename S>
typename ad::Tape<S>::Id loudness_core_op(ad::Tape<S>& t, typename ad::Tape<S>::Id seg,
                                          const LoudnessConfig& cfg) {
  auto kw = ad::iir(t, seg, cfg.k_weighting);
  auto sq = t.square(kw);
  auto mean = t.mean_all(sq);
  auto ln = t.log_floor(mean, cfg.energy_floor);
  return t.scale(ln, 10.0 / std::log(10.0));
}

// (B, Wn) matrix of loudness differences between matched cells of delta and s.
template <typename S>
typename ad::Tape<S>::Id tf_loudness_cells_op(ad::Tape<S>& t, typename ad::Tape<S>::Id s,
                                              typename ad::Tape<S>::Id delta, int sample_rate,
                                              const TfGridParams& grid,
                                              const LoudnessConfig& cfg) {
  const int64_t n = t.val(s).cols;
  if (t.val(delta).cols != n || t.val(s).rows != 1 || t.val(delta).rows != 1) {
    throw ValidationError("tf_loudness: signal/delta length mismatch");
  }
  auto s_bands = ad::band_split_op(t, s, grid.bands, sample_rate);
  auto d_bands = ad::band_split_op(t, delta, grid.bands, sample_rate);
  const int64_t wn = grid.window_count(n);
  const int64_t hop = grid.hop();

  std::vector<typename ad::Tape<S>::Id> cells;
  cells.reserve(static_cast<size_t>(grid.bands) * wn);
  for (int b = 0; b < grid.bands; ++b) {
    for (int64_t w = 0; w < wn; ++w) {
      auto seg_d = t.row_window(d_bands, b, w * hop, grid.window);
      auto seg_s = t.row_window(s_bands, b, w * hop, grid.window);
      auto ld = loudness_core_op(t, seg_d, cfg);
      auto ls = loudness_core_op(t, seg_s, cfg);
      cells.push_back(t.sub(ld, ls));
    }
  }
  return t.assemble_scalars(grid.bands, wn, cells);
}

// Eq-2 style objective: sum of softmax(l) * l over all cells.
template <typename S>
typename ad::Tape<S>::Id softmax_weighted_sum_op(ad::Tape<S>& t, typename ad::Tape<S>::Id l) {
  auto sm = t.softmax_all(l);
  return t.sum_all(t.mul(sm, l));
}

template <typename S>
typename ad::Tape<S>::Id tf_loudness_loss_op(ad::Tape<S>& t, typename ad::Tape<S>::Id s,
                                             typename ad::Tape<S>::Id delta, int sample_rate,
                                             const TfGridParams& grid,
                                             const LoudnessConfig& cfg) {
  return softmax_weighted_sum_op(t, tf_loudness_cells_op(t, s, delta, sample_rate, grid, cfg));
}

template <typename S>
typename ad::Tape<S>::Id l1_loss_op(ad::Tape<S>& t, typename ad::Tape<S>::Id delta) {
  return t.mean_all(t.abs_(delta));
}

template <typename S>
typename ad::Tape<S>::Id msspec_loss_op(ad::Tape<S>& t, typename ad::Tape<S>::Id s,
                                        typename ad::Tape<S>::Id s_w, int sample_rate,
                                        const MsSpecParams& params = MsSpecParams{}) {
  if (t.val(s).cols != t.val(s_w).cols) {
    throw ValidationError("msspec: length mismatch");
  }
  typename ad::Tape<S>::Id total = t.constant(ad::Tensor<S>::scalar(S(0)));
  for (int w : params.windows) {
    const int hop = std::max(1, w / 4);
    auto win = ad::hann_window(w);
    const auto bank = mel_filterbank(params.mel_bins, w, sample_rate);

    auto log_mel = [&](typename ad::Tape<S>::Id sig) {
      auto power = ad::stft_power(t, sig, w, hop, win);
      auto mel = ad::matmul_const_left(t, bank, params.mel_bins, power);
      return t.log_floor(mel, params.log_floor);
    };
    auto diff = t.sub(log_mel(s_w), log_mel(s));
    auto l1 = t.mean_all(t.abs_(diff));
    auto l2 = t.mean_all(t.square(diff));
    total = t.add(total, t.add(l1, l2));
  }
  return total;
}

}  // namespace localmark

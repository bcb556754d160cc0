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
#include <complex>
#include <memory>
#include <vector>

#include "localmark/audio.hpp"
#include "localmark/biquad.hpp"
#include "localmark/fft.hpp"
#include "localmark/resample_kernel.hpp"
#include "localmark/tape.hpp"

namespace localmark::ad {

// FIR filter on a (1, T) signal, same-length output:
//   y[t] = sum_k h[k] * x[t + k - origin]
// `origin` is the tap index aligned with the current sample (0 = causal).
template <typename S>
typename Tape<S>::Id fir(Tape<S>& t, typename Tape<S>::Id x, std::vector<double> kernel,
                         int64_t origin = 0) {
  const Tensor<S>& in = t.val(x);
  if (in.rows != 1) throw ValidationError("fir expects a (1, T) signal");
  const int64_t n = in.cols;
  const int64_t klen = static_cast<int64_t>(kernel.size());
  Tensor<S> out(1, n);
  for (int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int64_t k = 0; k < klen; ++k) {
      const int64_t j = i + k - origin;
      if (j >= 0 && j < n) acc += kernel[k] * in.v[j];
    }
    out.v[i] = static_cast<S>(acc);
  }
  auto h = std::make_shared<std::vector<double>>(std::move(kernel));
  return t.make_node(std::move(out), t.requires_grad(x),
                     [x, h, origin, n, klen](Tape<S>& tp, typename Tape<S>::Id self) {
                       const Tensor<S>& g = tp.grad(self);
                       Tensor<S> gx(1, n);
                       for (int64_t i = 0; i < n; ++i) {
                         const double gi = g.v[i];
                         if (gi == 0.0) continue;
                         for (int64_t k = 0; k < klen; ++k) {
                           const int64_t j = i + k - origin;
                           if (j >= 0 && j < n) gx.v[j] += static_cast<S>((*h)[k] * gi);
                         }
                       }
                       tp.accumulate(x, gx);
                     });
}

// Biquad cascade on a (1, T) signal with zero initial conditions.
template <typename S>
typename Tape<S>::Id iir(Tape<S>& t, typename Tape<S>::Id x, BiquadCascade cascade) {
  const Tensor<S>& in = t.val(x);
  if (in.rows != 1) throw ValidationError("iir expects a (1, T) signal");
  const int64_t n = in.cols;
  Tensor<S> out(1, n);
  run_cascade(cascade, in.v.data(), out.v.data(), n);
  auto casc = std::make_shared<BiquadCascade>(std::move(cascade));
  return t.make_node(std::move(out), t.requires_grad(x),
                     [x, casc, n](Tape<S>& tp, typename Tape<S>::Id self) {
                       const Tensor<S>& g = tp.grad(self);
                       Tensor<S> gx(1, n);
                       run_cascade_adjoint(*casc, g.v.data(), gx.v.data(), n);
                       tp.accumulate(x, gx);
                     });
}

// Differentiable band-limited resampling of a (1, T) signal by out/in rate
// ratio. The backward pass is the exact transpose of the interpolation.
template <typename S>
typename Tape<S>::Id sinc_resample(Tape<S>& t, typename Tape<S>::Id x, double ratio) {
  const Tensor<S>& in = t.val(x);
  if (in.rows != 1) throw ValidationError("sinc_resample expects a (1, T) signal");
  SincPlan plan(in.cols, ratio);
  Tensor<S> out(1, plan.out_len);
  out.v = plan.apply(in.v.data());
  return t.make_node(std::move(out), t.requires_grad(x),
                     [x, plan](Tape<S>& tp, typename Tape<S>::Id self) {
                       const Tensor<S>& g = tp.grad(self);
                       Tensor<S> gx(1, plan.in_len);
                       for (int64_t n = 0; n < plan.out_len; ++n) {
                         const double gn = g.v[n];
                         if (gn == 0.0) continue;
                         int64_t lo, hi;
                         plan.bounds(n, lo, hi);
                         for (int64_t m = lo; m <= hi; ++m) {
                           gx.v[m] += static_cast<S>(plan.weight(n, m) * gn);
                         }
                       }
                       tp.accumulate(x, gx);
                     });
}

// Complementary FFT band split of a (1, T) signal into a (B, T) tensor.
// Projections are self-adjoint, so the backward pass reuses the same masks.
template <typename S>
typename Tape<S>::Id band_split_op(Tape<S>& t, typename Tape<S>::Id x, int bands,
                                   int sample_rate) {
  const Tensor<S>& in = t.val(x);
  if (in.rows != 1) throw ValidationError("band_split expects a (1, T) signal");
  const int64_t n = in.cols;
  const size_t padded = fft::next_pow2(static_cast<size_t>(n));
  auto spec = fft::real_forward(in.v.data(), static_cast<size_t>(n), padded);
  const auto edges = octave_band_edges(bands, sample_rate);
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(padded);

  auto band_of_bin = [&](size_t k) {
    const double f = k * bin_hz;
    int b = 0;
    while (b + 1 < bands && f >= edges[b]) ++b;
    return b;
  };

  Tensor<S> out(bands, n);
  for (int b = 0; b < bands; ++b) {
    std::vector<std::complex<S>> masked(spec.size(), {S(0), S(0)});
    for (size_t k = 0; k < spec.size(); ++k) {
      if (band_of_bin(k) == b) masked[k] = spec[k];
    }
    auto full = fft::real_inverse(masked, padded);
    for (int64_t i = 0; i < n; ++i) out(b, i) = full[i];
  }

  auto edges_copy = std::make_shared<std::vector<double>>(edges);
  return t.make_node(
      std::move(out), t.requires_grad(x),
      [x, bands, n, padded, bin_hz, edges_copy](Tape<S>& tp, typename Tape<S>::Id self) {
        const Tensor<S>& g = tp.grad(self);
        std::vector<std::complex<S>> acc(padded / 2 + 1, {S(0), S(0)});
        for (int b = 0; b < bands; ++b) {
          auto gspec = fft::real_forward(&g.v[static_cast<size_t>(b) * n],
                                         static_cast<size_t>(n), padded);
          for (size_t k = 0; k < gspec.size(); ++k) {
            const double f = k * bin_hz;
            int bb = 0;
            while (bb + 1 < bands && f >= (*edges_copy)[bb]) ++bb;
            if (bb == b) acc[k] += gspec[k];
          }
        }
        auto full = fft::real_inverse(acc, padded);
        Tensor<S> gx(1, n);
        for (int64_t i = 0; i < n; ++i) gx.v[i] = full[i];
        tp.accumulate(x, gx);
      });
}

// Power spectrogram of a (1, T) signal: (n_fft/2+1, frames) with
// frames = ceil(T / hop) and zero-padded tail frames.
template <typename S>
typename Tape<S>::Id stft_power(Tape<S>& t, typename Tape<S>::Id x, int n_fft, int hop,
                                std::vector<double> window) {
  const Tensor<S>& in = t.val(x);
  if (in.rows != 1) throw ValidationError("stft expects a (1, T) signal");
  if (static_cast<int>(window.size()) != n_fft) throw ValidationError("window size mismatch");
  if (!fft::is_pow2(static_cast<size_t>(n_fft))) throw ValidationError("n_fft must be pow2");
  const int64_t n = in.cols;
  const int64_t frames = (n + hop - 1) / hop;
  const int bins = n_fft / 2 + 1;

  auto spectra = std::make_shared<std::vector<std::vector<std::complex<S>>>>(frames);
  Tensor<S> out(bins, frames);
  std::vector<S> frame(n_fft);
  for (int64_t f = 0; f < frames; ++f) {
    const int64_t start = f * hop;
    for (int i = 0; i < n_fft; ++i) {
      const int64_t tpos = start + i;
      frame[i] = tpos < n ? static_cast<S>(window[i] * in.v[tpos]) : S(0);
    }
    (*spectra)[f] = fft::real_forward(frame.data(), n_fft, n_fft);
    for (int k = 0; k < bins; ++k) out(k, f) = std::norm((*spectra)[f][k]);
  }

  auto win = std::make_shared<std::vector<double>>(std::move(window));
  return t.make_node(
      std::move(out), t.requires_grad(x),
      [x, n_fft, hop, n, frames, bins, spectra, win](Tape<S>& tp, typename Tape<S>::Id self) {
        const Tensor<S>& g = tp.grad(self);
        Tensor<S> gx(1, n);
        std::vector<std::complex<S>> c(n_fft);
        for (int64_t f = 0; f < frames; ++f) {
          // dP_k/du = 2 Re(conj(X_k) e^{-i2pi kn/N}); assemble the Hermitian
          // coefficient vector and evaluate with one forward FFT.
          const auto& X = (*spectra)[f];
          for (int k = 0; k < n_fft; ++k) c[k] = {S(0), S(0)};
          c[0] = S(2) * g(0, f) * X[0];
          c[n_fft / 2] = S(2) * g(bins - 1, f) * std::conj(X[bins - 1]);
          for (int k = 1; k < n_fft / 2; ++k) {
            const std::complex<S> v = g(k, f) * std::conj(X[k]);
            c[k] = v;
            c[n_fft - k] = std::conj(v);
          }
          fft::transform(c, false);
          const int64_t start = f * hop;
          for (int i = 0; i < n_fft; ++i) {
            const int64_t tpos = start + i;
            if (tpos < n) gx.v[tpos] += static_cast<S>((*win)[i] * c[i].real());
          }
        }
        tp.accumulate(x, gx);
      });
}

// y = M * x with a constant left matrix (mel projection and similar).
template <typename S>
typename Tape<S>::Id matmul_const_left(Tape<S>& t, const std::vector<double>& m, int m_rows,
                                       typename Tape<S>::Id x) {
  const Tensor<S>& in = t.val(x);
  const int inner = in.rows;
  if (static_cast<int>(m.size()) != m_rows * inner) {
    throw ValidationError("matmul_const_left shape mismatch");
  }
  Tensor<S> out(m_rows, in.cols);
  for (int r = 0; r < m_rows; ++r) {
    for (int k = 0; k < inner; ++k) {
      const double w = m[static_cast<size_t>(r) * inner + k];
      if (w == 0.0) continue;
      for (int64_t cidx = 0; cidx < in.cols; ++cidx) {
        out(r, cidx) += static_cast<S>(w * in(k, cidx));
      }
    }
  }
  auto mat = std::make_shared<std::vector<double>>(m);
  return t.make_node(std::move(out), t.requires_grad(x),
                     [x, mat, m_rows, inner](Tape<S>& tp, typename Tape<S>::Id self) {
                       const Tensor<S>& g = tp.grad(self);
                       Tensor<S> gx(inner, g.cols);
                       for (int r = 0; r < m_rows; ++r) {
                         for (int k = 0; k < inner; ++k) {
                           const double w = (*mat)[static_cast<size_t>(r) * inner + k];
                           if (w == 0.0) continue;
                           for (int64_t cidx = 0; cidx < g.cols; ++cidx) {
                             gx(k, cidx) += static_cast<S>(w * g(r, cidx));
                           }
                         }
                       }
                       tp.accumulate(x, gx);
                     });
}

inline std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  }
  return w;
}

}  // namespace localmark::ad

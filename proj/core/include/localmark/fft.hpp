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
#include <cstddef>
#include <vector>

#include "localmark/errors.hpp"

namespace localmark::fft {

inline size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

// Forward-transform twiddles for size n, cached per thread.
inline const std::vector<std::complex<double>>& twiddles(size_t n) {
  thread_local std::vector<std::vector<std::complex<double>>> cache;
  size_t log2n = 0;
  while ((size_t{1} << log2n) < n) ++log2n;
  if (cache.size() <= log2n) cache.resize(log2n + 1);
  auto& tw = cache[log2n];
  if (tw.empty()) {
    tw.resize(n / 2);
    for (size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
      tw[k] = {std::cos(angle), std::sin(angle)};
    }
  }
  return tw;
}

}  // namespace detail

// In-place iterative radix-2 FFT. `inverse` applies the conjugate transform
// and the 1/N scaling.
template <typename S>
void transform(std::vector<std::complex<S>>& a, bool inverse) {
  const size_t n = a.size();
  if (!is_pow2(n)) throw ValidationError("fft: size must be a power of two");
  if (n < 2) return;

  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto& tw = detail::twiddles(n);
  for (size_t len = 2; len <= n; len <<= 1) {
    const size_t step = n / len;
    for (size_t i = 0; i < n; i += len) {
      for (size_t k = 0; k < len / 2; ++k) {
        const auto& twd = tw[k * step];
        const std::complex<S> w(static_cast<S>(twd.real()),
                                static_cast<S>(inverse ? -twd.imag() : twd.imag()));
        const std::complex<S> u = a[i + k];
        const std::complex<S> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
  if (inverse) {
    const S scale = static_cast<S>(1) / static_cast<S>(n);
    for (auto& x : a) x *= scale;
  }
}

// Forward FFT of a real signal (zero-padded to `n`, a power of two).
// Returns the n/2+1 non-redundant bins.
template <typename S>
std::vector<std::complex<S>> real_forward(const S* x, size_t len, size_t n) {
  std::vector<std::complex<S>> buf(n, std::complex<S>(0, 0));
  const size_t m = len < n ? len : n;
  for (size_t i = 0; i < m; ++i) buf[i] = std::complex<S>(x[i], 0);
  transform(buf, false);
  buf.resize(n / 2 + 1);
  return buf;
}

// Inverse of real_forward: reconstructs n real samples from n/2+1 bins.
template <typename S>
std::vector<S> real_inverse(const std::vector<std::complex<S>>& half, size_t n) {
  if (half.size() != n / 2 + 1) throw ValidationError("fft: bad half-spectrum size");
  std::vector<std::complex<S>> buf(n);
  buf[0] = half[0];
  for (size_t k = 1; k < n / 2; ++k) {
    buf[k] = half[k];
    buf[n - k] = std::conj(half[k]);
  }
  buf[n / 2] = half[n / 2];
  transform(buf, true);
  std::vector<S> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

}  // namespace localmark::fft

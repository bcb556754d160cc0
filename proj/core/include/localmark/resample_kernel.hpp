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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace localmark {

// Windowed-sinc interpolation plan shared by the plain resampler and its
// differentiable counterpart, so both produce identical values.
struct SincPlan {
  int64_t in_len = 0;
  int64_t out_len = 0;
  double ratio = 1.0;
  double cutoff = 0.0;
  double width = 0.0;

  SincPlan(int64_t in_len_, double ratio_) : in_len(in_len_), ratio(ratio_) {
    out_len = std::max<int64_t>(1, std::llround(static_cast<double>(in_len) * ratio));
    cutoff = 0.95 * 0.5 * std::min(1.0, ratio);
    constexpr int kHalfTaps = 32;
    width = ratio < 1.0 ? kHalfTaps / ratio : double(kHalfTaps);
  }

  double weight(int64_t out_idx, int64_t in_idx) const {
    const double center = static_cast<double>(out_idx) / ratio;
    const double t = static_cast<double>(in_idx) - center;
    if (std::abs(t) > width) return 0.0;
    const double x = 2.0 * cutoff * t;
    const double sinc = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    const double hann = 0.5 * (1.0 + std::cos(M_PI * t / width));
    return 2.0 * cutoff * sinc * hann;
  }

  void bounds(int64_t out_idx, int64_t& lo, int64_t& hi) const {
    const double center = static_cast<double>(out_idx) / ratio;
    lo = std::max<int64_t>(0, static_cast<int64_t>(std::ceil(center - width)));
    hi = std::min<int64_t>(in_len - 1, static_cast<int64_t>(std::floor(center + width)));
  }

  template <typename S>
  std::vector<S> apply(const S* x) const {
    std::vector<S> out(out_len);
    for (int64_t n = 0; n < out_len; ++n) {
      int64_t lo, hi;
      bounds(n, lo, hi);
      double acc = 0.0;
      for (int64_t m = lo; m <= hi; ++m) acc += weight(n, m) * x[m];
      out[n] = static_cast<S>(acc);
    }
    return out;
  }
};

}  // namespace localmark

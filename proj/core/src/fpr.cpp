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

#include "localmark/fpr.hpp"

#include <cmath>
#include <functional>

#include "localmark/errors.hpp"

namespace localmark {

int bit_match(const Message& a, const Message& b) {
  if (a.bits.size() != b.bits.size()) throw ValidationError("bit_match: length mismatch");
  int m = 0;
  for (size_t i = 0; i < a.bits.size(); ++i) m += a.bits[i] == b.bits[i] ? 1 : 0;
  return m;
}

namespace {

// Sum_{i=tau}^{k} C(k, i) as an unsigned 128-bit integer (exact for k <= 64).
unsigned __int128 binomial_tail_count(int k, int tau) {
  unsigned __int128 sum = 0;
  unsigned __int128 coeff = 1;  // C(k, 0)
  for (int i = 0; i <= k; ++i) {
    if (i >= tau) sum += coeff;
    // C(k, i+1) = C(k, i) * (k - i) / (i + 1), stays integral at each step.
    coeff = coeff * static_cast<unsigned>(k - i) / static_cast<unsigned>(i + 1);
  }
  return sum;
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double result = d;
  for (int m = 1; m <= 100000; ++m) {
    const double dm = static_cast<double>(m);
    // even-step coefficient
    double numer = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
    d = 1.0 + numer * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + numer / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    result *= d * c;
    // odd-step coefficient
    numer = -(a + dm) * (a + b + dm) * x / ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
    d = 1.0 + numer * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + numer / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    result *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return result;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0 && a > 0.0 && b > 0.0)) {
    throw ValidationError("regularized_incomplete_beta: bad arguments");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - log_beta(b, a)) *
                   beta_continued_fraction(1.0 - x, b, a) / b;
}

double theoretical_fpr_beta(int k, int tau) {
  if (k < 1 || tau < 0 || tau > k) throw ValidationError("theoretical_fpr: bad k/tau");
  if (tau == 0) return 1.0;
  return regularized_incomplete_beta(0.5, static_cast<double>(tau),
                                     static_cast<double>(k - tau + 1));
}

double theoretical_fpr(int k, int tau) {
  if (k < 1 || tau < 0 || tau > k) throw ValidationError("theoretical_fpr: bad k/tau");
  if (tau == 0) return 1.0;
  if (k <= 64) {
    const unsigned __int128 count = binomial_tail_count(k, tau);
    // Exact rational count / 2^k evaluated in long double.
    return static_cast<double>(static_cast<long double>(count) /
                               std::pow(2.0L, static_cast<long double>(k)));
  }
  return theoretical_fpr_beta(k, tau);
}

EmpiricalFpr empirical_fpr(const std::vector<std::vector<double>>& soft_bits,
                           const Message& reference, int histogram_bins) {
  if (soft_bits.empty()) throw ValidationError("empirical_fpr: need at least one clip");
  const int k = static_cast<int>(reference.bits.size());
  EmpiricalFpr out;
  out.k = k;
  out.clip_count = static_cast<int64_t>(soft_bits.size());
  out.histogram_bins = histogram_bins;
  out.histogram.assign(histogram_bins, 0);

  std::vector<int64_t> ge_count(k + 1, 0);
  for (const auto& row : soft_bits) {
    if (static_cast<int>(row.size()) != k) {
      throw ValidationError("empirical_fpr: soft-bit row size mismatch");
    }
    int match = 0;
    for (int i = 0; i < k; ++i) {
      const double s = row[i];
      if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("empirical_fpr: score outside [0,1]");
      const int bit = s > 0.5 ? 1 : 0;
      match += bit == reference.bits[i] ? 1 : 0;
      int bin = static_cast<int>(s * histogram_bins);
      if (bin >= histogram_bins) bin = histogram_bins - 1;
      ++out.histogram[bin];
    }
    for (int tau = 0; tau <= match; ++tau) ++ge_count[tau];
  }

  const double n = static_cast<double>(out.clip_count);
  for (int tau = 0; tau <= k; ++tau) {
    const double p = static_cast<double>(ge_count[tau]) / n;
    out.taus.push_back(tau);
    out.fpr.push_back(p);
    out.stderr_.push_back(std::sqrt(std::max(p * (1.0 - p), 1e-12) / n));
  }
  return out;
}

}  // namespace localmark

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

#include <cstdint>
#include <vector>

#include "localmark/models.hpp"

namespace localmark {

// Number of positions where the two messages agree.
int bit_match(const Message& a, const Message& b);

// P(Binomial(k, 1/2) >= tau): exact 128-bit tail sum for k <= 64, regularized
// incomplete beta beyond.
double theoretical_fpr(int k, int tau);

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
double regularized_incomplete_beta(double x, double a, double b);

// The same tail through the beta identity I_{1/2}(tau, k - tau + 1); exposed
// so the two routes can be compared.
double theoretical_fpr_beta(int k, int tau);

struct EmpiricalFpr {
  int k = 0;
  std::vector<int> taus;          // 0..k
  std::vector<double> fpr;        // fraction of clips with match >= tau
  std::vector<double> stderr_;    // binomial standard error per tau
  std::vector<int64_t> histogram; // soft bit-score histogram
  int histogram_bins = 20;
  int64_t clip_count = 0;
};

// Bit statistics of genuine clips against a reference message. `soft_bits`
// holds one row of k soft scores in [0, 1] per clip; a bit matches when
// (score > 0.5) equals the reference bit.
EmpiricalFpr empirical_fpr(const std::vector<std::vector<double>>& soft_bits,
                           const Message& reference, int histogram_bins = 20);

}  // namespace localmark

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "localmark/audio.hpp"
#include "localmark/errors.hpp"
#include "localmark/losses.hpp"
#include "localmark/trainer.hpp"
#include "test_support.hpp"

using namespace localmark;
using DTape = ad::Tape<double>;
using DTensor = ad::Tensor<double>;

namespace {

// Independent BS.1770-4 reference: the published 48 kHz biquad tables applied
// directly, no shared code with the implementation under test.
double reference_loudness_48k(const std::vector<double>& x) {
  static const double b1[3] = {1.53512485958697, -2.69169618940638, 1.19839281085285};
  static const double a1[3] = {1.0, -1.69065929318241, 0.73248077421585};
  static const double b2[3] = {1.0, -2.0, 1.0};
  static const double a2[3] = {1.0, -1.99004745483398, 0.99007225036621};
  auto stage = [](const std::vector<double>& in, const double* b, const double* a) {
    std::vector<double> out(in.size());
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (size_t i = 0; i < in.size(); ++i) {
      const double y = b[0] * in[i] + b[1] * x1 + b[2] * x2 - a[1] * y1 - a[2] * y2;
      x2 = x1;
      x1 = in[i];
      y2 = y1;
      y1 = y;
      out[i] = y;
    }
    return out;
  };
  const auto filtered = stage(stage(x, b1, a1), b2, a2);
  double energy = 0.0;
  for (double v : filtered) energy += v * v;
  energy /= static_cast<double>(filtered.size());
  return -0.691 + 10.0 * std::log10(energy);
}

// Deterministic function of continuous time, sampled at any rate: a harmonic
// complex with a formant-like envelope, stand-in for a speech snippet.
std::vector<double> harmonic_snippet(double seconds, int rate) {
  const int64_t n = std::llround(seconds * rate);
  std::vector<double> out(n);
  const double f0 = 141.0;
  for (int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    double v = 0.0;
    for (int k = 1; k * f0 < 4000.0; ++k) {
      const double f = k * f0;
      // crude formant envelope peaking near 500 and 1500 Hz
      const double env = 1.0 / (1.0 + std::pow((f - 500.0) / 350.0, 2)) +
                         0.7 / (1.0 + std::pow((f - 1500.0) / 400.0, 2));
      v += env / k * std::sin(2.0 * M_PI * f * t + 0.7 * k);
    }
    out[i] = 0.15 * v * (0.6 + 0.4 * std::sin(2.0 * M_PI * 3.0 * t));
  }
  return out;
}

std::vector<double> sine_vec(double freq, double amp, double seconds, int rate) {
  const int64_t n = std::llround(seconds * rate);
  std::vector<double> out(n);
  for (int64_t i = 0; i < n; ++i) {
    out[i] = amp * std::sin(2.0 * M_PI * freq * i / rate);
  }
  return out;
}

const LoudnessConfig& cfg16() {
  static LoudnessConfig cfg = LoudnessConfig::for_rate(16000);
  return cfg;
}

}  // namespace

TEST_CASE("loudness matches the 48 kHz reference within 0.5 LU") {
  for (double freq : {125.0, 250.0, 500.0, 997.0, 2000.0, 4000.0}) {
    const auto x16 = sine_vec(freq, 1.0, 1.0, 16000);
    const auto x48 = sine_vec(freq, 1.0, 1.0, 48000);
    const double ours = loudness(x16.data(), static_cast<int64_t>(x16.size()), cfg16());
    const double ref = reference_loudness_48k(x48);
    INFO("freq " << freq);
    CHECK(std::abs(ours - ref) < 0.5);
  }
  const auto s16 = harmonic_snippet(1.0, 16000);
  const auto s48 = harmonic_snippet(1.0, 48000);
  CHECK(std::abs(loudness(s16.data(), static_cast<int64_t>(s16.size()), cfg16()) -
                 reference_loudness_48k(s48)) < 0.5);
}

TEST_CASE("loudness gain law: x10 amplitude is +20 LU") {
  const auto x = sine_vec(997.0, 0.05, 1.0, 16000);
  auto x10 = x;
  for (double& v : x10) v *= 10.0;
  const double lo = loudness(x.data(), static_cast<int64_t>(x.size()), cfg16());
  const double hi = loudness(x10.data(), static_cast<int64_t>(x10.size()), cfg16());
  CHECK(hi - lo == doctest::Approx(20.0).epsilon(0.0005));
}

TEST_CASE("loudness floor and validation") {
  std::vector<double> zeros(1024, 0.0);
  const double floor_value = loudness(zeros.data(), 1024, cfg16());
  CHECK(floor_value == doctest::Approx(10.0 * std::log10(1e-8) - 0.691));

  std::vector<double> bad(16, 0.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(loudness(bad.data(), 16, cfg16()), ValidationError);
}

TEST_CASE("loudness is shift invariant for stationary input") {
  auto x = sine_vec(500.0, 0.3, 0.5, 16000);
  const double base = loudness(x.data(), static_cast<int64_t>(x.size()), cfg16());
  std::rotate(x.begin(), x.begin() + 1234, x.end());
  const double rotated = loudness(x.data(), static_cast<int64_t>(x.size()), cfg16());
  CHECK(std::abs(base - rotated) < 0.1);
}

TEST_CASE("K-weighting filters are stable") {
  for (double rate : {16000.0, 24000.0, 44100.0, 48000.0}) {
    for (const Biquad& q : k_weighting_filter(rate)) CHECK(q.stable());
  }
}

TEST_CASE("tf_loudness_diff identities") {
  AudioClip s = test::noise_clip(0.4, 16000, 16000, 21);
  const TfGridParams grid;

  // delta == s -> exactly zero everywhere.
  const auto zero_diff = tf_loudness_diff(s, s.samples, grid, cfg16());
  for (double v : zero_diff.v) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

  // delta = 0.5 s -> -6.0206 on every cell whose energy clears the floor.
  std::vector<float> half(s.samples.size());
  for (size_t i = 0; i < half.size(); ++i) half[i] = 0.5f * s.samples[i];
  const auto half_diff = tf_loudness_diff(s, half, grid, cfg16());
  const auto s_cells = tf_loudness_diff(s, s.samples, grid, cfg16());  // reuse grid shape
  int checked = 0;
  for (int b = 0; b < half_diff.bands; ++b) {
    for (int64_t w = 0; w + 1 < half_diff.windows; ++w) {  // skip padded tail
      ++checked;
      CHECK(half_diff.at(b, w) == doctest::Approx(10.0 * std::log10(0.25)).epsilon(0.01));
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("tf_loudness_diff localizes band-limited noise") {
  AudioClip s = test::noise_clip(0.3, 16000, 16000, 22);
  // Filter noise into one octave band and use it as the watermark.
  const auto bands = band_split(s.samples.data(), s.length(), 8, 16000);
  const int target_band = 2;
  std::vector<float> delta = bands[target_band];
  const TfGridParams grid;
  const auto diff = tf_loudness_diff(s, delta, grid, cfg16());
  std::vector<double> mean_per_band(8, 0.0);
  for (int b = 0; b < 8; ++b) {
    for (int64_t w = 0; w < diff.windows; ++w) mean_per_band[b] += diff.at(b, w);
  }
  int argmax = 0;
  for (int b = 1; b < 8; ++b) {
    if (mean_per_band[b] > mean_per_band[argmax]) argmax = b;
  }
  CHECK(argmax == target_band);
}

TEST_CASE("tf_loudness_loss softmax identities and bounds") {
  LoudnessDiffMatrix single;
  single.bands = 1;
  single.windows = 1;
  single.v = {3.7};
  CHECK(tf_loudness_loss(single) == doctest::Approx(3.7));

  LoudnessDiffMatrix constant;
  constant.bands = 3;
  constant.windows = 4;
  constant.v.assign(12, -2.5);
  CHECK(tf_loudness_loss(constant) == doctest::Approx(-2.5));

  Rng rng(23);
  LoudnessDiffMatrix random;
  random.bands = 4;
  random.windows = 5;
  random.v.resize(20);
  for (double& v : random.v) v = rng.normal(0.0, 10.0);
  const double loss = tf_loudness_loss(random);
  CHECK(loss >= *std::min_element(random.v.begin(), random.v.end()));
  CHECK(loss <= *std::max_element(random.v.begin(), random.v.end()));
}

TEST_CASE("tf_loudness_loss gradient vs finite differences (3x4 matrix)") {
  Rng rng(24);
  std::vector<double> cells(12);
  for (double& v : cells) v = rng.normal(0.0, 3.0);

  DTape tape;
  auto l = tape.leaf(DTensor::row(cells), true);
  // reshape row -> (3,4) via windows + assemble
  std::vector<DTape::Id> parts;
  for (int64_t i = 0; i < 12; ++i) {
    parts.push_back(tape.sum_all(tape.row_window(l, 0, i, 1)));
  }
  auto mat = tape.assemble_scalars(3, 4, parts);
  auto loss = softmax_weighted_sum_op(tape, mat);
  tape.backward(loss);
  std::vector<double> analytic(tape.grad(l).v.begin(), tape.grad(l).v.end());

  auto eval = [&](const std::vector<double>& v) {
    LoudnessDiffMatrix m;
    m.bands = 3;
    m.windows = 4;
    m.v = v;
    return tf_loudness_loss(m);
  };
  const auto fd = test::finite_difference(eval, cells, 1e-4);
  CHECK(test::max_rel_error(analytic, fd) < 1e-4);
}

TEST_CASE("l1 loss values and homogeneity") {
  CHECK(l1_loss(std::vector<float>(64, 0.0f)) == doctest::Approx(0.0));
  CHECK(l1_loss(std::vector<float>(64, 0.3f)) == doctest::Approx(0.3));
  std::vector<float> alt(64);
  for (size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 0.1f : -0.1f;
  CHECK(l1_loss(alt) == doctest::Approx(0.1));

  Rng rng(25);
  std::vector<float> d(128);
  for (auto& v : d) v = static_cast<float>(rng.normal(0.0, 0.2));
  auto scaled = d;
  for (auto& v : scaled) v *= -2.5f;
  CHECK(l1_loss(scaled) == doctest::Approx(2.5 * l1_loss(d)).epsilon(1e-6));
}

TEST_CASE("msspec loss identities and monotonicity") {
  AudioClip s = test::noise_clip(0.2, 4000, 16000, 26);
  CHECK(msspec_loss(s, s) == doctest::Approx(0.0));

  AudioClip noisy = s;
  Rng rng(27);
  for (auto& v : noisy.samples) v += static_cast<float>(rng.normal(0.0, 0.01));
  CHECK(msspec_loss(s, noisy) == doctest::Approx(msspec_loss(noisy, s)).epsilon(1e-9));

  double prev = 0.0;
  for (double sigma : {0.001, 0.01, 0.1}) {
    AudioClip pert = s;
    Rng r2(28);
    for (auto& v : pert.samples) v += static_cast<float>(r2.normal(0.0, sigma));
    const double loss = msspec_loss(s, pert);
    CHECK(loss > prev);
    prev = loss;
  }

  AudioClip other = test::noise_clip(0.2, 4001, 16000, 29);
  CHECK_THROWS_AS(msspec_loss(s, other), ValidationError);
}

TEST_CASE("si_snr values and invariances") {
  // s = sine, n = cosine over whole periods: orthogonal, energy ratio 100.
  const int64_t n = 16000;
  std::vector<float> s(n), noise(n);
  for (int64_t i = 0; i < n; ++i) {
    s[i] = static_cast<float>(0.5 * std::sin(2.0 * M_PI * 100.0 * i / 16000.0));
    noise[i] = static_cast<float>(0.05 * std::cos(2.0 * M_PI * 100.0 * i / 16000.0));
  }
  std::vector<float> mix(n);
  for (int64_t i = 0; i < n; ++i) mix[i] = s[i] + noise[i];
  CHECK(si_snr(s, mix) == doctest::Approx(20.0).epsilon(1e-3));

  // invariant to positive rescaling of the estimate
  std::vector<float> scaled = mix;
  for (auto& v : scaled) v *= 3.7f;
  CHECK(si_snr(s, scaled) == doctest::Approx(si_snr(s, mix)).epsilon(1e-6));

  // s_w = 2s: residual zero, capped by epsilon (no division by zero)
  std::vector<float> twice = s;
  for (auto& v : twice) v *= 2.0f;
  const double capped = si_snr(s, twice);
  CHECK(std::isfinite(capped));
  CHECK(capped > 60.0);

  CHECK_THROWS_AS(si_snr(std::vector<float>(16, 0.0f), std::vector<float>(16, 0.1f)),
                  ValidationError);
}

// Gradient checks for every trainable loss, double precision, inputs <= 256.
TEST_CASE("loss gradients match central finite differences (<= 256 samples)") {
  Rng rng(31);

  SUBCASE("l1") {
    std::vector<double> d(64);
    for (auto& v : d) v = rng.normal(0.0, 0.3);
    DTape t;
    auto x = t.leaf(DTensor::row(d), true);
    t.backward(l1_loss_op(t, x));
    std::vector<double> analytic(t.grad(x).v.begin(), t.grad(x).v.end());
    auto eval = [](const std::vector<double>& v) {
      DTape t2;
      return t2.val(l1_loss_op(t2, t2.leaf(DTensor::row(v)))).v[0];
    };
    CHECK(test::max_rel_error(analytic, test::finite_difference(eval, d, 1e-4)) < 1e-4);
  }

  SUBCASE("msspec") {
    // The perturbation is sized so no L1 kink of the log-mel differences sits
    // within the finite-difference step.
    const int64_t n = 256;
    std::vector<double> base(n), pert(n);
    for (auto& v : base) v = rng.normal(0.0, 0.2);
    for (int64_t i = 0; i < n; ++i) pert[i] = base[i] + rng.normal(0.0, 0.1);
    DTape t;
    auto s = t.leaf(DTensor::row(base));
    auto sw = t.leaf(DTensor::row(pert), true);
    t.backward(msspec_loss_op(t, s, sw, 16000));
    std::vector<double> analytic(t.grad(sw).v.begin(), t.grad(sw).v.end());
    auto eval = [&](const std::vector<double>& v) {
      DTape t2;
      auto s2 = t2.leaf(DTensor::row(base));
      auto w2 = t2.leaf(DTensor::row(v));
      return t2.val(msspec_loss_op(t2, s2, w2, 16000)).v[0];
    };
    CHECK(test::max_rel_error(analytic, test::finite_difference(eval, pert, 1e-4)) < 1e-4);
  }

  SUBCASE("tf_loudness") {
    const int64_t n = 160;
    TfGridParams grid;
    grid.bands = 4;
    grid.window = 64;
    grid.overlap = 0.5;
    std::vector<double> base(n), d(n);
    for (auto& v : base) v = rng.normal(0.0, 0.3);
    for (auto& v : d) v = rng.normal(0.0, 0.05);
    LoudnessConfig lc = cfg16();
    DTape t;
    auto s = t.leaf(DTensor::row(base));
    auto delta = t.leaf(DTensor::row(d), true);
    t.backward(tf_loudness_loss_op(t, s, delta, 16000, grid, lc));
    std::vector<double> analytic(t.grad(delta).v.begin(), t.grad(delta).v.end());
    auto eval = [&](const std::vector<double>& v) {
      DTape t2;
      auto s2 = t2.leaf(DTensor::row(base));
      auto d2 = t2.leaf(DTensor::row(v));
      return t2.val(tf_loudness_loss_op(t2, s2, d2, 16000, grid, lc)).v[0];
    };
    CHECK(test::max_rel_error(analytic, test::finite_difference(eval, d, 1e-5)) < 1e-4);
  }

  SUBCASE("loc") {
    const int64_t n = 64;
    std::vector<double> probs(n);
    std::vector<uint8_t> labels(n);
    for (int64_t i = 0; i < n; ++i) {
      probs[i] = 0.05 + 0.9 * rng.uniform();
      labels[i] = rng.uniform() < 0.5 ? 0 : 1;
    }
    DTape t;
    auto p = t.leaf(DTensor::row(probs), true);
    t.backward(loc_loss_op(t, p, labels));
    std::vector<double> analytic(t.grad(p).v.begin(), t.grad(p).v.end());
    auto eval = [&](const std::vector<double>& v) {
      DTape t2;
      return t2.val(loc_loss_op(t2, t2.leaf(DTensor::row(v)), labels)).v[0];
    };
    CHECK(test::max_rel_error(analytic, test::finite_difference(eval, probs, 1e-6)) < 1e-4);
  }

  SUBCASE("dec") {
    const int bits = 4;
    const int64_t n = 16;
    Message m;
    for (int i = 0; i < bits; ++i) m.bits.push_back(rng.uniform() < 0.5 ? 0 : 1);
    std::vector<uint8_t> mask(n, 0);
    for (auto& v : mask) v = rng.uniform() < 0.5 ? 1 : 0;
    mask[0] = 1;
    std::vector<double> logits(bits * n);
    for (auto& v : logits) v = rng.normal(0.0, 1.5);

    auto to_mat = [&](DTape& t, const std::vector<double>& flat) {
      DTensor mat(bits, n);
      mat.v = flat;
      return t.leaf(std::move(mat), true);
    };
    DTape t;
    auto lg = to_mat(t, logits);
    t.backward(dec_loss_op(t, lg, m, mask));
    std::vector<double> analytic(t.grad(lg).v.begin(), t.grad(lg).v.end());
    auto eval = [&](const std::vector<double>& v) {
      DTape t2;
      DTensor mat(bits, n);
      mat.v = v;
      return t2.val(dec_loss_op(t2, t2.leaf(std::move(mat), true), m, mask)).v[0];
    };
    CHECK(test::max_rel_error(analytic, test::finite_difference(eval, logits, 1e-5)) < 1e-4);
  }
}

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
#include <map>

#include "localmark/augment.hpp"
#include "localmark/losses.hpp"
#include "localmark/errors.hpp"
#include "test_support.hpp"

using namespace localmark;

namespace {
AudioClip impulse_clip(int64_t n, int64_t at, float amp = 1.0f) {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.assign(n, 0.0f);
  clip.samples[at] = amp;
  return clip;
}
}  // namespace

TEST_CASE("parameter tables carry the expected train and eval values") {
  struct Expect {
    EditKind kind;
    const char* key;
    double train_value;
    double eval_value;
  };
  const Expect table[] = {
      {EditKind::kBandpass, "low", 300.0, 500.0},
      {EditKind::kBandpass, "high", 8000.0, 5000.0},
      {EditKind::kHighpass, "cutoff", 500.0, 1500.0},
      {EditKind::kLowpass, "cutoff", 5000.0, 500.0},
      {EditKind::kResample, "intermediate", 32000.0, 32000.0},
      {EditKind::kBoost, "factor", 1.2, 10.0},
      {EditKind::kDuck, "factor", 0.8, 0.1},
      {EditKind::kPinkNoise, "std", 0.01, 0.1},
      {EditKind::kWhiteNoise, "std", 0.001, 0.05},
  };
  for (const auto& e : table) {
    CHECK(AugmentSpec::train_default(e.kind).param(e.key) == doctest::Approx(e.train_value));
    CHECK(AugmentSpec::eval_default(e.kind).param(e.key) == doctest::Approx(e.eval_value));
  }
  // randomized train ranges and fixed eval points
  CHECK(AugmentSpec::train_default(EditKind::kSpeed).param("min") == doctest::Approx(0.9));
  CHECK(AugmentSpec::train_default(EditKind::kSpeed).param("max") == doctest::Approx(1.1));
  CHECK(AugmentSpec::eval_default(EditKind::kSpeed).param("factor") == doctest::Approx(1.25));
  CHECK(AugmentSpec::train_default(EditKind::kEcho).param("delay_min") == doctest::Approx(0.1));
  CHECK(AugmentSpec::train_default(EditKind::kEcho).param("delay_max") == doctest::Approx(0.5));
  CHECK(AugmentSpec::eval_default(EditKind::kEcho).param("delay") == doctest::Approx(0.5));
  CHECK(AugmentSpec::eval_default(EditKind::kEcho).param("volume") == doctest::Approx(0.5));
  CHECK(AugmentSpec::train_default(EditKind::kSmooth).param("win_min") == doctest::Approx(2.0));
  CHECK(AugmentSpec::train_default(EditKind::kSmooth).param("win_max") == doctest::Approx(10.0));
  CHECK(AugmentSpec::eval_default(EditKind::kSmooth).param("window") == doctest::Approx(40.0));
  CHECK(AugmentSpec::train_battery().size() == 13);
  CHECK(AugmentSpec::eval_battery().size() == 13);
}

TEST_CASE("boost and duck are exact multiplications") {
  const AudioClip clip = test::noise_clip(0.2, 512, 16000, 1);
  Rng rng(2);
  const AudioClip boosted =
      apply_augment(clip, AugmentSpec::train_default(EditKind::kBoost), rng);
  for (int64_t i = 0; i < clip.length(); ++i) {
    CHECK(boosted.samples[i] == doctest::Approx(1.2f * clip.samples[i]));
  }
  const AudioClip ducked = apply_augment(clip, AugmentSpec::eval_default(EditKind::kDuck), rng);
  for (int64_t i = 0; i < clip.length(); ++i) {
    CHECK(ducked.samples[i] == doctest::Approx(0.1f * clip.samples[i]));
  }
}

TEST_CASE("echo eval: impulse grows a copy at +0.5 s with amplitude 0.5") {
  const AudioClip clip = impulse_clip(16000, 1000, 0.5f);
  Rng rng(3);
  const AudioClip echoed = apply_augment(clip, AugmentSpec::eval_default(EditKind::kEcho), rng);
  CHECK(echoed.samples[1000] == doctest::Approx(0.5));
  CHECK(echoed.samples[1000 + 8000] == doctest::Approx(0.25));
  int64_t nonzero = 0;
  for (float v : echoed.samples) nonzero += v != 0.0f ? 1 : 0;
  CHECK(nonzero == 2);
}

TEST_CASE("speed eval shortens by the 1.25 factor") {
  const AudioClip clip = test::noise_clip(0.1, 16000, 16000, 4);
  Rng rng(5);
  const AudioClip fast = apply_augment(clip, AugmentSpec::eval_default(EditKind::kSpeed), rng);
  CHECK(fast.length() == 12800);
}

TEST_CASE("lowpass eval attenuates energy above 1 kHz by >= 20 dB") {
  const AudioClip clip = test::noise_clip(0.3, 8192, 16000, 6);
  Rng rng(7);
  const AudioClip low = apply_augment(clip, AugmentSpec::eval_default(EditKind::kLowpass), rng);
  std::vector<double> before(clip.samples.begin(), clip.samples.end());
  std::vector<double> after(low.samples.begin(), low.samples.end());
  before.resize(2048);
  after.resize(2048);
  const double e_before = test::band_energy_dft(before, 16000.0, 1000.0, 8000.0);
  const double e_after = test::band_energy_dft(after, 16000.0, 1000.0, 8000.0);
  CHECK(10.0 * std::log10(e_before / e_after) >= 20.0);
}

TEST_CASE("bandpass eval attenuates both stopbands by >= 20 dB") {
  const AudioClip clip = test::noise_clip(0.3, 8192, 16000, 61);
  Rng rng(62);
  const AudioClip banded =
      apply_augment(clip, AugmentSpec::eval_default(EditKind::kBandpass), rng);  // 500-5000
  std::vector<double> before(clip.samples.begin(), clip.samples.begin() + 2048);
  std::vector<double> after(banded.samples.begin() + 4096, banded.samples.begin() + 6144);
  const double low_before = test::band_energy_dft(before, 16000.0, 50.0, 250.0);
  const double low_after = test::band_energy_dft(after, 16000.0, 50.0, 250.0);
  CHECK(10.0 * std::log10(low_before / low_after) >= 20.0);
  const double high_before = test::band_energy_dft(before, 16000.0, 7000.0, 8000.0);
  const double high_after = test::band_energy_dft(after, 16000.0, 7000.0, 8000.0);
  CHECK(10.0 * std::log10(high_before / high_after) >= 20.0);
}

TEST_CASE("resample edit keeps the length") {
  // Band-limited content: the round trip only disturbs the top of the band.
  AudioClip clip = test::noise_clip(0.2, 16001, 16000, 63);
  Rng rng(64);
  clip = apply_augment(clip, AugmentSpec::train_default(EditKind::kLowpass), rng);  // 5 kHz
  const AudioClip out =
      apply_augment(clip, AugmentSpec::eval_default(EditKind::kResample), rng);
  CHECK(out.length() == clip.length());
  CHECK(si_snr(clip.samples, out.samples) > 25.0);
}

TEST_CASE("white noise eval adds sigma 0.05 within 10%") {
  const AudioClip clip = test::noise_clip(0.2, 20000, 16000, 8);
  Rng rng(9);
  const AudioClip noisy =
      apply_augment(clip, AugmentSpec::eval_default(EditKind::kWhiteNoise), rng);
  double var = 0.0;
  for (int64_t i = 0; i < clip.length(); ++i) {
    const double d = noisy.samples[i] - clip.samples[i];
    var += d * d;
  }
  const double sd = std::sqrt(var / clip.length());
  CHECK(sd == doctest::Approx(0.05).epsilon(0.10));
}

TEST_CASE("smooth eval equals a direct window-40 moving average") {
  const AudioClip clip = test::noise_clip(0.3, 2000, 16000, 10);
  Rng rng(11);
  const AudioClip smooth =
      apply_augment(clip, AugmentSpec::eval_default(EditKind::kSmooth), rng);
  // independent direct convolution with the same alignment (origin 19)
  for (int64_t i : {0L, 100L, 999L, 1999L}) {
    double acc = 0.0;
    for (int k = 0; k < 40; ++k) {
      const int64_t j = i + k - 19;
      if (j >= 0 && j < clip.length()) acc += clip.samples[j] / 40.0;
    }
    CHECK(smooth.samples[i] == doctest::Approx(acc).epsilon(1e-5));
  }
}

TEST_CASE("identity spec leaves an impulse unchanged") {
  const AudioClip clip = impulse_clip(512, 100);
  Rng rng(12);
  const AudioClip out = apply_augment(clip, AugmentSpec::eval_default(EditKind::kIdentity), rng);
  CHECK(out.samples == clip.samples);
}

TEST_CASE("codec proxy preserves length and loses information") {
  const AudioClip clip = test::noise_clip(0.2, 16001, 16000, 13);
  Rng rng(14);
  const AudioClip coded =
      apply_augment(clip, AugmentSpec::eval_default(EditKind::kCodecProxy), rng);
  CHECK(coded.length() == clip.length());
  double err = 0.0;
  for (int64_t i = 0; i < clip.length(); ++i) {
    err += std::abs(coded.samples[i] - clip.samples[i]);
  }
  CHECK(err / clip.length() > 1e-4);  // lossy
}

TEST_CASE("determinism: same clip, spec and seed give identical output") {
  const AudioClip clip = test::noise_clip(0.2, 4000, 16000, 15);
  for (EditKind kind : {EditKind::kEcho, EditKind::kWhiteNoise, EditKind::kPinkNoise,
                        EditKind::kSpeed, EditKind::kSmooth, EditKind::kCodecProxy}) {
    const AugmentSpec spec = AugmentSpec::train_default(kind);
    Rng r1(99), r2(99);
    const AudioClip a = apply_augment(clip, spec, r1);
    const AudioClip b = apply_augment(clip, spec, r2);
    INFO(spec.name());
    CHECK(a.samples == b.samples);
  }
}

TEST_CASE("unknown edit name rejected") {
  CHECK_THROWS_AS(AugmentSpec::kind_from_name("reverb"), ConfigError);
  AugmentSpec missing = AugmentSpec::eval_default(EditKind::kLowpass);
  missing.params.clear();
  CHECK_THROWS_AS(missing.validate(), ConfigError);
}

TEST_CASE("straight-through: identity Jacobian, exact forward") {
  const AudioClip clip = test::noise_clip(0.2, 600, 16000, 16);
  const AugmentSpec codec = AugmentSpec::eval_default(EditKind::kCodecProxy);

  ad::FTape tape;
  ad::FTensor x(1, clip.length());
  std::copy(clip.samples.begin(), clip.samples.end(), x.v.begin());
  auto xi = tape.leaf(x, true);
  Rng rng(17);
  auto y = straight_through_op(tape, xi, codec, 16000, rng);

  Rng rng2(17);
  const AudioClip direct = apply_augment(clip, codec, rng2);
  for (int64_t i = 0; i < clip.length(); ++i) {
    CHECK(tape.val(y).v[i] == direct.samples[i]);  // bit-exact forward
  }

  tape.backward(tape.sum_all(y));
  for (int64_t i = 0; i < clip.length(); ++i) {
    CHECK(tape.grad(xi).v[i] == 1.0f);  // identity Jacobian
  }

  // boost wrapped: forward matches plain apply bit-exactly
  const AugmentSpec boost = AugmentSpec::train_default(EditKind::kBoost);
  ad::FTape t2;
  auto x2 = t2.leaf(x, true);
  Rng r3(18);
  auto yb = straight_through_op(t2, x2, boost, 16000, r3);
  Rng r4(18);
  const AudioClip bdirect = apply_augment(clip, boost, r4);
  for (int64_t i = 0; i < clip.length(); ++i) {
    CHECK(t2.val(yb).v[i] == bdirect.samples[i]);
  }

  // length-changing edit rejected
  ad::FTape t3;
  auto x3 = t3.leaf(x, true);
  Rng r5(19);
  CHECK_THROWS_AS(
      straight_through_op(t3, x3, AugmentSpec::eval_default(EditKind::kSpeed), 16000, r5),
      ConfigError);
}

TEST_CASE("wrapped vs differentiable boost: same forward, gradients 1 vs 1.2") {
  // 16-sample clip, finite-difference check on the differentiable path.
  std::vector<float> x0(16);
  Rng rng(20);
  for (auto& v : x0) v = static_cast<float>(rng.normal(0.0, 0.2));
  const AugmentSpec boost = AugmentSpec::train_default(EditKind::kBoost);

  ad::FTape t1;
  ad::FTensor xt(1, 16);
  std::copy(x0.begin(), x0.end(), xt.v.begin());
  auto a = t1.leaf(xt, true);
  Rng r1(1);
  auto wrapped = straight_through_op(t1, a, boost, 16000, r1);
  t1.backward(t1.sum_all(wrapped));

  ad::FTape t2;
  auto b = t2.leaf(xt, true);
  Rng r2(1);
  auto differentiable = apply_augment_op(t2, b, boost, 16000, r2);
  t2.backward(t2.sum_all(differentiable));

  for (int i = 0; i < 16; ++i) {
    CHECK(t1.val(wrapped).v[i] == t2.val(differentiable).v[i]);
    CHECK(t1.grad(a).v[i] == doctest::Approx(1.0));
    CHECK(t2.grad(b).v[i] == doctest::Approx(1.2));
  }

  // finite differences confirm the differentiable gradient
  auto eval = [&](float bump, int idx) {
    ad::FTape t;
    ad::FTensor xv = xt;
    xv.v[idx] += bump;
    Rng r(1);
    auto node = apply_augment_op(t, t.leaf(xv), boost, 16000, r);
    return static_cast<double>(t.val(t.sum_all(node)).v[0]);
  };
  for (int idx : {0, 7, 15}) {
    const double fd = (eval(1e-3f, idx) - eval(-1e-3f, idx)) / 2e-3;
    CHECK(fd == doctest::Approx(1.2).epsilon(1e-3));
  }
}

TEST_CASE("policy: uniform at equal accuracies, inverse-proportional after") {
  AugmentPolicy policy = AugmentPolicy::from_specs(
      {AugmentSpec::train_default(EditKind::kBoost),
       AugmentSpec::train_default(EditKind::kDuck)});
  policy.validate();
  CHECK(policy.weights[0] == doctest::Approx(0.5));
  CHECK(policy.weights[1] == doctest::Approx(0.5));

  policy.accuracy = {0.5, 1.0};
  policy.renormalize();
  CHECK(policy.weights[0] == doctest::Approx(2.0 / 3.0));
  CHECK(policy.weights[1] == doctest::Approx(1.0 / 3.0));

  // accuracy floor kicks in at zero accuracy
  policy.accuracy = {0.0, 1.0};
  policy.renormalize();
  CHECK(policy.weights[0] == doctest::Approx((1.0 / 0.05) / (1.0 / 0.05 + 1.0)));

  CHECK_THROWS_AS(AugmentPolicy::from_specs({}), ConfigError);
}

TEST_CASE("policy sampling frequencies match weights (1e5 draws, 3 sigma)") {
  AugmentPolicy policy = AugmentPolicy::from_specs(
      {AugmentSpec::train_default(EditKind::kBoost),
       AugmentSpec::train_default(EditKind::kDuck)});
  policy.accuracy = {0.5, 1.0};
  policy.renormalize();  // weights 2/3, 1/3

  Rng rng(21);
  const int64_t draws = 100000;
  int64_t first = 0;
  for (int64_t i = 0; i < draws; ++i) {
    first += policy.sample_index(rng) == 0 ? 1 : 0;
  }
  const double p = 2.0 / 3.0;
  const double se = std::sqrt(p * (1.0 - p) / draws);
  CHECK(std::abs(static_cast<double>(first) / draws - p) < 3.0 * se);
}

TEST_CASE("label rescaling follows the speed factor") {
  std::vector<uint8_t> labels(1000, 0);
  for (int i = 200; i < 400; ++i) labels[i] = 1;
  const auto scaled = rescale_labels(labels, 800);
  CHECK(scaled.size() == 800);
  int64_t ones = 0;
  for (uint8_t v : scaled) ones += v;
  CHECK(ones == doctest::Approx(160).epsilon(0.05));
  CHECK(scaled[240] == 1);  // 240 * 1.25 = 300, inside the span
  CHECK(scaled[100] == 0);
}

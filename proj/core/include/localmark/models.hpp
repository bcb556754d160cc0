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

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "localmark/audio.hpp"
#include "localmark/nn_ops.hpp"
#include "localmark/rng.hpp"

namespace localmark {

// Binary payload identifying a model version.
struct Message {
  std::vector<int> bits;  // each 0 or 1, bits[0] is the lowest-index bit

  static Message random(int bit_count, Rng& rng);
  static Message zeros(int bit_count);
  static Message from_hex(const std::string& hex, int bit_count);
  std::string to_hex() const;
  void validate(int expected_bits) const;

  bool operator==(const Message& o) const { return bits == o.bits; }
};

using WatermarkDelta = std::vector<float>;

// Network topology. Defaults are the desk-scale configuration; paper_scale()
// restores the full-size channel counts.
struct ModelConfig {
  int base_channels = 16;
  int latent_dim = 64;
  std::array<int, 4> strides{2, 4, 5, 8};
  int hidden_dim = 32;    // h: channels of the detector's sample-rate map
  int message_bits = 16;  // b: payload size; 0 disables message embedding
  int kernel_boundary = 7;
  int kernel_residual = 3;
  int lstm_layers = 2;
  std::vector<int> disc_windows{256, 512, 1024};
  int disc_channels = 32;

  static ModelConfig paper_scale();
  // Reduced preset for CPU-budget training runs.
  static ModelConfig small();

  int downsample_factor() const;
  int top_channels() const;  // channels after the four encoder blocks
  void validate() const;

  std::string serialize() const;
  static ModelConfig deserialize(const std::string& text);
  uint64_t hash() const;
};

// Named parameter arrays plus run metadata; names are unique and ordered by
// construction so two builds of the same config agree exactly.
struct ParameterStore {
  std::vector<std::string> names;
  std::unordered_map<std::string, ad::FTensor> values;
  std::string config_text;
  uint64_t config_hash = 0;
  int64_t step = 0;
  uint64_t seed = 0;

  void add(const std::string& name, ad::FTensor value);
  ad::FTensor& at(const std::string& name);
  const ad::FTensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return values.count(name) > 0; }
  int64_t parameter_count() const;
};

ParameterStore init_generator(const ModelConfig& cfg, uint64_t seed);
ParameterStore init_detector(const ModelConfig& cfg, uint64_t seed);
ParameterStore init_discriminator(const ModelConfig& cfg, uint64_t seed);

// Checkpoint container, little-endian:
//   "LMCK" | u32 version | u64 config_hash | i64 step | u64 seed
//   | u32 config_text_len | config text (the serialized ModelConfig)
//   | u32 array_count | per array: u16 name_len, name, u32 rows, u64 cols,
//     rows*cols float32 values
void save_checkpoint(const ParameterStore& store, const std::string& path);
ParameterStore load_checkpoint(const std::string& path);

// Binds store entries to tape leaves on demand. With trainable=true the
// leaves require gradients, which land back in grads() after backward.
class BoundParams {
 public:
  BoundParams(ad::FTape& tape, const ParameterStore& store, bool trainable)
      : tape_(&tape), store_(&store), trainable_(trainable) {}

  ad::FTape::Id operator()(const std::string& name);

  // name -> gradient for every bound parameter that received one.
  std::vector<std::pair<std::string, const ad::FTensor*>> grads() const;

 private:
  ad::FTape* tape_;
  const ParameterStore* store_;
  bool trainable_;
  std::unordered_map<std::string, ad::FTape::Id> bound_;
};

// e = sum_i E[2i + m_i]; returns an (h, 1) column node.
ad::FTape::Id message_embed_op(ad::FTape& tape, ad::FTape::Id table, const Message& m);

// Watermark waveform for (1, T) audio; same length, bounded by tanh * gain.
ad::FTape::Id generator_delta_op(ad::FTape& tape, BoundParams& params, ad::FTape::Id audio,
                                 const ModelConfig& cfg,
                                 const std::optional<Message>& message);

struct DetectorNodes {
  ad::FTape::Id presence;        // (1, T) probabilities in [0, 1]
  ad::FTape::Id presence_logits; // (2, T) pre-softmax
  ad::FTape::Id message_logits;  // (b, T); unused when message_bits == 0
  bool has_message = false;
};

DetectorNodes detector_forward_op(ad::FTape& tape, BoundParams& params, ad::FTape::Id audio,
                                  const ModelConfig& cfg);

struct DiscriminatorNodes {
  std::vector<ad::FTape::Id> scores;                 // one (1, frames) map per scale
  std::vector<std::vector<ad::FTape::Id>> features;  // intermediate maps per scale
};

DiscriminatorNodes discriminator_forward_op(ad::FTape& tape, BoundParams& params,
                                            ad::FTape::Id audio, const ModelConfig& cfg);

// ---- plain (no-gradient) entry points ------------------------------------

WatermarkDelta generator_forward(const ParameterStore& gen, const AudioClip& clip,
                                 const std::optional<Message>& message);

// Per-sample probability plus per-sample, per-bit message logits.
struct DetectorOutput {
  std::vector<float> presence;   // length T, in [0, 1]
  ad::FTensor message_logits;    // (b, T)

  int64_t length() const { return static_cast<int64_t>(presence.size()); }
  void validate() const;
};

DetectorOutput detector_forward(const ParameterStore& det, const AudioClip& clip);

// s + delta clipped to [-1, 1]; unwatermarked samples stay bit-exact.
AudioClip apply_watermark(const AudioClip& clip, const WatermarkDelta& delta);

}  // namespace localmark

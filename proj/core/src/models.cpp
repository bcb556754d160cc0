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

#include "localmark/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "localmark/dsp_ops.hpp"
#include "localmark/errors.hpp"

namespace localmark {

// ---- Message ---------------------------------------------------------------

Message Message::random(int bit_count, Rng& rng) {
  Message m;
  m.bits.resize(bit_count);
  for (int& b : m.bits) b = rng.uniform() < 0.5 ? 0 : 1;
  return m;
}

Message Message::zeros(int bit_count) {
  Message m;
  m.bits.assign(bit_count, 0);
  return m;
}

Message Message::from_hex(const std::string& hex, int bit_count) {
  const int digits = (bit_count + 3) / 4;
  if (static_cast<int>(hex.size()) != digits) {
    throw ValidationError("message hex must have " + std::to_string(digits) + " digits");
  }
  Message m;
  m.bits.assign(bit_count, 0);
  for (int i = 0; i < bit_count; ++i) {
    const char c = hex[i / 4];
    int nibble;
    if (c >= '0' && c <= '9') nibble = c - '0';
    else if (c >= 'a' && c <= 'f') nibble = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') nibble = c - 'A' + 10;
    else throw ValidationError("message has non-hex digit");
    m.bits[i] = (nibble >> (3 - i % 4)) & 1;
  }
  return m;
}

std::string Message::to_hex() const {
  const int digits = (static_cast<int>(bits.size()) + 3) / 4;
  std::string out(digits, '0');
  for (size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) {
      int nibble = out[i / 4] <= '9' ? out[i / 4] - '0' : out[i / 4] - 'a' + 10;
      nibble |= 1 << (3 - i % 4);
      out[i / 4] = nibble < 10 ? static_cast<char>('0' + nibble)
                               : static_cast<char>('a' + nibble - 10);
    }
  }
  return out;
}

void Message::validate(int expected_bits) const {
  if (static_cast<int>(bits.size()) != expected_bits) {
    throw ValidationError("message must have " + std::to_string(expected_bits) + " bits");
  }
  for (int b : bits) {
    if (b != 0 && b != 1) throw ValidationError("message bits must be 0 or 1");
  }
}

// ---- ModelConfig -------------------------------------------------------------

ModelConfig ModelConfig::paper_scale() {
  ModelConfig cfg;
  cfg.base_channels = 32;
  cfg.latent_dim = 128;
  return cfg;
}

ModelConfig ModelConfig::small() {
  ModelConfig cfg;
  cfg.base_channels = 8;
  cfg.latent_dim = 32;
  return cfg;
}

int ModelConfig::downsample_factor() const {
  int f = 1;
  for (int s : strides) f *= s;
  return f;
}

int ModelConfig::top_channels() const {
  return base_channels << static_cast<int>(strides.size());
}

void ModelConfig::validate() const {
  if (base_channels < 1 || latent_dim < 1 || hidden_dim < 1) {
    throw ConfigError("model: channel counts must be positive");
  }
  if (message_bits < 0) throw ConfigError("model: message_bits must be >= 0");
  if (message_bits > 0 && hidden_dim <= message_bits) {
    throw ConfigError("model: hidden_dim must exceed message_bits");
  }
  for (int s : strides) {
    if (s < 1) throw ConfigError("model: strides must be positive");
  }
  if (lstm_layers < 0) throw ConfigError("model: lstm_layers must be >= 0");
  for (int w : disc_windows) {
    if (w < 8 || (w & (w - 1)) != 0) throw ConfigError("model: disc windows must be pow2");
  }
}

std::string ModelConfig::serialize() const {
  std::ostringstream os;
  os << "base_channels=" << base_channels << "\n";
  os << "latent_dim=" << latent_dim << "\n";
  os << "strides=" << strides[0] << "," << strides[1] << "," << strides[2] << ","
     << strides[3] << "\n";
  os << "hidden_dim=" << hidden_dim << "\n";
  os << "message_bits=" << message_bits << "\n";
  os << "kernel_boundary=" << kernel_boundary << "\n";
  os << "kernel_residual=" << kernel_residual << "\n";
  os << "lstm_layers=" << lstm_layers << "\n";
  os << "disc_windows=";
  for (size_t i = 0; i < disc_windows.size(); ++i) {
    os << (i ? "," : "") << disc_windows[i];
  }
  os << "\n";
  os << "disc_channels=" << disc_channels << "\n";
  return os.str();
}

ModelConfig ModelConfig::deserialize(const std::string& text) {
  ModelConfig cfg;
  std::istringstream is(text);
  std::string line;
  auto parse_ints = [](const std::string& s) {
    std::vector<int> out;
    std::istringstream ls(s);
    std::string tok;
    while (std::getline(ls, tok, ',')) out.push_back(std::stoi(tok));
    return out;
  };
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "base_channels") cfg.base_channels = std::stoi(value);
    else if (key == "latent_dim") cfg.latent_dim = std::stoi(value);
    else if (key == "strides") {
      auto v = parse_ints(value);
      if (v.size() != 4) throw ConfigError("model: need 4 strides");
      std::copy(v.begin(), v.end(), cfg.strides.begin());
    } else if (key == "hidden_dim") cfg.hidden_dim = std::stoi(value);
    else if (key == "message_bits") cfg.message_bits = std::stoi(value);
    else if (key == "kernel_boundary") cfg.kernel_boundary = std::stoi(value);
    else if (key == "kernel_residual") cfg.kernel_residual = std::stoi(value);
    else if (key == "lstm_layers") cfg.lstm_layers = std::stoi(value);
    else if (key == "disc_windows") cfg.disc_windows = parse_ints(value);
    else if (key == "disc_channels") cfg.disc_channels = std::stoi(value);
    else throw ConfigError("model: unknown key " + key);
  }
  cfg.validate();
  return cfg;
}

uint64_t ModelConfig::hash() const {
  const std::string text = serialize();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---- ParameterStore ---------------------------------------------------------

void ParameterStore::add(const std::string& name, ad::FTensor value) {
  if (values.count(name)) throw ConfigError("duplicate parameter name " + name);
  names.push_back(name);
  values.emplace(name, std::move(value));
}

ad::FTensor& ParameterStore::at(const std::string& name) {
  auto it = values.find(name);
  if (it == values.end()) throw ConfigError("missing parameter " + name);
  return it->second;
}

const ad::FTensor& ParameterStore::at(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw ConfigError("missing parameter " + name);
  return it->second;
}

int64_t ParameterStore::parameter_count() const {
  int64_t n = 0;
  for (const auto& [name, v] : values) n += v.size();
  return n;
}

namespace {

ad::FTensor normal_tensor(int rows, int64_t cols, double stddev, Rng& rng) {
  ad::FTensor t(rows, cols);
  for (auto& x : t.v) x = static_cast<float>(rng.normal(0.0, stddev));
  return t;
}

void add_conv(ParameterStore& p, const std::string& name, int cout, int cin, int k, Rng& rng) {
  const double std = std::sqrt(1.0 / (static_cast<double>(cin) * k));
  p.add(name + ".w", normal_tensor(cout, static_cast<int64_t>(cin) * k, std, rng));
  p.add(name + ".b", ad::FTensor(cout, 1));
}

// Transposed conv weight layout is (cout*k, cin).
void add_tconv(ParameterStore& p, const std::string& name, int cin, int cout, int k, Rng& rng) {
  const double std = std::sqrt(1.0 / (static_cast<double>(cin) * k));
  p.add(name + ".w", normal_tensor(cout * k, cin, std, rng));
  p.add(name + ".b", ad::FTensor(cout, 1));
}

void add_lstm(ParameterStore& p, const std::string& name, int h, Rng& rng) {
  const double std = std::sqrt(1.0 / h);
  p.add(name + ".wi", normal_tensor(4 * h, h, std, rng));
  p.add(name + ".wh", normal_tensor(4 * h, h, std, rng));
  ad::FTensor bias(4 * h, 1);
  for (int r = h; r < 2 * h; ++r) bias(r, 0) = 1.0f;  // forget gate bias
  p.add(name + ".b", bias);
}

void add_encoder(ParameterStore& p, const ModelConfig& cfg, const std::string& prefix,
                 Rng& rng) {
  add_conv(p, prefix + ".in", cfg.base_channels, 1, cfg.kernel_boundary, rng);
  int ch = cfg.base_channels;
  for (size_t i = 0; i < cfg.strides.size(); ++i) {
    const std::string block = prefix + ".b" + std::to_string(i);
    add_conv(p, block + ".r.c1", ch, ch, cfg.kernel_residual, rng);
    add_conv(p, block + ".r.c2", ch, ch, cfg.kernel_residual, rng);
    add_conv(p, block + ".down", 2 * ch, ch, 2 * cfg.strides[i], rng);
    ch *= 2;
  }
  for (int j = 0; j < cfg.lstm_layers; ++j) {
    add_lstm(p, prefix + ".lstm" + std::to_string(j), ch, rng);
  }
  add_conv(p, prefix + ".out", cfg.latent_dim, ch, cfg.kernel_boundary, rng);
}

}  // namespace

ParameterStore init_generator(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(Rng::mix(seed, 0x67656e));
  ParameterStore p;
  p.config_text = cfg.serialize();
  p.config_hash = cfg.hash();
  p.seed = seed;
  add_encoder(p, cfg, "enc", rng);

  if (cfg.message_bits > 0) {
    p.add("msg.embed", normal_tensor(2 * cfg.message_bits, cfg.hidden_dim, 1.0, rng));
    add_conv(p, "msg.proj", cfg.latent_dim, cfg.hidden_dim, 1, rng);
  }

  const int top = cfg.top_channels();
  add_conv(p, "dec.in", top, cfg.latent_dim, cfg.kernel_boundary, rng);
  for (int j = 0; j < cfg.lstm_layers; ++j) {
    add_lstm(p, "dec.lstm" + std::to_string(j), top, rng);
  }
  int ch = top;
  for (size_t i = 0; i < cfg.strides.size(); ++i) {
    const int stride = cfg.strides[cfg.strides.size() - 1 - i];
    const std::string block = "dec.b" + std::to_string(i);
    add_tconv(p, block + ".up", ch, ch / 2, 2 * stride, rng);
    ch /= 2;
    add_conv(p, block + ".r.c1", ch, ch, cfg.kernel_residual, rng);
    add_conv(p, block + ".r.c2", ch, ch, cfg.kernel_residual, rng);
  }
  // Small-std output head keeps the initial watermark well under the gain
  // bound, so an untrained generator is near-transparent.
  const double out_std = 0.05 * std::sqrt(1.0 / (static_cast<double>(ch) * cfg.kernel_boundary));
  p.add("dec.out.w", normal_tensor(1, static_cast<int64_t>(ch) * cfg.kernel_boundary, out_std, rng));
  p.add("dec.out.b", ad::FTensor(1, 1));
  ad::FTensor gain(1, 1);
  gain.v[0] = 0.01f;
  p.add("dec.gain", gain);
  return p;
}

ParameterStore init_detector(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(Rng::mix(seed, 0x646574));
  ParameterStore p;
  p.config_text = cfg.serialize();
  p.config_hash = cfg.hash();
  p.seed = seed;
  add_encoder(p, cfg, "enc", rng);

  const int top = cfg.top_channels();
  add_conv(p, "up.in", top, cfg.latent_dim, cfg.kernel_boundary, rng);
  int ch = top;
  for (size_t i = 0; i < cfg.strides.size(); ++i) {
    const int stride = cfg.strides[cfg.strides.size() - 1 - i];
    const int cout = i + 1 == cfg.strides.size() ? cfg.hidden_dim : ch / 2;
    add_tconv(p, "up.t" + std::to_string(i), ch, cout, 2 * stride, rng);
    ch = cout;
  }
  add_conv(p, "head.p", 2, cfg.hidden_dim, 1, rng);
  if (cfg.message_bits > 0) {
    add_conv(p, "head.m", cfg.message_bits, cfg.hidden_dim, 1, rng);
  }
  return p;
}

ParameterStore init_discriminator(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(Rng::mix(seed, 0x646973));
  ParameterStore p;
  p.config_text = cfg.serialize();
  p.config_hash = cfg.hash();
  p.seed = seed;
  for (int w : cfg.disc_windows) {
    const std::string scale = "disc.s" + std::to_string(w);
    add_conv(p, scale + ".c0", cfg.disc_channels, w / 2 + 1, 5, rng);
    add_conv(p, scale + ".c1", cfg.disc_channels, cfg.disc_channels, 5, rng);
    add_conv(p, scale + ".c2", 1, cfg.disc_channels, 3, rng);
  }
  return p;
}

// ---- checkpoint io ----------------------------------------------------------

namespace {
constexpr char kCkptMagic[4] = {'L', 'M', 'C', 'K'};
constexpr uint32_t kCkptVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated checkpoint");
  return v;
}
}  // namespace

void save_checkpoint(const ParameterStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(kCkptMagic, 4);
  write_pod(out, kCkptVersion);
  write_pod(out, store.config_hash);
  write_pod(out, store.step);
  write_pod(out, store.seed);
  write_pod(out, static_cast<uint32_t>(store.config_text.size()));
  out.write(store.config_text.data(), static_cast<std::streamsize>(store.config_text.size()));
  write_pod(out, static_cast<uint32_t>(store.names.size()));
  for (const std::string& name : store.names) {
    const ad::FTensor& v = store.at(name);
    write_pod(out, static_cast<uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<uint32_t>(v.rows));
    write_pod(out, static_cast<uint64_t>(v.cols));
    out.write(reinterpret_cast<const char*>(v.v.data()),
              static_cast<std::streamsize>(v.v.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed for checkpoint " + path);
}

ParameterStore load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCkptMagic, 4) != 0) {
    throw FormatError(path + ": not a localmark checkpoint");
  }
  const uint32_t version = read_pod<uint32_t>(in);
  if (version != kCkptVersion) {
    throw FormatError(path + ": unsupported checkpoint version");
  }
  ParameterStore store;
  store.config_hash = read_pod<uint64_t>(in);
  store.step = read_pod<int64_t>(in);
  store.seed = read_pod<uint64_t>(in);
  const uint32_t text_len = read_pod<uint32_t>(in);
  store.config_text.resize(text_len);
  in.read(store.config_text.data(), text_len);
  const uint32_t count = read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = read_pod<uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t rows = read_pod<uint32_t>(in);
    const uint64_t cols = read_pod<uint64_t>(in);
    ad::FTensor v(static_cast<int>(rows), static_cast<int64_t>(cols));
    in.read(reinterpret_cast<char*>(v.v.data()),
            static_cast<std::streamsize>(v.v.size() * sizeof(float)));
    if (!in) throw IoError(path + ": truncated checkpoint");
    store.add(name, std::move(v));
  }
  return store;
}

// ---- forward passes ----------------------------------------------------------

ad::FTape::Id BoundParams::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const ad::FTensor& v = store_->at(name);
  const ad::FTape::Id id = tape_->leaf(v, trainable_);
  bound_.emplace(name, id);
  return id;
}

std::vector<std::pair<std::string, const ad::FTensor*>> BoundParams::grads() const {
  std::vector<std::pair<std::string, const ad::FTensor*>> out;
  for (const auto& [name, id] : bound_) {
    const ad::FTensor& g = tape_->grad(id);
    if (!g.empty()) out.emplace_back(name, &g);
  }
  return out;
}

namespace {

using Id = ad::FTape::Id;

Id causal_conv(ad::FTape& t, BoundParams& p, Id x, const std::string& name, int k, int stride) {
  const int64_t len = t.val(x).cols;
  const int64_t pad_l = k - stride;
  const int64_t pad_r = stride <= 1 ? 0 : (stride - (len % stride)) % stride;
  return conv1d(t, x, p(name + ".w"), p(name + ".b"), k, stride, pad_l, pad_r);
}

Id residual_unit(ad::FTape& t, BoundParams& p, Id x, const std::string& prefix, int k) {
  auto a1 = t.elu(x);
  auto c1 = causal_conv(t, p, a1, prefix + ".c1", k, 1);
  auto a2 = t.elu(c1);
  auto c2 = causal_conv(t, p, a2, prefix + ".c2", k, 1);
  return t.add(x, c2);
}

Id encoder_forward(ad::FTape& t, BoundParams& p, Id x, const ModelConfig& cfg) {
  auto h = causal_conv(t, p, x, "enc.in", cfg.kernel_boundary, 1);
  for (size_t i = 0; i < cfg.strides.size(); ++i) {
    const std::string block = "enc.b" + std::to_string(i);
    h = residual_unit(t, p, h, block + ".r", cfg.kernel_residual);
    h = t.elu(h);
    h = causal_conv(t, p, h, block + ".down", 2 * cfg.strides[i], cfg.strides[i]);
  }
  for (int j = 0; j < cfg.lstm_layers; ++j) {
    const std::string l = "enc.lstm" + std::to_string(j);
    h = t.add(h, lstm(t, h, p(l + ".wi"), p(l + ".wh"), p(l + ".b")));
  }
  h = t.elu(h);
  return causal_conv(t, p, h, "enc.out", cfg.kernel_boundary, 1);
}

}  // namespace

ad::FTape::Id message_embed_op(ad::FTape& tape, ad::FTape::Id table, const Message& m) {
  const ad::FTensor& e = tape.val(table);
  const int b = static_cast<int>(m.bits.size());
  if (e.rows != 2 * b) throw ValidationError("message_embed: table rows != 2b");
  const int h = static_cast<int>(e.cols);
  std::vector<int> rows(b);
  for (int i = 0; i < b; ++i) {
    if (m.bits[i] != 0 && m.bits[i] != 1) throw ValidationError("message bits must be 0/1");
    rows[i] = 2 * i + m.bits[i];
  }
  ad::FTensor out(h, 1);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < h; ++j) out(j, 0) += e(rows[i], j);
  }
  return tape.make_node(std::move(out), tape.requires_grad(table),
                        [table, rows, h](ad::FTape& t, ad::FTape::Id self) {
                          const ad::FTensor& g = t.grad(self);
                          ad::FTensor ge(t.val(table).rows, h);
                          for (int row : rows) {
                            for (int j = 0; j < h; ++j) ge(row, j) += g(j, 0);
                          }
                          t.accumulate(table, ge);
                        });
}

ad::FTape::Id generator_delta_op(ad::FTape& tape, BoundParams& params, ad::FTape::Id audio,
                                 const ModelConfig& cfg,
                                 const std::optional<Message>& message) {
  const int64_t t_in = tape.val(audio).cols;
  if (tape.val(audio).rows != 1) throw ValidationError("generator: audio must be (1, T)");
  if (t_in < cfg.downsample_factor()) {
    throw ValidationError("generator: input shorter than the downsampling factor");
  }

  auto latent = encoder_forward(tape, params, audio, cfg);
  if (message.has_value()) {
    if (cfg.message_bits == 0) throw ValidationError("generator built without message bits");
    message->validate(cfg.message_bits);
    auto e = message_embed_op(tape, params("msg.embed"), *message);
    auto proj = conv1d(tape, e, params("msg.proj.w"), params("msg.proj.b"), 1, 1, 0, 0);
    latent = tape.add_row_broadcast(latent, proj);
  }

  auto h = causal_conv(tape, params, latent, "dec.in", cfg.kernel_boundary, 1);
  for (int j = 0; j < cfg.lstm_layers; ++j) {
    const std::string l = "dec.lstm" + std::to_string(j);
    h = tape.add(h, lstm(tape, h, params(l + ".wi"), params(l + ".wh"), params(l + ".b")));
  }
  int ch = cfg.top_channels();
  for (size_t i = 0; i < cfg.strides.size(); ++i) {
    const int stride = cfg.strides[cfg.strides.size() - 1 - i];
    const int k = 2 * stride;
    const std::string block = "dec.b" + std::to_string(i);
    h = tape.elu(h);
    const int64_t tn = tape.val(h).cols;
    h = conv_transpose1d(tape, h, params(block + ".up.w"), params(block + ".up.b"), ch / 2, k,
                         stride, k - stride, tn * stride);
    ch /= 2;
    h = residual_unit(tape, params, h, block + ".r", cfg.kernel_residual);
  }
  h = tape.elu(h);
  auto wave = causal_conv(tape, params, h, "dec.out", cfg.kernel_boundary, 1);
  wave = tape.slice_cols(wave, 0, t_in);
  return tape.mul_by_scalar_node(tape.tanh_(wave), params("dec.gain"));
}

DetectorNodes detector_forward_op(ad::FTape& tape, BoundParams& params, ad::FTape::Id audio,
                                  const ModelConfig& cfg) {
  const int64_t t_in = tape.val(audio).cols;
  if (tape.val(audio).rows != 1) throw ValidationError("detector: audio must be (1, T)");
  if (t_in < cfg.downsample_factor()) {
    throw ValidationError("detector: input shorter than the downsampling factor");
  }

  auto latent = encoder_forward(tape, params, audio, cfg);
  auto h = causal_conv(tape, params, latent, "up.in", cfg.kernel_boundary, 1);
  int ch = cfg.top_channels();
  for (size_t i = 0; i < cfg.strides.size(); ++i) {
    const int stride = cfg.strides[cfg.strides.size() - 1 - i];
    const int k = 2 * stride;
    const int cout = i + 1 == cfg.strides.size() ? cfg.hidden_dim : ch / 2;
    h = tape.elu(h);
    const int64_t tn = tape.val(h).cols;
    h = conv_transpose1d(tape, h, params("up.t" + std::to_string(i) + ".w"),
                         params("up.t" + std::to_string(i) + ".b"), cout, k, stride,
                         k - stride, tn * stride);
    ch = cout;
  }
  h = tape.elu(h);
  h = tape.slice_cols(h, 0, t_in);

  DetectorNodes out;
  out.presence_logits = conv1d(tape, h, params("head.p.w"), params("head.p.b"), 1, 1, 0, 0);
  auto sm = tape.softmax_dim0(out.presence_logits);
  out.presence = tape.slice_rows(sm, 1, 1);
  if (cfg.message_bits > 0) {
    out.message_logits = conv1d(tape, h, params("head.m.w"), params("head.m.b"), 1, 1, 0, 0);
    out.has_message = true;
  } else {
    out.message_logits = out.presence;
  }
  return out;
}

DiscriminatorNodes discriminator_forward_op(ad::FTape& tape, BoundParams& params,
                                            ad::FTape::Id audio, const ModelConfig& cfg) {
  if (tape.val(audio).rows != 1) throw ValidationError("discriminator: audio must be (1, T)");
  DiscriminatorNodes out;
  for (int w : cfg.disc_windows) {
    const std::string scale = "disc.s" + std::to_string(w);
    auto power = ad::stft_power(tape, audio, w, w / 4, ad::hann_window(w));
    auto lp = tape.log_floor(power, 1e-5);
    auto c0 = conv1d(tape, lp, params(scale + ".c0.w"), params(scale + ".c0.b"), 5, 1, 2, 2);
    auto f0 = tape.leaky_relu(c0, 0.2);
    auto c1 = conv1d(tape, f0, params(scale + ".c1.w"), params(scale + ".c1.b"), 5, 1, 2, 2);
    auto f1 = tape.leaky_relu(c1, 0.2);
    auto score = conv1d(tape, f1, params(scale + ".c2.w"), params(scale + ".c2.b"), 3, 1, 1, 1);
    out.scores.push_back(score);
    out.features.push_back({f0, f1});
  }
  return out;
}

// ---- plain wrappers -----------------------------------------------------------

namespace {
ad::FTensor clip_tensor(const AudioClip& clip) {
  ad::FTensor t(1, clip.length());
  std::copy(clip.samples.begin(), clip.samples.end(), t.v.begin());
  return t;
}
}  // namespace

WatermarkDelta generator_forward(const ParameterStore& gen, const AudioClip& clip,
                                 const std::optional<Message>& message) {
  clip.validate();
  const ModelConfig cfg = ModelConfig::deserialize(gen.config_text);
  ad::FTape tape;
  BoundParams params(tape, gen, false);
  auto x = tape.constant(clip_tensor(clip));
  auto delta = generator_delta_op(tape, params, x, cfg, message);
  return tape.val(delta).v;
}

DetectorOutput detector_forward(const ParameterStore& det, const AudioClip& clip) {
  clip.validate();
  const ModelConfig cfg = ModelConfig::deserialize(det.config_text);
  ad::FTape tape;
  BoundParams params(tape, det, false);
  auto x = tape.constant(clip_tensor(clip));
  auto nodes = detector_forward_op(tape, params, x, cfg);
  DetectorOutput out;
  out.presence = tape.val(nodes.presence).v;
  out.message_logits = nodes.has_message ? tape.val(nodes.message_logits) : ad::FTensor(0, 0);
  return out;
}

void DetectorOutput::validate() const {
  if (presence.empty()) throw ValidationError("detector output is empty");
  for (float p : presence) {
    if (!(p >= 0.0f && p <= 1.0f)) throw ValidationError("presence outside [0, 1]");
  }
}

AudioClip apply_watermark(const AudioClip& clip, const WatermarkDelta& delta) {
  clip.validate();
  if (delta.size() != clip.samples.size()) {
    throw ValidationError("watermark length mismatch");
  }
  AudioClip out = clip;
  for (size_t i = 0; i < delta.size(); ++i) {
    out.samples[i] = std::clamp(out.samples[i] + delta[i], -1.0f, 1.0f);
  }
  return out;
}

}  // namespace localmark

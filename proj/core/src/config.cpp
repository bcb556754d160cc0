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

#include "localmark/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "localmark/errors.hpp"

namespace localmark {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": not a number: " + v);
  }
}

int64_t to_int(const std::string& section, const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": not an integer: " + v);
  }
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("[" + section + "] " + key + ": not a boolean: " + v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream is(v);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& section, const std::string& key,
                               const std::string& v) {
  std::vector<double> out;
  for (const auto& tok : split_list(v)) out.push_back(to_double(section, key, tok));
  return out;
}

std::vector<int> to_ints(const std::string& section, const std::string& key,
                         const std::string& v) {
  std::vector<int> out;
  for (const auto& tok : split_list(v)) {
    out.push_back(static_cast<int>(to_int(section, key, tok)));
  }
  return out;
}

}  // namespace

IniFile IniFile::parse_string(const std::string& text) {
  IniFile ini;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": bad section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      ini.sections[section];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    ini.sections[section][key] = value;
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  auto s = sections.find(section);
  return s != sections.end() && s->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
  auto s = sections.find(section);
  if (s == sections.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

RunConfig RunConfig::from_ini(const IniFile& ini) {
  RunConfig cfg;
  for (const auto& [section, kv] : ini.sections) {
    if (section == "model") {
      for (const auto& [key, value] : kv) {
        if (key == "preset") {
          if (value == "desk") cfg.model = ModelConfig{};
          else if (value == "paper") cfg.model = ModelConfig::paper_scale();
          else if (value == "small") cfg.model = ModelConfig::small();
          else throw ConfigError("[model] preset: unknown preset " + value);
        } else if (key == "base_channels") cfg.model.base_channels = static_cast<int>(to_int(section, key, value));
        else if (key == "latent_dim") cfg.model.latent_dim = static_cast<int>(to_int(section, key, value));
        else if (key == "hidden_dim") cfg.model.hidden_dim = static_cast<int>(to_int(section, key, value));
        else if (key == "message_bits") cfg.model.message_bits = static_cast<int>(to_int(section, key, value));
        else if (key == "lstm_layers") cfg.model.lstm_layers = static_cast<int>(to_int(section, key, value));
        else if (key == "disc_channels") cfg.model.disc_channels = static_cast<int>(to_int(section, key, value));
        else if (key == "disc_windows") cfg.model.disc_windows = to_ints(section, key, value);
        else if (key == "strides") {
          auto v = to_ints(section, key, value);
          if (v.size() != 4) throw ConfigError("[model] strides: need 4 values");
          std::copy(v.begin(), v.end(), cfg.model.strides.begin());
        } else throw ConfigError("[model] unknown key " + key);
      }
    } else if (section == "train") {
      for (const auto& [key, value] : kv) {
        if (key == "batch_size") cfg.train.batch_size = static_cast<int>(to_int(section, key, value));
        else if (key == "learning_rate") cfg.train.learning_rate = to_double(section, key, value);
        else if (key == "total_steps") cfg.train.total_steps = to_int(section, key, value);
        else if (key == "sample_length") cfg.train.sample_length = static_cast<int>(to_int(section, key, value));
        else if (key == "mask_windows") cfg.train.mask_windows = static_cast<int>(to_int(section, key, value));
        else if (key == "seed") cfg.train.seed = static_cast<uint64_t>(to_int(section, key, value));
        else if (key == "checkpoint_interval") cfg.train.checkpoint_interval = to_int(section, key, value);
        else if (key == "metrics_interval") cfg.train.metrics_interval = to_int(section, key, value);
        else if (key == "use_message") cfg.train.use_message = to_bool(section, key, value);
        else if (key == "train_discriminator") cfg.train.train_discriminator = to_bool(section, key, value);
        else if (key == "use_augmentations") cfg.train.use_augmentations = to_bool(section, key, value);
        else if (key == "perc_warmup_steps") cfg.train.perc_warmup_steps = to_int(section, key, value);
        else throw ConfigError("[train] unknown key " + key);
      }
    } else if (section == "losses") {
      for (const auto& [key, value] : kv) {
        if (key == "l1") cfg.train.weights.l1 = to_double(section, key, value);
        else if (key == "msspec") cfg.train.weights.msspec = to_double(section, key, value);
        else if (key == "adv") cfg.train.weights.adv = to_double(section, key, value);
        else if (key == "loud") cfg.train.weights.loud = to_double(section, key, value);
        else if (key == "loc") cfg.train.weights.loc = to_double(section, key, value);
        else if (key == "dec") cfg.train.weights.dec = to_double(section, key, value);
        else throw ConfigError("[losses] unknown key " + key);
      }
    } else if (section == "augment") {
      std::vector<AugmentSpec> specs;
      if (kv.count("edits")) {
        for (const auto& name : split_list(kv.at("edits"))) {
          specs.push_back(AugmentSpec::eval_default(AugmentSpec::kind_from_name(name)));
        }
      } else {
        specs = AugmentSpec::eval_battery();
      }
      for (const auto& [key, value] : kv) {
        if (key == "edits") continue;
        const size_t dot = key.find('.');
        if (dot == std::string::npos) throw ConfigError("[augment] unknown key " + key);
        const std::string edit = key.substr(0, dot);
        const std::string param = key.substr(dot + 1);
        const EditKind kind = AugmentSpec::kind_from_name(edit);
        bool applied = false;
        for (auto& spec : specs) {
          if (spec.kind != kind) continue;
          if (!spec.params.count(param)) {
            throw ConfigError("[augment] " + key + ": unknown parameter");
          }
          spec.params[param] = to_double(section, key, value);
          applied = true;
        }
        if (!applied) throw ConfigError("[augment] " + key + ": edit not in battery");
      }
      cfg.eval_augments = std::move(specs);
    } else if (section == "eval") {
      for (const auto& [key, value] : kv) {
        if (key == "clip_count") cfg.eval.clip_count = static_cast<int>(to_int(section, key, value));
        else if (key == "clip_seconds") cfg.eval.clip_seconds = to_double(section, key, value);
        else if (key == "loc_clip_seconds") cfg.eval.loc_clip_seconds = to_double(section, key, value);
        else if (key == "loc_clip_count") cfg.eval.loc_clip_count = static_cast<int>(to_int(section, key, value));
        else if (key == "loc_durations") cfg.eval.loc_durations = to_doubles(section, key, value);
        else if (key == "attribution_sizes") cfg.eval.attribution_sizes = to_ints(section, key, value);
        else if (key == "attribution_clip_count") cfg.eval.attribution_clip_count = static_cast<int>(to_int(section, key, value));
        else if (key == "detect_threshold") cfg.eval.detect_threshold = to_double(section, key, value);
        else if (key == "attribution_fpr") cfg.eval.attribution_fpr = to_double(section, key, value);
        else if (key == "runtime_clip_count") cfg.eval.runtime_clip_count = static_cast<int>(to_int(section, key, value));
        else if (key == "runtime_clip_seconds") cfg.eval.runtime_clip_seconds = to_double(section, key, value);
        else throw ConfigError("[eval] unknown key " + key);
      }
    } else if (section == "attack") {
      for (const auto& [key, value] : kv) {
        if (key == "alpha_grid") cfg.attack.alpha_grid = to_doubles(section, key, value);
        else if (key == "steps") cfg.attack.steps = static_cast<int>(to_int(section, key, value));
        else if (key == "learning_rate") cfg.attack.learning_rate = to_double(section, key, value);
        else if (key == "clip_count") cfg.attack.clip_count = static_cast<int>(to_int(section, key, value));
        else if (key == "clip_seconds") cfg.attack.clip_seconds = to_double(section, key, value);
        else throw ConfigError("[attack] unknown key " + key);
      }
    } else {
      throw ConfigError("unknown config section [" + section + "]");
    }
  }
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  return from_ini(IniFile::parse_file(path));
}

}  // namespace localmark

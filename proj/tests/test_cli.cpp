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

// End-to-end checks of the localmark binary: exit codes, file outputs,
// reproducibility and the published JSON schema.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "localmark/dataset.hpp"
#include "localmark/inference.hpp"
#include "localmark/models.hpp"
#include "test_support.hpp"

using namespace localmark;
using json = nlohmann::json;

namespace {

struct RunOutput {
  int exit_code = -1;
  std::string stdout_text;
};

RunOutput run(const std::string& args, const std::string& capture_file) {
  const std::string cmd = std::string(LOCALMARK_BIN) + " " + args + " > " + capture_file +
                          " 2>" + capture_file + ".err";
  const int status = std::system(cmd.c_str());
  RunOutput out;
  out.exit_code = WEXITSTATUS(status);
  std::ifstream in(capture_file);
  std::stringstream ss;
  ss << in.rdbuf();
  out.stdout_text = ss.str();
  return out;
}

// Minimal structural validator for the schema subset we publish: checks
// required keys and primitive types recursively.
bool validate_against_schema(const json& record, const json& schema) {
  if (schema.contains("required")) {
    for (const auto& key : schema["required"]) {
      if (!record.contains(key.get<std::string>())) return false;
    }
  }
  if (!schema.contains("properties")) return true;
  for (const auto& [key, prop] : schema["properties"].items()) {
    if (!record.contains(key)) continue;
    const auto& value = record[key];
    std::vector<std::string> allowed;
    if (prop.contains("type")) {
      if (prop["type"].is_array()) {
        for (const auto& t : prop["type"]) allowed.push_back(t.get<std::string>());
      } else {
        allowed.push_back(prop["type"].get<std::string>());
      }
    }
    if (allowed.empty()) continue;
    auto matches = [&](const std::string& t) {
      if (t == "string") return value.is_string();
      if (t == "number") return value.is_number();
      if (t == "boolean") return value.is_boolean();
      if (t == "array") return value.is_array();
      if (t == "null") return value.is_null();
      return false;
    };
    bool ok = false;
    for (const auto& t : allowed) ok = ok || matches(t);
    if (!ok) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("cli: usage and error exit codes") {
  test::TempDir dir("cli_usage");
  const std::string cap = dir.path() + "/out.txt";
  CHECK(run("definitely-not-a-command", cap).exit_code == 2);
  CHECK(run("embed --in /nonexistent --out-dir " + dir.path() +
                " --checkpoint /nonexistent.ckpt",
            cap)
            .exit_code == 2);
  // detect on an empty directory is a usage error
  std::filesystem::create_directories(dir.path() + "/empty");
  ParameterStore det = init_detector(ModelConfig::small(), 1);
  save_checkpoint(det, dir.path() + "/det.ckpt");
  CHECK(run("detect --checkpoint " + dir.path() + "/det.ckpt --in " + dir.path() + "/empty",
            cap)
            .exit_code == 2);
  // missing checkpoint: exit 2 and no outputs
  CHECK(run("detect --checkpoint " + dir.path() + "/missing.ckpt --in " + dir.path(), cap)
            .exit_code == 2);
}

TEST_CASE("cli: fpr values and grid") {
  test::TempDir dir("cli_fpr");
  const std::string cap = dir.path() + "/out.txt";
  const RunOutput out = run("fpr --k 16 --tau 12", cap);
  CHECK(out.exit_code == 0);
  CHECK(out.stdout_text.substr(0, 8) == "0.038406");

  const RunOutput grid =
      run("fpr --k 8 --tau-grid --trials 2000 --out " + dir.path() + "/grid.csv", cap);
  CHECK(grid.exit_code == 0);
  std::ifstream csv(dir.path() + "/grid.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "tau,theoretical,empirical,stderr");
  int rows = 0;
  std::string line;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 9);  // tau 0..8
}

TEST_CASE("cli: embed then detect round trip with schema-valid records") {
  test::TempDir dir("cli_embed");
  const std::string cap = dir.path() + "/out.txt";

  // inputs
  std::filesystem::create_directories(dir.path() + "/in");
  Rng rng(3);
  for (int i = 0; i < 2; ++i) {
    save_wav(synth_speech(rng, 1.0), dir.path() + "/in/c" + std::to_string(i) + ".wav",
             WavEncoding::kFloat32);
  }
  const ParameterStore gen = init_generator(ModelConfig::small(), 2);
  const ParameterStore det = init_detector(ModelConfig::small(), 2);
  save_checkpoint(gen, dir.path() + "/gen.ckpt");
  save_checkpoint(det, dir.path() + "/det.ckpt");

  const RunOutput emb = run("embed --checkpoint " + dir.path() + "/gen.ckpt --in " +
                                dir.path() + "/in --out-dir " + dir.path() +
                                "/marked --message 00ff",
                            cap);
  CHECK(emb.exit_code == 0);
  CHECK(std::filesystem::exists(dir.path() + "/marked/c0.wm.wav"));
  CHECK(std::filesystem::exists(dir.path() + "/marked/manifest.txt"));
  {
    std::ifstream manifest(dir.path() + "/marked/manifest.txt");
    std::string header, line;
    std::getline(manifest, header);
    CHECK(header.rfind("# localmark-embed-manifest", 0) == 0);
    std::getline(manifest, line);
    CHECK(line.find("00ff") != std::string::npos);
  }
  // inputs untouched
  {
    const AudioClip original = load_wav(dir.path() + "/in/c0.wav");
    Rng rng_check(3);
    const AudioClip regenerated = synth_speech(rng_check, 1.0);
    CHECK(original.samples == regenerated.samples);
  }

  const RunOutput detres = run("localize --checkpoint " + dir.path() + "/det.ckpt --in " +
                                   dir.path() + "/marked/c0.wm.wav --out " + dir.path() +
                                   "/res.jsonl",
                               cap);
  CHECK(detres.exit_code == 0);

  // every record validates against the published schema
  std::ifstream schema_file(std::string(LOCALMARK_SRC_DIR) +
                            "/docs/schemas/detection_record.schema.json");
  REQUIRE(schema_file.good());
  json schema;
  schema_file >> schema;
  std::ifstream records(dir.path() + "/res.jsonl");
  std::string line;
  int count = 0;
  while (std::getline(records, line)) {
    const json rec = json::parse(line);
    CHECK(validate_against_schema(rec, schema));
    ++count;
  }
  CHECK(count == 1);
}

TEST_CASE("cli: train --steps 0 writes an init checkpoint and exits 0") {
  test::TempDir dir("cli_train0");
  const std::string cap = dir.path() + "/out.txt";
  std::filesystem::create_directories(dir.path() + "/data");
  Rng rng(4);
  for (int i = 0; i < 2; ++i) {
    save_wav(synth_speech(rng, 1.1), dir.path() + "/data/c" + std::to_string(i) + ".wav",
             WavEncoding::kFloat32);
  }
  const RunOutput out = run("train --data " + dir.path() + "/data --out " + dir.path() +
                                "/run --steps 0 --preset small",
                            cap);
  CHECK(out.exit_code == 0);
  CHECK(std::filesystem::exists(dir.path() + "/run/generator.ckpt"));
  const ParameterStore gen = load_checkpoint(dir.path() + "/run/generator.ckpt");
  CHECK(gen.step == 0);
}

TEST_CASE("cli: augment-eval writes edited copies plus a manifest") {
  test::TempDir dir("cli_aug");
  const std::string cap = dir.path() + "/out.txt";
  std::filesystem::create_directories(dir.path() + "/in");
  Rng rng(5);
  save_wav(synth_speech(rng, 1.0), dir.path() + "/in/x.wav", WavEncoding::kFloat32);

  const RunOutput out =
      run("augment-eval --in " + dir.path() + "/in --out-dir " + dir.path() + "/edited", cap);
  CHECK(out.exit_code == 0);
  int wavs = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path() + "/edited")) {
    if (e.path().extension() == ".wav") ++wavs;
  }
  CHECK(wavs == 13);  // full eval battery
  CHECK(std::filesystem::exists(dir.path() + "/edited/x.lowpass.wav"));
  CHECK(std::filesystem::exists(dir.path() + "/edited/manifest.txt"));
}

TEST_CASE("cli: attribute emits model ids against a registry") {
  test::TempDir dir("cli_attr");
  const std::string cap = dir.path() + "/out.txt";
  const ParameterStore det = init_detector(ModelConfig::small(), 6);
  save_checkpoint(det, dir.path() + "/det.ckpt");
  AttributionRegistry reg;
  Rng rng(7);
  for (int i = 0; i < 5; ++i) reg.add("m" + std::to_string(i), Message::random(16, rng));
  reg.save(dir.path() + "/reg.txt");
  save_wav(synth_speech(rng, 1.0), dir.path() + "/x.wav", WavEncoding::kFloat32);

  const RunOutput out = run("attribute --checkpoint " + dir.path() + "/det.ckpt --in " +
                                dir.path() + "/x.wav --registry " + dir.path() + "/reg.txt",
                            cap);
  CHECK(out.exit_code == 0);
  const json rec = json::parse(out.stdout_text.substr(0, out.stdout_text.find('\n')));
  CHECK(rec.contains("model_id"));
  CHECK(rec.contains("distance"));

  // registry required
  CHECK(run("attribute --checkpoint " + dir.path() + "/det.ckpt --in " + dir.path() + "/x.wav",
            cap)
            .exit_code == 2);
}

TEST_CASE("cli: seeded commands are reproducible byte for byte") {
  test::TempDir dir("cli_repro");
  const std::string cap = dir.path() + "/out.txt";
  std::filesystem::create_directories(dir.path() + "/in");
  Rng rng(8);
  save_wav(synth_speech(rng, 1.0), dir.path() + "/in/x.wav", WavEncoding::kFloat32);

  CHECK(run("augment-eval --in " + dir.path() + "/in --out-dir " + dir.path() +
                "/a --seed 5",
            cap)
            .exit_code == 0);
  CHECK(run("augment-eval --in " + dir.path() + "/in --out-dir " + dir.path() +
                "/b --seed 5",
            cap)
            .exit_code == 0);
  int compared = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path() + "/a")) {
    if (e.path().extension() != ".wav") continue;  // manifests carry their own paths
    std::ifstream fa(e.path(), std::ios::binary);
    std::ifstream fb(dir.path() + "/b/" + e.path().filename().string(), std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    ++compared;
  }
  CHECK(compared == 13);
}

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

// Synthetic speech dataset helper for demos, benchmarks and tests.

#include <cstdio>

#include <CLI11.hpp>

#include "localmark/dataset.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mkspeech: write a folder of synthetic speech clips"};
  std::string out_dir;
  int count = 60;
  double seconds = 2.0;
  uint64_t seed = 0;
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--count", count, "number of clips");
  app.add_option("--seconds", seconds, "clip duration in seconds");
  app.add_option("--seed", seed, "random seed");
  CLI11_PARSE(app, argc, argv);

  try {
    localmark::write_synth_dataset(out_dir, count, seconds, seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mkspeech: %s\n", e.what());
    return 1;
  }
  std::printf("wrote %d clips of %.2f s to %s\n", count, seconds, out_dir.c_str());
  return 0;
}

/* Copyright 2026 The ragaxai Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ragaxai/manifest.hpp"
#include "ragaxai/model.hpp"
#include "ragaxai/slime.hpp"
#include "ragaxai/synth.hpp"

namespace ragaxai::cli {

// Everything a run depends on. Loaded from an optional JSON file, then
// overridden by command-line flags; embedded in every artifact.
struct RunConfig {
  uint64_t seed = 0;
  int jobs = 0;  // 0: hardware concurrency
  std::filesystem::path out_dir = ".";

  ModelConfig model = make_config(Variant::kCN2_LSTM_T);
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;
  std::array<double, 3> split_ratios = kDefaultSplitRatios;

  int slime_samples = 150;
  double slime_ridge = 1e-3;
  std::optional<double> slime_sigma;
  SlimeTarget slime_mode = SlimeTarget::kProbability;

  SyntheticCorpusOptions corpus;
  int clips_per_class = 4;  // annotated 30 s clips written by synth
  // Noise of a class's clips rises linearly from corpus.synth.noise_dbfs to
  // this level, so the annotated set spans easy and hard examples.
  double clip_noise_max_dbfs = -10.0;

  nlohmann::json to_json() const;
  int worker_count() const;
};

// Merges a JSON object onto `base`; unknown keys are rejected.
RunConfig merge_run_config(RunConfig base, const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// "# ragaxai seed=<n> config=<compact json>" line heading text artifacts.
std::string provenance_line(const RunConfig& config);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Per-item exceptions are
// captured and returned as messages (empty string: success).
std::vector<std::string> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct ExtractArgs {
  std::filesystem::path manifest;
};
// One "<song_id>_<idx>.chrm" raw chromagram per chunk plus summary.json.
int cmd_extract(const RunConfig& config, const ExtractArgs& args, std::ostream& log);

struct TrainArgs {
  std::filesystem::path features;  // extract output directory
};
int cmd_train(const RunConfig& config, const TrainArgs& args, std::ostream& log);

struct PredictArgs {
  std::filesystem::path checkpoint;
  std::vector<std::filesystem::path> features;  // chunks of one song
  std::optional<int> tonic;
};
int cmd_predict(const RunConfig& config, const PredictArgs& args, std::ostream& log);

struct ExplainArgs {
  std::filesystem::path checkpoint;
  std::vector<std::filesystem::path> features;
  std::optional<int> tonic;
  std::string method = "gradcampp";  // or "slime"
};
int cmd_explain(const RunConfig& config, const ExplainArgs& args, std::ostream& log);

struct EvalSaliencyArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path clips;  // clips.json written by synth
  std::filesystem::path annotations;
  std::string method = "both";  // gc, sl or both
};
int cmd_eval_saliency(const RunConfig& config, const EvalSaliencyArgs& args, std::ostream& log);

// Songs (WAV + manifest.json) and annotated clips (WAV + clips.json +
// annotations.json) of a synthetic corpus.
int cmd_synth(const RunConfig& config, std::ostream& log);

// Raw chromagram plus the tonic recorded for it by extract (summary.json next
// to the file) unless one is given.
struct ChunkFeatures {
  Matrix chroma;
  int tonic = 0;
};
ChunkFeatures read_chunk_features(const std::filesystem::path& path, std::optional<int> tonic);

// Grayscale PGM: chroma (pitch class 11 on top) above a band of per-frame
// saliency, both scaled to [0, 255].
std::string saliency_overlay_pgm(const Matrix& chroma, const std::vector<double>& frame_scores);

}  // namespace ragaxai::cli

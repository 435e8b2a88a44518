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
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ragaxai/cli.hpp"

namespace cli = ragaxai::cli;

int main(int argc, char** argv) {
  CLI::App app{"Raga identification with explainable CNN-LSTM models"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> jobs;
  std::string out_dir = ".";
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Global seed");
  app.add_option("--jobs", jobs, "Worker threads (default: CPU count)");
  app.add_option("--out-dir", out_dir, "Output directory");

  cli::ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract", "Chromagram feature cache from a dataset manifest");
  extract_cmd->add_option("--manifest", extract.manifest, "Dataset manifest JSON")->required()->check(CLI::ExistingFile);

  cli::TrainArgs train;
  std::optional<std::string> variant;
  std::optional<int> epochs, batch_size, patience;
  std::optional<double> lr;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier on extracted features");
  train_cmd->add_option("--features", train.features, "Directory written by extract")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--variant", variant, "CN1+T, CN1+LSTM+T, CN2+LSTM or CN2+LSTM+T");
  train_cmd->add_option("--epochs", epochs, "Maximum epochs");
  train_cmd->add_option("--batch-size", batch_size, "Batch size");
  train_cmd->add_option("--lr", lr, "Learning rate");
  train_cmd->add_option("--patience", patience, "Early-stopping patience");

  cli::PredictArgs predict;
  std::optional<int> predict_tonic;
  auto* predict_cmd = app.add_subcommand("predict", "Classify the chunks of one song");
  predict_cmd->add_option("--checkpoint", predict.checkpoint)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--features", predict.features, "Chunk feature files")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--tonic", predict_tonic, "Tonic pitch class (default: from summary.json)");

  cli::ExplainArgs explain;
  std::optional<int> explain_tonic;
  auto* explain_cmd = app.add_subcommand("explain", "Time saliency of a prediction");
  explain_cmd->add_option("--checkpoint", explain.checkpoint)->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--features", explain.features, "Chunk feature files")->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--tonic", explain_tonic, "Tonic pitch class (default: from summary.json)");
  explain_cmd->add_option("--method", explain.method, "gradcampp or slime")->check(CLI::IsMember({"gradcampp", "slime"}));

  cli::EvalSaliencyArgs eval;
  auto* eval_cmd = app.add_subcommand("eval-saliency", "Precision@t of saliency against annotations");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--clips", eval.clips, "clips.json written by synth")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--annotations", eval.annotations)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--method", eval.method, "gc, sl or both")->check(CLI::IsMember({"gc", "sl", "both"}));

  std::optional<int> classes, songs_per_class, clips_per_class;
  std::optional<double> song_seconds, clip_noise_max;
  bool fixed_tonic = false;
  auto* synth_cmd = app.add_subcommand("synth", "Synthetic raga corpus with planted pakads");
  synth_cmd->add_option("--classes", classes);
  synth_cmd->add_option("--songs-per-class", songs_per_class);
  synth_cmd->add_option("--song-seconds", song_seconds);
  synth_cmd->add_option("--clips-per-class", clips_per_class);
  synth_cmd->add_option("--clip-noise-max-dbfs", clip_noise_max, "Noise of the hardest annotated clip");
  synth_cmd->add_flag("--fixed-tonic", fixed_tonic, "Every song in A");

  CLI11_PARSE(app, argc, argv);

  try {
    cli::RunConfig config;
    if (!config_path.empty()) config = cli::load_run_config(config_path);
    if (seed) config.seed = *seed;
    if (jobs) config.jobs = *jobs;
    config.out_dir = out_dir;
    if (variant) {
      const int n = config.model.num_classes;
      config.model = ragaxai::make_config(ragaxai::parse_variant(*variant), n);
    }
    if (epochs) config.max_epochs = *epochs;
    if (batch_size) config.batch_size = *batch_size;
    if (lr) config.learning_rate = *lr;
    if (patience) config.patience = *patience;
    if (classes) config.corpus.classes = *classes;
    if (songs_per_class) config.corpus.songs_per_class = *songs_per_class;
    if (song_seconds) config.corpus.song_seconds = *song_seconds;
    if (clips_per_class) config.clips_per_class = *clips_per_class;
    if (clip_noise_max) config.clip_noise_max_dbfs = *clip_noise_max;
    if (fixed_tonic) config.corpus.randomize_tonic = false;

    if (*extract_cmd) return cli::cmd_extract(config, extract, std::cerr);
    if (*train_cmd) return cli::cmd_train(config, train, std::cerr);
    if (*predict_cmd) {
      predict.tonic = predict_tonic;
      return cli::cmd_predict(config, predict, std::cerr);
    }
    if (*explain_cmd) {
      explain.tonic = explain_tonic;
      return cli::cmd_explain(config, explain, std::cerr);
    }
    if (*eval_cmd) return cli::cmd_eval_saliency(config, eval, std::cerr);
    if (*synth_cmd) return cli::cmd_synth(config, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "ragaxai: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

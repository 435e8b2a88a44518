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
#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ragaxai/cli.hpp"
#include "ragaxai/feature_cache.hpp"
#include "test_util.hpp"

namespace ragaxai::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::size_t count_ext(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

SongEntry song(const std::string& id, double seconds) {
  SongEntry s;
  s.song_id = id;
  s.raga_label = "Yaman";
  s.tonic_pitch_class = 2;
  s.music_segments = {{0.0, seconds}};
  return s;
}

TEST(Extract, ChunkCountsAndSummary) {
  testing::TempDir dir("extract");
  DatasetManifest m;
  m.songs = {song("long", 95.0), song("short", 60.0)};
  for (const auto& s : m.songs) {
    AudioClip clip = testing::sine(220.0, s.music_segments[0].end);
    write_wav(dir / (s.song_id + ".wav"), clip);
  }
  write_manifest(m, dir / "manifest.json");
  RunConfig cfg;
  cfg.out_dir = dir / "feat";
  cfg.jobs = 2;
  std::ostringstream log;
  EXPECT_EQ(cmd_extract(cfg, {dir / "manifest.json"}, log), 0);
  EXPECT_EQ(count_ext(cfg.out_dir, ".chrm"), 3u);
  EXPECT_TRUE(fs::exists(cfg.out_dir / "long_1.chrm"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "short_0.chrm"));
  const auto summary = read_json(cfg.out_dir / "summary.json");
  EXPECT_EQ(summary.at("chunk_count"), 3);
  EXPECT_TRUE(summary.at("failures").empty());
  EXPECT_EQ(read_feature_cache(cfg.out_dir / "long_0.chrm").rows(), 938u);
  const auto cf = read_chunk_features(cfg.out_dir / "short_0.chrm", std::nullopt);
  EXPECT_EQ(cf.tonic, 2);
  EXPECT_EQ(read_chunk_features(cfg.out_dir / "short_0.chrm", 5).tonic, 5);
}

TEST(Extract, EmptyManifest) {
  testing::TempDir dir("extract");
  write_manifest(DatasetManifest{}, dir / "manifest.json");
  RunConfig cfg;
  cfg.out_dir = dir / "feat";
  std::ostringstream log;
  EXPECT_EQ(cmd_extract(cfg, {dir / "manifest.json"}, log), 0);
  EXPECT_EQ(count_ext(cfg.out_dir, ".chrm"), 0u);
  EXPECT_EQ(read_json(cfg.out_dir / "summary.json").at("chunk_count"), 0);
}

TEST(Extract, UnreadableWavIsListed) {
  testing::TempDir dir("extract");
  DatasetManifest m;
  m.songs = {song("good", 60.0), song("broken", 60.0)};
  write_wav(dir / "good.wav", testing::sine(220.0, 60.0));
  std::ofstream(dir / "broken.wav") << "RIFF garbage";
  write_manifest(m, dir / "manifest.json");
  RunConfig cfg;
  cfg.out_dir = dir / "feat";
  std::ostringstream log;
  EXPECT_EQ(cmd_extract(cfg, {dir / "manifest.json"}, log), 1);
  const auto summary = read_json(cfg.out_dir / "summary.json");
  ASSERT_EQ(summary.at("failures").size(), 1u);
  EXPECT_EQ(summary.at("failures")[0].at("song_id"), "broken");
  EXPECT_TRUE(fs::exists(cfg.out_dir / "good_0.chrm"));
}

TEST(RunConfig, MergeAndReject) {
  RunConfig base;
  const auto merged = merge_run_config(base, json::parse(R"({"seed": 9, "train": {"batch_size": 4},
                                                              "model": {"variant": "CN1+T"}})"));
  EXPECT_EQ(merged.seed, 9u);
  EXPECT_EQ(merged.batch_size, 4);
  EXPECT_EQ(merged.model.variant, Variant::kCN1_T);
  EXPECT_THROW(merge_run_config(base, json::parse(R"({"sed": 1})")), Error);
  EXPECT_THROW(merge_run_config(base, json::parse(R"({"train": {"lr": 1}})")), Error);
  const std::string line = provenance_line(merged);
  EXPECT_EQ(line.rfind("# ragaxai seed=9 config=", 0), 0u);
}

TEST(ParallelFor, CollectsErrors) {
  std::vector<int> hit(20, 0);
  const auto errors = parallel_for(20, 4, [&](std::size_t i) {
    hit[i] = 1;
    if (i == 13) throw Error("boom");
  });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 20);
  EXPECT_EQ(errors[13], "boom");
  EXPECT_TRUE(errors[12].empty());
}

TEST(Overlay, PgmHeaderAndSize) {
  Matrix chroma(938, 12, 0.5f);
  const std::string pgm = saliency_overlay_pgm(chroma, std::vector<double>(938, 1.0));
  const std::string header = "P5\n938 18\n255\n";
  ASSERT_EQ(pgm.substr(0, header.size()), header);
  EXPECT_EQ(pgm.size(), header.size() + 938u * 18);
}

// Whole pipeline on a two-class toy corpus with a small model.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("pipeline");
    base_.seed = 4;
    base_.jobs = 2;
    base_.corpus.classes = 2;
    base_.corpus.songs_per_class = 3;
    base_.corpus.song_seconds = 65.0;
    base_.clips_per_class = 2;
    base_.model = make_config(Variant::kCN1_LSTM_T, 12);
    base_.model.conv_channels = {4, 8};
    base_.model.lstm_hidden = 8;
    base_.max_epochs = 2;
    base_.batch_size = 2;
    base_.slime_samples = 12;
    std::ostringstream log;
    RunConfig c = base_;
    c.out_dir = *dir_ / "corpus";
    synth_rc_ = cmd_synth(c, log);
    c.out_dir = *dir_ / "feat";
    extract_rc_ = cmd_extract(c, {*dir_ / "corpus" / "songs" / "manifest.json"}, log);
    c.out_dir = *dir_ / "model";
    train_rc_ = cmd_train(c, {*dir_ / "feat"}, log);
  }
  static void TearDownTestSuite() { delete dir_; }

  static testing::TempDir* dir_;
  static RunConfig base_;
  static int synth_rc_, extract_rc_, train_rc_;
};

testing::TempDir* Pipeline::dir_ = nullptr;
RunConfig Pipeline::base_;
int Pipeline::synth_rc_ = -1;
int Pipeline::extract_rc_ = -1;
int Pipeline::train_rc_ = -1;

TEST_F(Pipeline, SynthExtractTrainSucceed) {
  EXPECT_EQ(synth_rc_, 0);
  EXPECT_EQ(extract_rc_, 0);
  EXPECT_EQ(train_rc_, 0);
  EXPECT_EQ(count_ext(*dir_ / "corpus" / "songs", ".wav"), 6u);
  EXPECT_EQ(count_ext(*dir_ / "corpus" / "clips", ".wav"), 4u);
  EXPECT_EQ(count_ext(*dir_ / "feat", ".chrm"), 6u);
  const fs::path m = *dir_ / "model";
  for (const char* f : {"model.rgmd", "history.csv", "report_chunk.txt", "report_song.csv", "confusion_chunk.csv",
                        "split.json", "train_summary.json"}) {
    EXPECT_TRUE(fs::exists(m / f)) << f;
  }
  EXPECT_EQ(slurp(m / "history.csv").rfind("# ragaxai seed=4", 0), 0u);
}

TEST_F(Pipeline, ClipNoiseRampsWithinEachClass) {
  const auto clips = read_json(*dir_ / "corpus" / "clips" / "clips.json").at("clips");
  ASSERT_EQ(clips.size(), 4u);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const double expected = i % 2 == 0 ? base_.corpus.synth.noise_dbfs : base_.clip_noise_max_dbfs;
    EXPECT_DOUBLE_EQ(clips[i].at("noise_dbfs").get<double>(), expected) << i;
  }
}

TEST_F(Pipeline, TrainingIsDeterministic) {
  RunConfig c = base_;
  c.out_dir = *dir_ / "model2";
  std::ostringstream log;
  ASSERT_EQ(cmd_train(c, {*dir_ / "feat"}, log), 0);
  EXPECT_EQ(slurp(*dir_ / "model" / "history.csv"), slurp(c.out_dir / "history.csv"));
  EXPECT_EQ(slurp(*dir_ / "model" / "model.rgmd"), slurp(c.out_dir / "model.rgmd"));
}

TEST_F(Pipeline, PredictAndExplain) {
  RunConfig c = base_;
  c.out_dir = *dir_ / "pred";
  std::ostringstream log;
  const fs::path chunk = *dir_ / "feat" / "Bhairavi_000_0.chrm";
  ASSERT_EQ(cmd_predict(c, {*dir_ / "model" / "model.rgmd", {chunk}, std::nullopt}, log), 0);
  const auto pred = read_json(c.out_dir / "prediction.json");
  EXPECT_TRUE(pred.dump().find("Bhairavi") != std::string::npos || pred.dump().find("Bihag") != std::string::npos);

  for (const char* method : {"gradcampp", "slime"}) {
    c.out_dir = *dir_ / (std::string("explain_") + method);
    ASSERT_EQ(cmd_explain(c, {*dir_ / "model" / "model.rgmd", {chunk}, std::nullopt, method}, log), 0);
    const fs::path out = c.out_dir / "Bhairavi_000_0";
    const auto p = read_json(out / "prediction.json");
    EXPECT_GE(p.at("probability").get<double>(), 0.0);
    EXPECT_LE(p.at("probability").get<double>(), 1.0);
    EXPECT_TRUE(fs::exists(out / "frames.csv"));
    EXPECT_TRUE(fs::exists(out / "overlay.pgm"));
    std::istringstream seconds(slurp(out / "seconds.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(seconds, line)) rows += !line.empty() && line[0] != '#';
    EXPECT_EQ(rows, 31);
  }
  EXPECT_THROW(cmd_explain(c, {*dir_ / "model" / "model.rgmd", {chunk}, std::nullopt, "lime"}, log), Error);
}

TEST_F(Pipeline, SlimeOnSilentInputIsFlat) {
  testing::TempDir tmp("silent");
  write_feature_cache(Matrix(938, 12), tmp / "zero.chrm");
  RunConfig c = base_;
  c.out_dir = tmp / "out";
  std::ostringstream log;
  ASSERT_EQ(cmd_explain(c, {*dir_ / "model" / "model.rgmd", {tmp / "zero.chrm"}, 0, "slime"}, log), 0);
  std::istringstream coef(slurp(c.out_dir / "zero" / "coefficients.csv"));
  std::string line;
  while (std::getline(coef, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 's') continue;
    EXPECT_LE(std::abs(std::stod(line.substr(line.find(',') + 1))), 1e-6) << line;
  }
}

TEST_F(Pipeline, EvalSaliencyIsReproducible) {
  const fs::path clips = *dir_ / "corpus" / "clips";
  RunConfig c = base_;
  std::ostringstream log;
  std::string first;
  for (const char* run : {"eval1", "eval2"}) {
    c.out_dir = *dir_ / run;
    ASSERT_EQ(cmd_eval_saliency(c, {*dir_ / "model" / "model.rgmd", clips / "clips.json", clips / "annotations.json",
                                    "both"},
                                log),
              0);
    const std::string report = slurp(c.out_dir / "saliency_report.csv") + slurp(c.out_dir / "precision_accuracy_bins.csv") +
                               slurp(c.out_dir / "saliency_records.csv");
    if (first.empty()) {
      first = report;
    } else {
      EXPECT_EQ(report, first);
    }
  }
  std::istringstream table(slurp(*dir_ / "eval1" / "saliency_report.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(table, line)) rows += !line.empty() && std::isdigit(static_cast<unsigned char>(line[0]));
  EXPECT_EQ(rows, 10);
}

TEST_F(Pipeline, EvalSaliencyWithoutAnnotationsFails) {
  testing::TempDir tmp("noann");
  write_annotations({}, tmp / "empty.json");
  RunConfig c = base_;
  c.out_dir = tmp / "out";
  std::ostringstream log;
  const fs::path clips = *dir_ / "corpus" / "clips";
  EXPECT_EQ(cmd_eval_saliency(c, {*dir_ / "model" / "model.rgmd", clips / "clips.json", tmp / "empty.json", "both"}, log),
            1);
  EXPECT_NE(log.str().find("no annotations"), std::string::npos);
}

}  // namespace
}  // namespace ragaxai::cli

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

#include "ragaxai/manifest.hpp"
#include "test_util.hpp"

namespace ragaxai {
namespace {

DatasetManifest make_manifest(int classes, int songs) {
  DatasetManifest m;
  for (int c = 0; c < classes; ++c) {
    for (int s = 0; s < songs; ++s) {
      SongEntry e;
      e.song_id = "r" + std::to_string(c) + "_s" + std::to_string(s);
      e.raga_label = "raga" + std::to_string(c);
      e.tonic_pitch_class = (c + s) % 12;
      e.music_segments = {{0.0, 95.0}};
      m.songs.push_back(e);
    }
  }
  return m;
}

TEST(Split, EveryClassHasValAndTest) {
  const auto m = make_manifest(12, 10);
  const auto a = split_dataset(m, kDefaultSplitRatios, 7);
  ASSERT_EQ(a.assignment.size(), 120u);
  std::map<std::string, std::array<int, 3>> counts;
  for (const auto& song : m.songs) counts[song.raga_label][static_cast<int>(a.assignment.at(song.song_id))]++;
  for (const auto& [label, c] : counts) {
    EXPECT_GE(c[1], 1) << label;
    EXPECT_GE(c[2], 1) << label;
    EXPECT_GE(c[0], 1) << label;
  }
  EXPECT_EQ(split_dataset(m, kDefaultSplitRatios, 7).assignment, a.assignment);
}

TEST(Split, TwentySongsPerClass) {
  const auto a = split_dataset(make_manifest(12, 20), kDefaultSplitRatios, 3);
  EXPECT_EQ(a.songs_in(Split::kTest).size(), 36u);
  EXPECT_EQ(a.songs_in(Split::kVal).size(), 12u);
  EXPECT_EQ(a.songs_in(Split::kTrain).size(), 192u);
}

TEST(Split, TooFewSongsNamesTheClass) {
  auto m = make_manifest(2, 3);
  m.songs.pop_back();
  try {
    split_dataset(m);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("raga1"), std::string::npos);
  }
}

TEST(Folds, BalancedAndRelaxed) {
  std::vector<std::string> labels;
  for (int c = 0; c < 3; ++c) {
    for (int s = 0; s < 2; ++s) labels.push_back("c" + std::to_string(c));
  }
  auto f = assign_folds(labels, 2, 1);
  EXPECT_FALSE(f.relaxed);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NE(f.fold_of_song[static_cast<std::size_t>(2 * c)], f.fold_of_song[static_cast<std::size_t>(2 * c + 1)]);
  }
  f = assign_folds(labels, 6, 1);
  EXPECT_TRUE(f.relaxed);
  EXPECT_FALSE(f.warnings.empty());
  for (int fold : f.fold_of_song) {
    EXPECT_GE(fold, 0);
    EXPECT_LT(fold, 6);
  }
}

TEST(Manifest, RoundTrip) {
  testing::TempDir dir("manifest");
  auto m = make_manifest(2, 3);
  m.songs[0].music_segments = {{0.0, 40.0}, {50.0, 80.0}};
  write_manifest(m, dir / "m.json");
  const auto back = read_manifest(dir / "m.json");
  ASSERT_EQ(back.songs.size(), 6u);
  EXPECT_EQ(back.songs[0].music_segments, m.songs[0].music_segments);
  EXPECT_EQ(back.songs[4].tonic_pitch_class, m.songs[4].tonic_pitch_class);
  EXPECT_EQ(back.labels(), (std::vector<std::string>{"raga0", "raga1"}));
  EXPECT_EQ(resolve_audio_path(back.songs[0], dir / "m.json"), dir / "r0_s0.wav");
}

TEST(Manifest, RejectsBadInput) {
  testing::TempDir dir("manifest");
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(read_manifest(dir / "bad.json"), FormatError);
  auto m = make_manifest(1, 2);
  m.songs[1].song_id = m.songs[0].song_id;
  EXPECT_THROW(m.validate(), Error);
  m = make_manifest(1, 1);
  m.songs[0].tonic_pitch_class = 12;
  EXPECT_THROW(m.validate(), Error);
}

TEST(Annotations, RoundTripAndValidation) {
  testing::TempDir dir("ann");
  std::vector<ExpertAnnotation> anns{{"a", {{1.0, 2.5}, {10.0, 12.0}}}, {"b", {}}};
  write_annotations(anns, dir / "a.json");
  const auto back = read_annotations(dir / "a.json");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].intervals, anns[0].intervals);
  EXPECT_DOUBLE_EQ(back[0].total_duration(), 3.5);
  ExpertAnnotation overlap{"c", {{1.0, 3.0}, {2.0, 4.0}}};
  EXPECT_THROW(overlap.validate(), Error);
  ExpertAnnotation outside{"d", {{25.0, 31.0}}};
  EXPECT_THROW(outside.validate(), Error);
}

}  // namespace
}  // namespace ragaxai

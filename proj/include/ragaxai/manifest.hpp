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
#include <map>
#include <string>
#include <vector>

#include "ragaxai/audio.hpp"

namespace ragaxai {

struct SongEntry {
  std::string song_id;
  std::string raga_label;
  int tonic_pitch_class = 0;  // 0 = C
  std::string artist;
  std::vector<Interval> music_segments;
  // Relative paths resolve against the manifest's directory. Empty means
  // "<song_id>.wav".
  std::string audio_path;
};

struct DatasetManifest {
  std::vector<SongEntry> songs;

  // Sorted, de-duplicated raga labels.
  std::vector<std::string> labels() const;
  void validate() const;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
std::filesystem::path resolve_audio_path(const SongEntry& song,
                                         const std::filesystem::path& manifest_path);

enum class Split { kTrain, kVal, kTest };
const char* to_string(Split split);

struct SplitAssignment {
  std::map<std::string, Split> assignment;
  uint64_t seed = 0;

  std::vector<std::string> songs_in(Split split) const;
};

inline constexpr std::array<double, 3> kDefaultSplitRatios{0.79, 0.15, 0.06};

// Song-level stratified split; ratios are (train, test, val). Per class, test
// and val each get max(1, round(n * ratio)) songs and train gets the rest. Every class needs at
// least three songs.
SplitAssignment split_dataset(const DatasetManifest& manifest,
                              std::array<double, 3> ratios = kDefaultSplitRatios,
                              uint64_t seed = 0);

struct FoldAssignment {
  std::vector<int> fold_of_song;  // parallel to the input labels
  int folds = 0;
  bool relaxed = false;  // some class had fewer songs than folds
  std::vector<std::string> warnings;
};

// Stratified song-level k-fold assignment: songs of each class are shuffled and
// dealt round-robin, with the dealing offset rotating between classes.
FoldAssignment assign_folds(const std::vector<std::string>& song_labels, int folds,
                            uint64_t seed);

struct ExpertAnnotation {
  std::string clip_id;
  std::vector<Interval> intervals;

  double total_duration() const;
  // Throws unless intervals are ordered, non-overlapping and inside [0, clip_seconds].
  void validate(double clip_seconds = kClipSeconds) const;
};

std::vector<ExpertAnnotation> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::vector<ExpertAnnotation>& annotations,
                       const std::filesystem::path& path);

// Write to a sibling temp file, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace ragaxai

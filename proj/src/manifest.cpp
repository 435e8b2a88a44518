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
#include "ragaxai/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ragaxai {

using nlohmann::json;

namespace {

json intervals_to_json(const std::vector<Interval>& intervals) {
  json out = json::array();
  for (const Interval& iv : intervals) out.push_back({iv.start, iv.end});
  return out;
}

std::vector<Interval> intervals_from_json(const json& j) {
  std::vector<Interval> out;
  for (const json& pair : j) {
    if (!pair.is_array() || pair.size() != 2) throw FormatError("interval must be [start, end]");
    out.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void check_intervals(const std::vector<Interval>& intervals, double upper, const std::string& who) {
  double previous = -1.0;
  for (const Interval& iv : intervals) {
    if (!(iv.end > iv.start)) throw Error(who + ": interval end must exceed start");
    if (iv.start < 0 || iv.end > upper + 1e-9) throw Error(who + ": interval out of range");
    if (iv.start < previous) throw Error(who + ": intervals must be ordered and non-overlapping");
    previous = iv.end;
  }
}

}  // namespace

std::vector<std::string> DatasetManifest::labels() const {
  std::set<std::string> unique;
  for (const SongEntry& s : songs) unique.insert(s.raga_label);
  return {unique.begin(), unique.end()};
}

void DatasetManifest::validate() const {
  std::set<std::string> ids;
  for (const SongEntry& s : songs) {
    if (s.song_id.empty()) throw Error("manifest: empty song_id");
    if (!ids.insert(s.song_id).second) throw Error("manifest: duplicate song_id " + s.song_id);
    if (s.raga_label.empty()) throw Error("manifest: empty raga_label for " + s.song_id);
    if (s.tonic_pitch_class < 0 || s.tonic_pitch_class > 11) {
      throw Error("manifest: tonic_pitch_class outside [0, 11] for " + s.song_id);
    }
    check_intervals(s.music_segments, 1e12, "manifest song " + s.song_id);
  }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const json j = read_json(path);
  DatasetManifest manifest;
  try {
    for (const json& s : j.at("songs")) {
      SongEntry song;
      song.song_id = s.at("song_id").get<std::string>();
      song.raga_label = s.at("raga_label").get<std::string>();
      song.tonic_pitch_class = s.at("tonic_pitch_class").get<int>();
      song.artist = s.value("artist", "");
      song.music_segments = intervals_from_json(s.at("music_segments"));
      song.audio_path = s.value("audio_path", "");
      manifest.songs.push_back(std::move(song));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + path.string() + ": " + e.what());
  }
  manifest.validate();
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  json songs = json::array();
  for (const SongEntry& s : manifest.songs) {
    json entry = {{"song_id", s.song_id},
                  {"raga_label", s.raga_label},
                  {"tonic_pitch_class", s.tonic_pitch_class},
                  {"artist", s.artist},
                  {"music_segments", intervals_to_json(s.music_segments)}};
    if (!s.audio_path.empty()) entry["audio_path"] = s.audio_path;
    songs.push_back(std::move(entry));
  }
  write_file_atomic(path, json{{"songs", songs}}.dump(2) + "\n");
}

std::filesystem::path resolve_audio_path(const SongEntry& song,
                                         const std::filesystem::path& manifest_path) {
  std::filesystem::path p = song.audio_path.empty() ? song.song_id + ".wav" : song.audio_path;
  if (p.is_relative()) p = manifest_path.parent_path() / p;
  return p;
}

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::vector<std::string> SplitAssignment::songs_in(Split split) const {
  std::vector<std::string> out;
  for (const auto& [id, s] : assignment) {
    if (s == split) out.push_back(id);
  }
  return out;
}

SplitAssignment split_dataset(const DatasetManifest& manifest, std::array<double, 3> ratios,
                              uint64_t seed) {
  for (double r : ratios) {
    if (r < 0) throw Error("split_dataset: ratios must be non-negative");
  }
  std::map<std::string, std::vector<std::string>> by_class;
  for (const SongEntry& s : manifest.songs) by_class[s.raga_label].push_back(s.song_id);

  SplitAssignment out;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& [label, ids] : by_class) {
    const auto n = static_cast<int>(ids.size());
    if (n < 3) {
      throw Error("split_dataset: class '" + label + "' has " + std::to_string(n) +
                  " song(s); at least 3 are needed for one train, val and test song");
    }
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    const int n_test = std::max(1, static_cast<int>(std::lround(n * ratios[1])));
    const int n_val = std::max(1, static_cast<int>(std::lround(n * ratios[2])));
    const int n_train = n - n_test - n_val;
    if (n_train < 1) throw Error("split_dataset: class '" + label + "' leaves no training song");
    for (int i = 0; i < n; ++i) {
      const Split s = i < n_test ? Split::kTest : (i < n_test + n_val ? Split::kVal : Split::kTrain);
      out.assignment[ids[static_cast<std::size_t>(i)]] = s;
    }
  }
  return out;
}

FoldAssignment assign_folds(const std::vector<std::string>& song_labels, int folds, uint64_t seed) {
  if (folds < 2) throw Error("assign_folds: need at least 2 folds");
  FoldAssignment out;
  out.folds = folds;
  out.fold_of_song.assign(song_labels.size(), -1);
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < song_labels.size(); ++i) by_class[song_labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  int offset = 0;
  for (auto& [label, idx] : by_class) {
    if (static_cast<int>(idx.size()) < folds) {
      out.relaxed = true;
      out.warnings.push_back("class '" + label + "' has " + std::to_string(idx.size()) +
                             " song(s) for " + std::to_string(folds) +
                             " folds; some folds will not contain it");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.fold_of_song[idx[k]] = static_cast<int>((k + static_cast<std::size_t>(offset)) % folds);
    }
    offset = (offset + static_cast<int>(idx.size())) % folds;
  }
  return out;
}

double ExpertAnnotation::total_duration() const {
  double total = 0.0;
  for (const Interval& iv : intervals) total += iv.length();
  return total;
}

void ExpertAnnotation::validate(double clip_seconds) const {
  check_intervals(intervals, clip_seconds, "annotation " + clip_id);
}

std::vector<ExpertAnnotation> read_annotations(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (!j.is_array()) throw FormatError("annotation file must hold a JSON list: " + path.string());
  std::vector<ExpertAnnotation> out;
  try {
    for (const json& a : j) {
      ExpertAnnotation ann;
      ann.clip_id = a.at("clip_id").get<std::string>();
      ann.intervals = intervals_from_json(a.at("intervals"));
      ann.validate();
      out.push_back(std::move(ann));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed annotations " + path.string() + ": " + e.what());
  }
  return out;
}

void write_annotations(const std::vector<ExpertAnnotation>& annotations,
                       const std::filesystem::path& path) {
  json out = json::array();
  for (const ExpertAnnotation& a : annotations) {
    out.push_back({{"clip_id", a.clip_id}, {"intervals", intervals_to_json(a.intervals)}});
  }
  write_file_atomic(path, out.dump(2) + "\n");
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ragaxai

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

#include <cstdint>
#include <string>
#include <vector>

#include "ragaxai/audio.hpp"
#include "ragaxai/manifest.hpp"

namespace ragaxai {

// A synthetic stand-in for a raga: a scale of pitch classes relative to the
// tonic (always containing 0) and a signature phrase (pakad) drawn from it.
struct SyntheticRagaSpec {
  std::string raga_id;
  std::vector<int> scale;  // 5-7 pitch classes, contains 0
  std::vector<int> pakad;  // 4-6 pitch classes, subset of scale
  double tempo_min = 2.0;  // notes per second
  double tempo_max = 4.0;

  void validate() const;
};

// Twelve presets with pairwise-distinct pakads and partially overlapping
// scales. Bihag and Maru-Bihag differ by a single scale note.
std::vector<SyntheticRagaSpec> synthetic_presets();

struct SynthOptions {
  int pakad_count = 0;        // 0: one per started 30 s of audio
  double drone_gain = 0.25;   // tonic; the fifth sounds at half this
  double melody_gain = 0.10;
  double pakad_gain = 0.20;   // pakad notes are rendered accented
  double noise_dbfs = -30.0;  // white noise RMS
};

struct SyntheticClip {
  AudioClip clip;
  ExpertAnnotation annotation;  // exactly the planted pakad intervals
};

// Renders a tonic drone (fundamental + fifth), an additive-harmonic melody over
// the scale transposed to the tonic, and white noise; plants the pakad at
// pakad_count known intervals. Deterministic in (spec, tonic, duration, seed).
SyntheticClip generate_synthetic_clip(const SyntheticRagaSpec& spec, int tonic, double duration,
                                      uint64_t seed, const SynthOptions& options = {});

struct SyntheticCorpusOptions {
  int classes = 12;
  int songs_per_class = 20;
  double song_seconds = 95.0;
  bool randomize_tonic = true;  // otherwise every song is in A
  uint64_t seed = 0;
  SynthOptions synth;
};

// Manifest entry (label, tonic, segments) of corpus song `index`; songs are
// ordered class-major.
SongEntry synthetic_song_entry(const SyntheticCorpusOptions& options, int index);
SyntheticClip render_synthetic_song(const SyntheticCorpusOptions& options, int index);
DatasetManifest synthetic_manifest(const SyntheticCorpusOptions& options);

}  // namespace ragaxai

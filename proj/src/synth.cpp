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
#include "ragaxai/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "ragaxai/dsp.hpp"

namespace ragaxai {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  // splitmix64 finalizer
  uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void add_tone(std::vector<float>& out, double rate, std::size_t begin, std::size_t end, double freq,
              double gain, int harmonics) {
  const double attack = 0.02 * rate, release = 0.03 * rate;
  const double nyquist_guard = 0.47 * rate;
  const double length = static_cast<double>(end - begin);
  for (int h = 1; h <= harmonics; ++h) {
    const double f = freq * h;
    if (f >= nyquist_guard) break;
    const double amp = gain / h;
    const double w = 2.0 * std::numbers::pi * f / rate;
    for (std::size_t i = begin; i < end; ++i) {
      const double local = static_cast<double>(i - begin);
      const double env = std::min({1.0, local / attack, (length - local) / release});
      out[i] += static_cast<float>(amp * env * std::sin(w * static_cast<double>(i)));
    }
  }
}

}  // namespace

void SyntheticRagaSpec::validate() const {
  if (scale.empty()) throw Error("synthetic raga " + raga_id + ": empty scale");
  if (scale.size() < 5 || scale.size() > 7) throw Error("synthetic raga " + raga_id + ": scale needs 5-7 notes");
  const std::set<int> notes(scale.begin(), scale.end());
  if (notes.size() != scale.size()) throw Error("synthetic raga " + raga_id + ": repeated scale note");
  for (int pc : scale) {
    if (pc < 0 || pc > 11) throw Error("synthetic raga " + raga_id + ": pitch class out of range");
  }
  if (!notes.count(0)) throw Error("synthetic raga " + raga_id + ": scale must contain the tonic");
  if (pakad.size() < 4 || pakad.size() > 6) throw Error("synthetic raga " + raga_id + ": pakad needs 4-6 notes");
  for (int pc : pakad) {
    if (!notes.count(pc)) throw Error("synthetic raga " + raga_id + ": pakad note outside scale");
  }
  if (!(tempo_min > 0) || tempo_max < tempo_min) throw Error("synthetic raga " + raga_id + ": bad tempo range");
}

std::vector<SyntheticRagaSpec> synthetic_presets() {
  return {
      {"Bhairavi", {0, 1, 3, 5, 7, 8, 10}, {8, 7, 5, 3, 1, 0}},
      {"Bihag", {0, 2, 4, 5, 7, 9, 11}, {4, 5, 7, 11, 0}},
      {"Des", {0, 2, 5, 7, 10, 11}, {7, 10, 7, 5, 2}},
      {"Jog", {0, 3, 4, 5, 7, 10}, {4, 5, 7, 10, 3, 0}},
      {"Kedar", {0, 2, 5, 6, 7, 9}, {0, 5, 6, 7, 9, 7}},
      {"Khamaj", {0, 4, 5, 7, 9, 10}, {10, 9, 7, 5, 4}},
      {"Malkauns", {0, 3, 5, 8, 10}, {10, 8, 5, 3, 0}},
      {"Maru-Bihag", {0, 4, 5, 6, 7, 9, 11}, {4, 6, 7, 11, 0}},
      {"Nayaki-Kanada", {0, 2, 3, 5, 7, 10}, {3, 5, 2, 0, 10}},
      {"Shudha-Kalyan", {0, 2, 4, 7, 9}, {7, 9, 4, 2, 0}},
      {"Sohni", {0, 1, 4, 6, 9, 11}, {9, 11, 1, 0}},
      {"Yaman", {0, 2, 4, 6, 7, 9, 11}, {11, 2, 4, 6, 4, 2}},
  };
}

SyntheticClip generate_synthetic_clip(const SyntheticRagaSpec& spec, int tonic, double duration,
                                      uint64_t seed, const SynthOptions& options) {
  spec.validate();
  if (tonic < 0 || tonic > 11) throw Error("generate_synthetic_clip: tonic outside [0, 11]");
  if (duration < 10.0) throw Error("generate_synthetic_clip: duration must be at least 10 s");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double tempo = spec.tempo_min + (spec.tempo_max - spec.tempo_min) * unit(rng);
  const double note_seconds = 1.0 / tempo;
  const auto n_notes = static_cast<int>(std::floor(duration * tempo));
  const int pakad_len = static_cast<int>(spec.pakad.size());
  const int count = options.pakad_count > 0
                        ? options.pakad_count
                        : std::max(1, static_cast<int>(std::ceil(duration / kClipSeconds - 1e-9)));
  if (n_notes / count < pakad_len) {
    throw Error("generate_synthetic_clip: " + std::to_string(duration) + " s is too short for " +
                std::to_string(count) + " pakad occurrence(s)");
  }

  // Note offsets above the tonic (two octaves), -1 marks a pakad position.
  std::vector<int> scale2;
  for (int octave : {0, 12}) {
    for (int pc : spec.scale) scale2.push_back(pc + octave);
  }
  std::sort(scale2.begin(), scale2.end());

  std::vector<int> offsets(static_cast<std::size_t>(n_notes), 0);
  std::vector<bool> accented(static_cast<std::size_t>(n_notes), false);
  SyntheticClip result;
  result.annotation.clip_id = spec.raga_id;
  for (int w = 0; w < count; ++w) {
    const int lo = w * n_notes / count;
    const int hi = (w + 1) * n_notes / count;
    std::uniform_int_distribution<int> pick(lo, hi - pakad_len);
    const int start = pick(rng);
    int previous = spec.pakad.front();
    for (int i = 0; i < pakad_len; ++i) {
      // Each pakad note takes the octave closest to the previous one.
      int note = spec.pakad[static_cast<std::size_t>(i)];
      if (i > 0) {
        while (note - previous > 6) note -= 12;
        while (previous - note > 6) note += 12;
      }
      note = std::clamp(note, 0, 23);
      offsets[static_cast<std::size_t>(start + i)] = note;
      accented[static_cast<std::size_t>(start + i)] = true;
      previous = note;
    }
    result.annotation.intervals.push_back(
        {start * note_seconds, (start + pakad_len) * note_seconds});
  }

  // Background melody: random walk over the two-octave scale, returning to the
  // tonic from time to time.
  std::uniform_int_distribution<int> step(-2, 2);
  int position = static_cast<int>(spec.scale.size());  // upper tonic
  for (int i = 0; i < n_notes; ++i) {
    if (accented[static_cast<std::size_t>(i)]) continue;
    if (unit(rng) < 0.2) {
      position = unit(rng) < 0.5 ? 0 : static_cast<int>(spec.scale.size());
    } else {
      int s = step(rng);
      if (s == 0) s = 1;
      position = std::clamp(position + s, 0, static_cast<int>(scale2.size()) - 1);
    }
    offsets[static_cast<std::size_t>(i)] = scale2[static_cast<std::size_t>(position)];
  }

  const double rate = kSampleRate;
  const auto total = static_cast<std::size_t>(std::llround(duration * rate));
  std::vector<float> samples(total, 0.0f);
  const double tonic_midi = 60 + tonic;
  add_tone(samples, rate, 0, total, dsp::pitch_frequency(tonic_midi), options.drone_gain, 1);
  add_tone(samples, rate, 0, total, dsp::pitch_frequency(tonic_midi + 7), options.drone_gain / 2, 1);
  for (int i = 0; i < n_notes; ++i) {
    const auto begin = static_cast<std::size_t>(std::llround(i * note_seconds * rate));
    const auto end = std::min(total, static_cast<std::size_t>(std::llround((i + 1) * note_seconds * rate)));
    const double gain = accented[static_cast<std::size_t>(i)] ? options.pakad_gain : options.melody_gain;
    add_tone(samples, rate, begin, end, dsp::pitch_frequency(tonic_midi + offsets[static_cast<std::size_t>(i)]),
             gain, 4);
  }
  std::normal_distribution<double> noise(0.0, std::pow(10.0, options.noise_dbfs / 20.0));
  for (float& s : samples) s = std::clamp(static_cast<float>(s + noise(rng)), -1.0f, 1.0f);

  result.clip.samples = std::move(samples);
  result.clip.sample_rate = rate;
  result.clip.source_id = spec.raga_id;
  return result;
}

SongEntry synthetic_song_entry(const SyntheticCorpusOptions& options, int index) {
  const auto presets = synthetic_presets();
  if (options.classes < 2 || options.classes > static_cast<int>(presets.size())) {
    throw Error("synthetic corpus: classes must lie in [2, 12]");
  }
  if (index < 0 || index >= options.classes * options.songs_per_class) {
    throw Error("synthetic corpus: song index out of range");
  }
  const int cls = index / options.songs_per_class;
  std::mt19937_64 rng(mix_seed(options.seed, static_cast<uint64_t>(index)));
  SongEntry song;
  const auto& spec = presets[static_cast<std::size_t>(cls)];
  char id[64];
  std::snprintf(id, sizeof id, "%s_%03d", spec.raga_id.c_str(), index % options.songs_per_class);
  song.song_id = id;
  song.raga_label = spec.raga_id;
  song.tonic_pitch_class =
      options.randomize_tonic ? static_cast<int>(rng() % 12) : kReferencePitchClass;
  song.artist = "synthetic";
  song.music_segments = {{0.0, options.song_seconds}};
  song.audio_path = song.song_id + ".wav";
  return song;
}

SyntheticClip render_synthetic_song(const SyntheticCorpusOptions& options, int index) {
  const SongEntry song = synthetic_song_entry(options, index);
  const auto presets = synthetic_presets();
  const auto& spec = presets[static_cast<std::size_t>(index / options.songs_per_class)];
  SyntheticClip out = generate_synthetic_clip(spec, song.tonic_pitch_class, options.song_seconds,
                                              mix_seed(options.seed ^ 0x5A5A5A5Aull, static_cast<uint64_t>(index)),
                                              options.synth);
  out.clip.source_id = song.song_id;
  out.annotation.clip_id = song.song_id;
  return out;
}

DatasetManifest synthetic_manifest(const SyntheticCorpusOptions& options) {
  DatasetManifest manifest;
  for (int i = 0; i < options.classes * options.songs_per_class; ++i) {
    manifest.songs.push_back(synthetic_song_entry(options, i));
  }
  return manifest;
}

}  // namespace ragaxai

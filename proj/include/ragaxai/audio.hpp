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

#include <filesystem>
#include <string>
#include <vector>

#include "ragaxai/common.hpp"

namespace ragaxai {

struct AudioClip {
  std::vector<float> samples;  // [-1, 1]
  double sample_rate = kSampleRate;
  std::string source_id;
  double offset = 0.0;  // seconds from song start

  double duration() const { return samples.size() / sample_rate; }
};

// Closed interval [start, end] in seconds.
struct Interval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

// Reads a mono PCM WAV (16-bit integer or 32-bit float) and linearly resamples
// it to target_rate. Throws FormatError on unreadable, multi-channel or empty
// input.
AudioClip load_audio(const std::filesystem::path& path, double target_rate = kSampleRate);

// Writes a mono 32-bit float WAV.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

std::vector<float> resample_linear(const std::vector<float>& samples, double from_rate,
                                   double to_rate);

// Concatenates the music segments, cuts consecutive chunk_seconds chunks and
// drops the final chunk of the recording. Partial remainders are dropped too,
// so the count is max(0, floor(total / chunk_seconds) - 1). Throws when the
// total music duration is under two chunks.
std::vector<AudioClip> chunk_song(const AudioClip& clip, const std::vector<Interval>& segments,
                                  double chunk_seconds = kClipSeconds);

}  // namespace ragaxai

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

#include <cstring>
#include <fstream>

#include "ragaxai/audio.hpp"
#include "ragaxai/dsp.hpp"
#include "test_util.hpp"

namespace ragaxai {
namespace {

using testing::TempDir;

void write_pcm16(const std::filesystem::path& path, const std::vector<int16_t>& samples, uint32_t rate,
                 uint16_t channels = 1) {
  std::ofstream out(path, std::ios::binary);
  auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  const uint32_t data = static_cast<uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  u32(36 + data);
  out.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(channels);
  u32(rate);
  u32(rate * 2 * channels);
  u16(static_cast<uint16_t>(2 * channels));
  u16(16);
  out.write("data", 4);
  u32(data);
  out.write(reinterpret_cast<const char*>(samples.data()), data);
}

TEST(Audio, FloatWavRoundTrip) {
  TempDir dir("audio");
  AudioClip clip = testing::sine(440.0, 0.5);
  write_wav(dir / "a.wav", clip);
  const AudioClip back = load_audio(dir / "a.wav");
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  EXPECT_EQ(back.samples, clip.samples);
  EXPECT_DOUBLE_EQ(back.sample_rate, 16000.0);
}

TEST(Audio, Pcm16IsScaledToUnitRange) {
  TempDir dir("audio");
  write_pcm16(dir / "p.wav", {0, 16384, -32768, 32767}, 16000);
  const AudioClip clip = load_audio(dir / "p.wav");
  ASSERT_EQ(clip.samples.size(), 4u);
  EXPECT_FLOAT_EQ(clip.samples[1], 0.5f);
  EXPECT_FLOAT_EQ(clip.samples[2], -1.0f);
}

TEST(Audio, RejectsStereoAndGarbage) {
  TempDir dir("audio");
  write_pcm16(dir / "s.wav", {0, 0, 1, 1}, 16000, 2);
  EXPECT_THROW(load_audio(dir / "s.wav"), FormatError);
  std::ofstream(dir / "junk.wav") << "not a wav file at all";
  EXPECT_THROW(load_audio(dir / "junk.wav"), FormatError);
  EXPECT_THROW(load_audio(dir / "missing.wav"), Error);
}

TEST(Audio, ResampledSineKeepsItsPeak) {
  AudioClip clip = testing::sine(440.0, 1.0, 44100.0);
  AudioClip res;
  res.samples = resample_linear(clip.samples, 44100.0, 16000.0);
  res.sample_rate = 16000.0;
  EXPECT_EQ(res.samples.size(), 16000u);
  const auto spec = dsp::stft(res);
  std::vector<double> total(spec.mag_sq.cols());
  for (std::size_t r = 0; r < spec.mag_sq.rows(); ++r) {
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += spec.mag_sq(r, k);
  }
  const auto peak = std::max_element(total.begin(), total.end()) - total.begin();
  EXPECT_NEAR(static_cast<double>(peak), 440.0 * 2048 / 16000, 1.0);
}

TEST(Audio, ChunkSongDropsLastChunk) {
  AudioClip song;
  song.samples.assign(95 * 16000, 0.1f);
  song.source_id = "s";
  const auto chunks = chunk_song(song, {{0.0, 95.0}});
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0].samples.size(), 480000u);
  EXPECT_DOUBLE_EQ(chunks[1].offset, 30.0);

  AudioClip short_song;
  short_song.samples.assign(59 * 16000, 0.1f);
  EXPECT_THROW(chunk_song(short_song, {{0.0, 59.0}}), Error);
}

TEST(Audio, ChunkSongConcatenatesSegments) {
  AudioClip song;
  song.samples.assign(100 * 16000, 0.0f);
  for (std::size_t i = 40 * 16000; i < song.samples.size(); ++i) song.samples[i] = 1.0f;
  // 20 s of zeros plus 50 s of ones -> 70 s of music, 2 full chunks, 1 kept.
  const auto chunks = chunk_song(song, {{0.0, 20.0}, {50.0, 100.0}});
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].samples[20 * 16000 - 1], 0.0f);
  EXPECT_EQ(chunks[0].samples[20 * 16000], 1.0f);
}

}  // namespace
}  // namespace ragaxai

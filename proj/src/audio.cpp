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
#include "ragaxai/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ragaxai {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

uint16_t read_u16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

AudioClip load_audio(const std::filesystem::path& path, double target_rate) {
  if (target_rate <= 0) throw Error("load_audio: target rate must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open audio file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path.string());
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || available < 16) throw FormatError("truncated fmt chunk: " + path.string());
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == 0xFFFE && size >= 26 && available >= 26) format = read_u16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      pcm = chunk + 8;
      pcm_bytes = std::min<std::size_t>(size, available);
    }
    pos = body + size + (size & 1u);
  }
  if (channels == 0 || rate == 0) throw FormatError("missing fmt chunk: " + path.string());
  if (channels != 1) {
    throw FormatError("expected mono audio, got " + std::to_string(channels) +
                      " channels: " + path.string());
  }

  std::vector<float> samples;
  if (format == 1 && bits == 16) {
    samples.resize(pcm_bytes / 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = static_cast<int16_t>(read_u16(pcm + 2 * i)) / 32768.0f;
    }
  } else if (format == 3 && bits == 32) {
    samples.resize(pcm_bytes / 4);
    std::memcpy(samples.data(), pcm, samples.size() * 4);
    float peak = 0.0f;
    for (float s : samples) {
      if (!std::isfinite(s)) throw FormatError("non-finite sample in " + path.string());
      peak = std::max(peak, std::abs(s));
    }
    if (peak > 1.0f) {
      for (float& s : samples) s /= peak;
    }
  } else {
    throw FormatError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits): " + path.string());
  }
  if (samples.empty()) throw FormatError("zero-length audio: " + path.string());

  AudioClip clip;
  clip.samples = resample_linear(samples, rate, target_rate);
  clip.sample_rate = target_rate;
  clip.source_id = path.stem().string();
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write audio file: " + path.string());
  const auto data_bytes = static_cast<uint32_t>(clip.samples.size() * 4);
  const auto rate = static_cast<uint32_t>(std::lround(clip.sample_rate));
  out.write("RIFF", 4);
  put<uint32_t>(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put<uint32_t>(out, 16);
  put<uint16_t>(out, 3);  // IEEE float
  put<uint16_t>(out, 1);
  put<uint32_t>(out, rate);
  put<uint32_t>(out, rate * 4);
  put<uint16_t>(out, 4);
  put<uint16_t>(out, 32);
  out.write("data", 4);
  put<uint32_t>(out, data_bytes);
  out.write(reinterpret_cast<const char*>(clip.samples.data()), data_bytes);
  if (!out) throw Error("failed writing audio file: " + path.string());
}

std::vector<float> resample_linear(const std::vector<float>& samples, double from_rate,
                                   double to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw Error("resample_linear: rates must be positive");
  if (samples.empty() || from_rate == to_rate) return samples;
  const auto out_len =
      static_cast<std::size_t>(std::llround(samples.size() * to_rate / from_rate));
  std::vector<float> out(out_len);
  const double step = from_rate / to_rate;
  const std::size_t last = samples.size() - 1;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = i * step;
    const auto left = static_cast<std::size_t>(pos);
    if (left >= last) {
      out[i] = samples[last];
      continue;
    }
    const double frac = pos - left;
    out[i] = static_cast<float>(samples[left] + frac * (samples[left + 1] - samples[left]));
  }
  return out;
}

std::vector<AudioClip> chunk_song(const AudioClip& clip, const std::vector<Interval>& segments,
                                  double chunk_seconds) {
  if (chunk_seconds <= 0) throw Error("chunk_song: chunk length must be positive");
  const double rate = clip.sample_rate;
  const std::size_t n = clip.samples.size();

  // Sample ranges of the music segments, with the song-time origin of each.
  struct Span {
    std::size_t begin, end;
  };
  std::vector<Span> spans;
  double previous_end = 0.0;
  for (const Interval& seg : segments) {
    if (!(seg.end > seg.start) || seg.start < 0 || seg.start < previous_end) {
      throw Error("chunk_song: segments must be ordered, non-overlapping and non-empty");
    }
    const auto b = static_cast<std::size_t>(std::llround(seg.start * rate));
    const auto e = static_cast<std::size_t>(std::llround(seg.end * rate));
    if (e > n + static_cast<std::size_t>(std::ceil(rate * 1e-3))) {
      throw Error("chunk_song: segment extends past the end of " + clip.source_id);
    }
    spans.push_back({b, std::min(e, n)});
    previous_end = seg.end;
  }

  std::size_t total = 0;
  for (const Span& s : spans) total += s.end - s.begin;
  const auto chunk_len = static_cast<std::size_t>(std::llround(chunk_seconds * rate));
  const std::size_t full = total / chunk_len;
  if (full < 2) {
    throw Error("chunk_song: " + clip.source_id + " has " + std::to_string(total / rate) +
                " s of music, need at least " + std::to_string(2 * chunk_seconds) + " s");
  }

  std::vector<AudioClip> chunks;
  std::size_t span_idx = 0, span_pos = 0;
  for (std::size_t c = 0; c + 1 < full; ++c) {
    AudioClip chunk;
    chunk.sample_rate = rate;
    chunk.source_id = clip.source_id;
    chunk.samples.reserve(chunk_len);
    bool first = true;
    while (chunk.samples.size() < chunk_len) {
      const Span& s = spans[span_idx];
      if (first) {
        chunk.offset = clip.offset + (s.begin + span_pos) / rate;
        first = false;
      }
      const std::size_t take = std::min(chunk_len - chunk.samples.size(), s.end - s.begin - span_pos);
      const auto from = clip.samples.begin() + static_cast<std::ptrdiff_t>(s.begin + span_pos);
      chunk.samples.insert(chunk.samples.end(), from, from + static_cast<std::ptrdiff_t>(take));
      span_pos += take;
      if (span_pos == s.end - s.begin) {
        ++span_idx;
        span_pos = 0;
      }
    }
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

}  // namespace ragaxai

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
#include "ragaxai/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>

namespace ragaxai::dsp {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
fftwf_plan r2c_plan(int n) {
  static std::mutex mutex;
  static std::map<int, fftwf_plan> plans;
  std::lock_guard lock(mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  std::vector<float> in(static_cast<std::size_t>(n));
  std::vector<fftwf_complex> out(static_cast<std::size_t>(n / 2 + 1));
  fftwf_plan plan = fftwf_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw Error("FFTW planning failed for n=" + std::to_string(n));
  plans.emplace(n, plan);
  return plan;
}

std::size_t reflect_index(std::ptrdiff_t j, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  j = std::abs(j) % period;
  if (j >= static_cast<std::ptrdiff_t>(n)) j = period - j;
  return static_cast<std::size_t>(j);
}

const PitchBandMap& default_band_map() {
  static const PitchBandMap map(kSampleRate, kFftSize);
  return map;
}

}  // namespace

double pitch_frequency(double p) { return 440.0 * std::exp2((p - 69.0) / 12.0); }

PitchBandMap::PitchBandMap(double sample_rate, int n_fft)
    : sample_rate_(sample_rate), n_fft_(n_fft), bands_(kMidiPitches) {
  if (sample_rate <= 0 || n_fft <= 0) throw Error("pitch_band_map: invalid parameters");
  const std::size_t n_bins = static_cast<std::size_t>(n_fft / 2 + 1);
  pitch_of_bin_.assign(n_bins, -1);
  // Shared edges keep the bands disjoint: the upper edge of p is the lower edge of p + 1.
  std::vector<double> edges(kMidiPitches + 1);
  for (int p = 0; p <= kMidiPitches; ++p) edges[static_cast<std::size_t>(p)] = pitch_frequency(p - 0.5);
  for (std::size_t k = 0; k < n_bins; ++k) {
    const double f = k * sample_rate / n_fft;
    if (f < edges.front() || f >= edges.back()) continue;
    const auto upper = std::upper_bound(edges.begin(), edges.end(), f);
    const int p = static_cast<int>(upper - edges.begin()) - 1;
    pitch_of_bin_[k] = p;
    bands_[static_cast<std::size_t>(p)].push_back(static_cast<int>(k));
  }
}

PitchBandMap pitch_band_map(double sample_rate, int n_fft) { return PitchBandMap(sample_rate, n_fft); }

Spectrogram stft(const AudioClip& clip, const StftParams& params) {
  const std::size_t n = clip.samples.size();
  if (n == 0) throw Error("stft: empty signal");
  if (params.n_fft <= 0 || params.hop <= 0 || params.n_fft < params.hop) {
    throw Error("stft: need n_fft >= hop > 0");
  }
  const auto n_fft = static_cast<std::size_t>(params.n_fft);
  const auto hop = static_cast<std::size_t>(params.hop);
  const std::size_t n_bins = n_fft / 2 + 1;
  const std::size_t frames = 1 + n / hop;
  const auto pad = static_cast<std::ptrdiff_t>(n_fft / 2);

  std::vector<float> window(n_fft);
  for (std::size_t i = 0; i < n_fft; ++i) {
    window[i] = static_cast<float>(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n_fft));
  }

  Spectrogram spec;
  spec.sample_rate = clip.sample_rate;
  spec.n_fft = params.n_fft;
  spec.frame_rate = clip.sample_rate / params.hop;
  spec.mag_sq = Matrix(frames, n_bins);

  const fftwf_plan plan = r2c_plan(params.n_fft);
  std::vector<float> buffer(n_fft);
  std::vector<fftwf_complex> out(n_bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto start = static_cast<std::ptrdiff_t>(t * hop) - pad;
    for (std::size_t i = 0; i < n_fft; ++i) {
      const std::ptrdiff_t j = start + static_cast<std::ptrdiff_t>(i);
      const std::size_t src =
          (j >= 0 && j < static_cast<std::ptrdiff_t>(n)) ? static_cast<std::size_t>(j) : reflect_index(j, n);
      buffer[i] = clip.samples[src] * window[i];
    }
    fftwf_execute_dft_r2c(plan, buffer.data(), out.data());
    float* row = spec.mag_sq.row(t);
    for (std::size_t k = 0; k < n_bins; ++k) row[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  }
  return spec;
}

LogFreqSpectrogram logfreq_spectrogram(const Spectrogram& spec, const PitchBandMap& map) {
  if (spec.mag_sq.cols() != map.num_bins()) {
    throw Error("logfreq_spectrogram: spectrogram has " + std::to_string(spec.mag_sq.cols()) +
                " bins, band map expects " + std::to_string(map.num_bins()));
  }
  LogFreqSpectrogram lf;
  lf.frame_rate = spec.frame_rate;
  lf.energy = Matrix(spec.mag_sq.rows(), kMidiPitches);
  for (std::size_t t = 0; t < spec.mag_sq.rows(); ++t) {
    const float* in = spec.mag_sq.row(t);
    float* out = lf.energy.row(t);
    for (int p = 0; p < kMidiPitches; ++p) {
      double acc = 0.0;
      for (int k : map.bins(p)) acc += in[k];
      out[p] = static_cast<float>(acc);
    }
  }
  return lf;
}

Chromagram chromagram(const LogFreqSpectrogram& lf) {
  if (lf.energy.cols() != static_cast<std::size_t>(kMidiPitches)) {
    throw Error("chromagram: expected 128 pitch columns");
  }
  Chromagram chroma;
  chroma.frame_rate = lf.frame_rate;
  chroma.energy = Matrix(lf.energy.rows(), kChromaBins);
  for (std::size_t t = 0; t < lf.energy.rows(); ++t) {
    double acc[kChromaBins] = {};
    const float* in = lf.energy.row(t);
    for (int p = 0; p < kMidiPitches; ++p) acc[p % kChromaBins] += in[p];
    for (int c = 0; c < kChromaBins; ++c) chroma.energy(t, static_cast<std::size_t>(c)) = static_cast<float>(acc[c]);
  }
  return chroma;
}

Matrix rotate_pitch_classes(const Matrix& chroma, int shift) {
  if (chroma.cols() != static_cast<std::size_t>(kChromaBins)) throw Error("rotate_pitch_classes: expected 12 columns");
  Matrix out(chroma.rows(), chroma.cols());
  const int s = ((shift % kChromaBins) + kChromaBins) % kChromaBins;
  for (std::size_t t = 0; t < chroma.rows(); ++t) {
    for (int c = 0; c < kChromaBins; ++c) {
      out(t, static_cast<std::size_t>((c + s) % kChromaBins)) = chroma(t, static_cast<std::size_t>(c));
    }
  }
  return out;
}

Chromagram tonic_normalize(const Chromagram& chroma, int tonic, int reference) {
  if (chroma.tonic_normalized) throw Error("tonic_normalize: chromagram is already tonic-normalized");
  if (tonic < 0 || tonic > 11 || reference < 0 || reference > 11) {
    throw Error("tonic_normalize: pitch classes must lie in [0, 11]");
  }
  Chromagram out;
  out.energy = rotate_pitch_classes(chroma.energy, reference - tonic);
  out.frame_rate = chroma.frame_rate;
  out.tonic_normalized = true;
  out.reference_class = reference;
  return out;
}

Chromagram compute_chromagram(const AudioClip& clip) {
  const Spectrogram spec = stft(clip);
  if (clip.sample_rate == kSampleRate) return chromagram(logfreq_spectrogram(spec, default_band_map()));
  return chromagram(logfreq_spectrogram(spec, pitch_band_map(clip.sample_rate, kFftSize)));
}

Chromagram extract_raw_features(const AudioClip& clip) {
  if (clip.sample_rate != kSampleRate) {
    throw Error("extract_features: expected 16000 Hz audio, got " + std::to_string(clip.sample_rate));
  }
  if (clip.samples.size() != static_cast<std::size_t>(kClipSamples)) {
    throw Error("extract_features: expected a 30 s clip (480000 samples), got " +
                std::to_string(clip.samples.size()));
  }
  Chromagram chroma = compute_chromagram(clip);
  if (chroma.energy.rows() != static_cast<std::size_t>(kClipFrames)) {
    throw Error("extract_features: produced " + std::to_string(chroma.energy.rows()) + " frames");
  }
  return chroma;
}

Chromagram extract_features(const AudioClip& clip, int tonic) {
  return tonic_normalize(extract_raw_features(clip), tonic);
}

}  // namespace ragaxai::dsp

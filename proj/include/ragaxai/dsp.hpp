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

#include <memory>
#include <optional>
#include <vector>

#include "ragaxai/audio.hpp"
#include "ragaxai/common.hpp"

namespace ragaxai::dsp {

struct StftParams {
  int n_fft = kFftSize;
  int hop = kHopSize;
};

struct Spectrogram {
  Matrix mag_sq;  // frames x (n_fft/2 + 1), |X(n,k)|^2
  double frame_rate = kFrameRate;
  double sample_rate = kSampleRate;
  int n_fft = kFftSize;

  double bin_frequency(std::size_t k) const { return k * sample_rate / n_fft; }
};

struct LogFreqSpectrogram {
  Matrix energy;  // frames x 128
  double frame_rate = kFrameRate;
};

struct Chromagram {
  Matrix energy;  // frames x 12
  double frame_rate = kFrameRate;
  bool tonic_normalized = false;
  int reference_class = kReferencePitchClass;
};

// Centre frequency of MIDI pitch p: 440 * 2^((p - 69) / 12).
double pitch_frequency(double p);

// Assignment of STFT bins to the 128 MIDI pitch bands
// P(p) = { k : F_pitch(p - 0.5) <= F_coef(k) < F_pitch(p + 0.5) }.
class PitchBandMap {
 public:
  PitchBandMap(double sample_rate, int n_fft);

  const std::vector<int>& bins(int pitch) const { return bands_.at(static_cast<std::size_t>(pitch)); }
  // -1 when the bin falls outside every band.
  int pitch_of_bin(std::size_t k) const { return pitch_of_bin_.at(k); }
  std::size_t num_bins() const { return pitch_of_bin_.size(); }
  double sample_rate() const { return sample_rate_; }
  int n_fft() const { return n_fft_; }

 private:
  double sample_rate_;
  int n_fft_;
  std::vector<std::vector<int>> bands_;
  std::vector<int> pitch_of_bin_;
};

PitchBandMap pitch_band_map(double sample_rate, int n_fft);

// Centered (reflect-padded), periodic-Hann STFT. Frame count 1 + floor(len / hop).
Spectrogram stft(const AudioClip& clip, const StftParams& params = {});

LogFreqSpectrogram logfreq_spectrogram(const Spectrogram& spec, const PitchBandMap& map);

// C(n, c) = sum over p with p mod 12 == c of Y_LF(n, p).
Chromagram chromagram(const LogFreqSpectrogram& lf);

// Cyclic column rotation: output bin c holds input bin (c - shift) mod 12.
Matrix rotate_pitch_classes(const Matrix& chroma, int shift);

// Rotates so the tonic's energy lands in the reference bin: output bin c holds
// input bin (c + tonic - reference) mod 12. Throws on an already normalized
// chromagram.
Chromagram tonic_normalize(const Chromagram& chroma, int tonic,
                           int reference = kReferencePitchClass);

// stft -> logfreq -> chroma for any clip length (no normalization).
Chromagram compute_chromagram(const AudioClip& clip);

// Full pipeline for a 30 s, 16 kHz clip; output is exactly 938 x 12.
Chromagram extract_features(const AudioClip& clip, int tonic);
// Same, without tonic normalization.
Chromagram extract_raw_features(const AudioClip& clip);

}  // namespace ragaxai::dsp

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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ragaxai {

// Pipeline geometry. 30 s at 16 kHz with hop 512 and centered frames gives
// 1 + floor(480000 / 512) = 938 frames.
inline constexpr int kSampleRate = 16000;
inline constexpr int kFftSize = 2048;
inline constexpr int kHopSize = 512;
inline constexpr double kClipSeconds = 30.0;
inline constexpr int kClipSamples = 480000;
inline constexpr int kClipFrames = 938;
inline constexpr int kChromaBins = 12;
inline constexpr int kMidiPitches = 128;
inline constexpr double kFrameRate = static_cast<double>(kSampleRate) / kHopSize;
inline constexpr int kReferencePitchClass = 9;  // A

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or truncated files, bad magic, version mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Dense row-major float matrix used for spectrograms and chromagrams.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw Error("Matrix: data size does not match shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  float* row(std::size_t r) { return data_.data() + r * cols_; }
  const float* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

// Second index [0, 30) of a frame under the floor(f / frame_rate) rule shared by
// time-saliency binning and SoundLIME super-pixels.
inline int second_of_frame(std::size_t frame, double frame_rate = kFrameRate) {
  return static_cast<int>(static_cast<double>(frame) / frame_rate);
}

}  // namespace ragaxai

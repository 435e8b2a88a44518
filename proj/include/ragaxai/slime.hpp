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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ragaxai/model.hpp"
#include "ragaxai/saliency.hpp"

namespace ragaxai {

struct MaskSet {
  std::vector<std::vector<uint8_t>> masks;  // n masks of d super-pixels, 1 = retained
  uint64_t seed = 0;
  int super_pixels() const { return masks.empty() ? 0 : static_cast<int>(masks.front().size()); }
};

// Bernoulli(1/2) entries; an all-zero mask is redrawn.
MaskSet make_masks(int n = 150, int d = 30, uint64_t seed = 0);

// Zeroes the frames of every suppressed super-pixel (frame f belongs to
// super-pixel second_of_frame(f)).
Matrix perturb(const Matrix& input, const std::vector<uint8_t>& mask, double frame_rate = kFrameRate);

// exp(-D^2 / sigma^2) with D the elementwise Euclidean distance.
double kernel_weight(const Matrix& x, const Matrix& z, double sigma);

enum class SlimeTarget { kProbability, kBinary };

struct SlimeConfig {
  int samples = 150;
  int super_pixels = 30;
  uint64_t seed = 0;
  double ridge = 1e-3;
  SlimeTarget target = SlimeTarget::kProbability;
  std::optional<double> sigma;  // default: median perturbation distance
};

struct SlimeExplanation {
  std::vector<double> coefficients;
  double intercept = 0.0;
  int target_class = 0;
  double sigma = 1.0;
  double r2 = 0.0;  // weighted
  SlimeTarget mode = SlimeTarget::kProbability;
};

// Probabilities for a batch of inputs.
using BatchClassifier = std::function<std::vector<std::vector<float>>(const std::vector<Matrix>&)>;

SlimeExplanation fit_explanation(const BatchClassifier& classifier, const Matrix& input, int target_class,
                                 const MaskSet& masks, const SlimeConfig& config);
SlimeExplanation fit_explanation(const TrainedModel& model, const Matrix& input, int target_class,
                                 const SlimeConfig& config);

// Piecewise-constant upsampling; per-second scores are the coefficients.
TimeSaliency slime_time_saliency(const SlimeExplanation& expl, std::size_t frames = kClipFrames,
                                 double frame_rate = kFrameRate);

std::string slime_coefficients_csv(const SlimeExplanation& expl);
std::string to_string(SlimeTarget target);
SlimeTarget parse_slime_target(const std::string& name);

}  // namespace ragaxai

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

#include <functional>

#include "ragaxai/model.hpp"
#include "ragaxai/nd/nd.hpp"
#include "ragaxai/saliency.hpp"

namespace ragaxai {

// Last-conv activations A and dy^c/dA, both [T, F, K], for one input.
struct ConvAttribution {
  nd::Tensor<double> activations;
  nd::Tensor<double> gradients;
  int target_class = 0;

  int frames() const { return activations.dim(0); }
  int bins() const { return activations.dim(1); }
  int maps() const { return activations.dim(2); }
  // Z: cells per feature map.
  std::size_t cells() const { return static_cast<std::size_t>(frames()) * static_cast<std::size_t>(bins()); }
};

// Maps activations [1, T, F, K] to logits [1, N].
using AttributionHead = std::function<nd::Var<double>(nd::Graph<double>&, nd::Var<double>)>;

// Forward in inference mode, then backward from the pre-softmax logit of
// class c through the classifier head to the last conv activations.
ConvAttribution conv_attribution(const TrainedModel& model, const Matrix& input, int target_class);
ConvAttribution attribution_from_head(const nd::Tensor<double>& activations, const AttributionHead& head,
                                      int target_class);

// alpha_k = mean of the gradients of map k; ReLU(sum_k alpha_k A^k).
SaliencyMap gradcam_map(const ConvAttribution& attr);

// Per-pixel weights w = g^2 / (2 g^2 + sum_ab(A) g^3) (guard 1e-8, w = 0 where
// g <= 0), alpha_k = sum_ij w ReLU(g), ReLU(sum_k alpha_k A^k).
SaliencyMap gradcampp_map(const ConvAttribution& attr);

// Frame score = sum over frequency cells; per-second score = mean of its frames.
TimeSaliency time_saliency(const SaliencyMap& map, double frame_rate = kFrameRate);

}  // namespace ragaxai

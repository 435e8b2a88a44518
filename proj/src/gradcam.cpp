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
#include "ragaxai/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ragaxai {

namespace {

constexpr double kWeightGuard = 1e-8;

void check_attribution(const ConvAttribution& attr) {
  if (attr.activations.rank() != 3 || attr.activations.shape() != attr.gradients.shape()) {
    throw Error("attribution: activations and gradients must share a [T, F, K] shape");
  }
}

// ReLU(sum_k alpha_k A^k) as a [T, F] matrix.
SaliencyMap weighted_sum(const ConvAttribution& attr, const std::vector<double>& alpha, std::string method) {
  const std::size_t z = attr.cells(), k = static_cast<std::size_t>(attr.maps());
  SaliencyMap out{Matrix(static_cast<std::size_t>(attr.frames()), static_cast<std::size_t>(attr.bins())),
                  std::move(method)};
  const double* a = attr.activations.data();
  for (std::size_t cell = 0; cell < z; ++cell) {
    double acc = 0.0;
    for (std::size_t m = 0; m < k; ++m) acc += alpha[m] * a[cell * k + m];
    out.map.data()[cell] = static_cast<float>(std::max(0.0, acc));
  }
  return out;
}

}  // namespace

ConvAttribution conv_attribution(const TrainedModel& model, const Matrix& input, int target_class) {
  if (target_class < 0 || target_class >= model.config.num_classes) {
    throw Error("conv_attribution: unknown class index " + std::to_string(target_class));
  }
  nd::Graph<float> g;
  auto x = g.constant(stack_inputs(std::span<const Matrix>(&input, 1), model.config));
  auto features = conv_features(g, model.config, model.params, x, Phase::kInfer);
  auto leaf = g.leaf(features.value());
  auto logits = classifier_head(g, model.config, model.params, leaf);
  g.backward(nd::pick(logits, target_class));
  const auto& s = features.shape();
  ConvAttribution attr;
  attr.activations = features.value().cast<double>().reshaped({s[1], s[2], s[3]});
  attr.gradients = leaf.grad().cast<double>().reshaped({s[1], s[2], s[3]});
  attr.target_class = target_class;
  return attr;
}

ConvAttribution attribution_from_head(const nd::Tensor<double>& activations, const AttributionHead& head,
                                      int target_class) {
  if (activations.rank() != 3) throw Error("attribution_from_head: activations must be [T, F, K]");
  nd::Graph<double> g;
  auto leaf = g.leaf(activations.reshaped({1, activations.dim(0), activations.dim(1), activations.dim(2)}));
  auto logits = head(g, leaf);
  if (logits.shape().size() != 2 || target_class < 0 || target_class >= logits.shape()[1]) {
    throw Error("attribution_from_head: unknown class index " + std::to_string(target_class));
  }
  g.backward(nd::pick(logits, target_class));
  ConvAttribution attr;
  attr.activations = activations;
  attr.gradients = leaf.grad().reshaped(activations.shape());
  attr.target_class = target_class;
  return attr;
}

SaliencyMap gradcam_map(const ConvAttribution& attr) {
  check_attribution(attr);
  const std::size_t z = attr.cells(), k = static_cast<std::size_t>(attr.maps());
  std::vector<double> alpha(k, 0.0);
  const double* g = attr.gradients.data();
  for (std::size_t cell = 0; cell < z; ++cell) {
    for (std::size_t m = 0; m < k; ++m) alpha[m] += g[cell * k + m];
  }
  for (auto& a : alpha) a /= static_cast<double>(z);
  return weighted_sum(attr, alpha, "gradcam");
}

SaliencyMap gradcampp_map(const ConvAttribution& attr) {
  check_attribution(attr);
  const std::size_t z = attr.cells(), k = static_cast<std::size_t>(attr.maps());
  const double* a = attr.activations.data();
  const double* g = attr.gradients.data();
  std::vector<double> map_sum(k, 0.0), alpha(k, 0.0);
  for (std::size_t cell = 0; cell < z; ++cell) {
    for (std::size_t m = 0; m < k; ++m) map_sum[m] += a[cell * k + m];
  }
  for (std::size_t cell = 0; cell < z; ++cell) {
    for (std::size_t m = 0; m < k; ++m) {
      const double gv = g[cell * k + m];
      if (gv <= 0.0) continue;
      const double g2 = gv * gv;
      const double w = g2 / std::max(2.0 * g2 + map_sum[m] * g2 * gv, kWeightGuard);
      alpha[m] += w * gv;
    }
  }
  return weighted_sum(attr, alpha, "gradcampp");
}

std::vector<double> seconds_from_frames(const std::vector<double>& frame_scores, int seconds, double frame_rate) {
  std::vector<double> sum(static_cast<std::size_t>(seconds), 0.0);
  std::vector<int> count(static_cast<std::size_t>(seconds), 0);
  for (std::size_t f = 0; f < frame_scores.size(); ++f) {
    const int s = second_of_frame(f, frame_rate);
    if (s >= seconds) break;
    sum[static_cast<std::size_t>(s)] += frame_scores[f];
    ++count[static_cast<std::size_t>(s)];
  }
  for (std::size_t s = 0; s < sum.size(); ++s) {
    if (count[s] > 0) sum[s] /= count[s];
  }
  return sum;
}

TimeSaliency time_saliency(const SaliencyMap& map, double frame_rate) {
  TimeSaliency ts;
  ts.frame_scores.resize(map.map.rows());
  for (std::size_t f = 0; f < map.map.rows(); ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < map.map.cols(); ++c) acc += map.map(f, c);
    ts.frame_scores[f] = acc;
  }
  ts.second_scores = seconds_from_frames(ts.frame_scores, static_cast<int>(kClipSeconds), frame_rate);
  return ts;
}

std::string frame_saliency_csv(const TimeSaliency& ts) {
  std::ostringstream out;
  out << "frame_index,score\n";
  char buf[64];
  for (std::size_t i = 0; i < ts.frame_scores.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, ts.frame_scores[i]);
    out << buf;
  }
  return out.str();
}

std::string second_saliency_csv(const TimeSaliency& ts) {
  std::ostringstream out;
  out << "second_index,score\n";
  char buf[64];
  for (std::size_t i = 0; i < ts.second_scores.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, ts.second_scores[i]);
    out << buf;
  }
  return out.str();
}

}  // namespace ragaxai

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

#include <numeric>
#include <random>

#include "ragaxai/gradcam.hpp"
#include "ragaxai/model.hpp"

namespace ragaxai {
namespace {

using nd::Tensor;
using nd::Var;

std::vector<float> values(const SaliencyMap& m) { return m.map.data(); }

ConvAttribution uniform_attr(int frames, int bins, int maps, double a, double g) {
  ConvAttribution attr;
  attr.activations = Tensor<double>({frames, bins, maps}, a);
  attr.gradients = Tensor<double>({frames, bins, maps}, g);
  return attr;
}

TEST(GradCam, SingleMapUniformGradient) {
  auto attr = uniform_attr(4, 3, 1, 0.0, 0.5);
  for (std::size_t i = 0; i < attr.activations.size(); ++i) attr.activations[i] = static_cast<double>(i) - 3.0;
  const auto map = gradcam_map(attr);
  for (std::size_t i = 0; i < map.map.size(); ++i) {
    EXPECT_NEAR(map.map.data()[i], std::max(0.0, 0.5 * attr.activations[i]), 1e-6);
  }
}

TEST(GradCam, NegativeGradientsAndCancellation) {
  auto neg = uniform_attr(5, 2, 3, 1.0, -0.2);
  for (float v : values(gradcam_map(neg))) EXPECT_EQ(v, 0.0f);
  for (float v : values(gradcampp_map(neg))) EXPECT_EQ(v, 0.0f);

  auto pair = uniform_attr(5, 2, 2, 1.5, 0.3);
  for (std::size_t i = 1; i < pair.gradients.size(); i += 2) pair.gradients[i] = -0.3;
  for (float v : values(gradcam_map(pair))) EXPECT_EQ(v, 0.0f);
}

TEST(GradCamPlusPlus, ClosedFormSingleMap) {
  const int frames = 6, bins = 3;
  const double a = 0.8, g = 0.25;
  const auto attr = uniform_attr(frames, bins, 1, a, g);
  const double m = frames * bins;
  const double w = g * g / (2 * g * g + m * a * g * g * g);
  const double expected = m * w * g * a;
  for (float v : values(gradcampp_map(attr))) EXPECT_NEAR(v, expected, 1e-6);
}

TEST(GradCamPlusPlus, IgnoresNegativeGradientCells) {
  auto attr = uniform_attr(2, 1, 1, 1.0, 0.5);
  attr.gradients[1] = -4.0;
  const double w = 0.25 / (2 * 0.25 + 2.0 * 0.125);
  for (float v : values(gradcampp_map(attr))) EXPECT_NEAR(v, w * 0.5, 1e-6);
}

TEST(GradCamPlusPlus, ShapeMismatchThrows) {
  auto attr = uniform_attr(2, 1, 1, 1.0, 0.5);
  attr.gradients = Tensor<double>({2, 1, 2});
  EXPECT_THROW(gradcampp_map(attr), Error);
}

// Weighted sum of a [1, T, F, K] tensor with a fixed selector.
Var<double> masked_mean(nd::Graph<double>& g, Var<double> a, const Tensor<double>& selector, double count) {
  return nd::scale(nd::sum(nd::mul(a, g.constant(selector))), 1.0 / count);
}

// Two logits: class 0 reads map 0 inside frames [t0, t1), class 1 reads map 1
// everywhere, negatively.
AttributionHead window_head(int frames, int bins, int maps, int t0, int t1) {
  Tensor<double> sel0({1, frames, bins, maps}), sel1({1, frames, bins, maps});
  for (int t = 0; t < frames; ++t) {
    for (int f = 0; f < bins; ++f) {
      const auto base = (static_cast<std::size_t>(t) * bins + f) * maps;
      if (t >= t0 && t < t1) sel0[base] = 1.0;
      sel1[base + 1] = -1.0;
    }
  }
  return [=](nd::Graph<double>& g, Var<double> a) {
    auto y0 = nd::reshape(masked_mean(g, a, sel0, (t1 - t0) * bins), {1, 1});
    auto y1 = nd::reshape(masked_mean(g, a, sel1, frames * bins), {1, 1});
    auto zero = g.constant(Tensor<double>({2}));
    return nd::add(nd::dense(y0, g.constant(Tensor<double>({1, 2}, {1.0, 0.0})), zero),
                   nd::dense(y1, g.constant(Tensor<double>({1, 2}, {0.0, 1.0})), zero));
  };
}

Tensor<double> planted_activations(int frames, int bins, int maps, int t0, int t1, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor<double> a({frames, bins, maps});
  for (int t = 0; t < frames; ++t) {
    for (int f = 0; f < bins; ++f) {
      for (int k = 0; k < maps; ++k) {
        double v = u(rng);
        if (k == 0 && t >= t0 && t < t1) v += 4.0;
        a[(static_cast<std::size_t>(t) * bins + f) * maps + k] = v;
      }
    }
  }
  return a;
}

TEST(GradCamPlusPlus, PlantedWindowCarriesTheMass) {
  const int frames = 300, bins = 3, maps = 4, t0 = 120, t1 = 150;
  const auto acts = planted_activations(frames, bins, maps, t0, t1, 3);
  const auto attr = attribution_from_head(acts, window_head(frames, bins, maps, t0, t1), 0);
  for (int t = 0; t < frames; ++t) {
    const double g = attr.gradients[static_cast<std::size_t>(t) * bins * maps];
    EXPECT_NEAR(g, (t >= t0 && t < t1) ? 1.0 / ((t1 - t0) * bins) : 0.0, 1e-12);
  }
  const auto map = gradcampp_map(attr);
  double inside = 0, total = 0;
  for (int t = 0; t < frames; ++t) {
    for (int f = 0; f < bins; ++f) {
      const double v = map.map(static_cast<std::size_t>(t), static_cast<std::size_t>(f));
      EXPECT_GE(v, 0.0);
      total += v;
      if (t >= t0 && t < t1) inside += v;
    }
  }
  EXPECT_GE(inside / total, 2.0 * (t1 - t0) / frames);

  // Class 1 only has negative gradients: nothing to highlight.
  const auto other = gradcampp_map(attribution_from_head(acts, window_head(frames, bins, maps, t0, t1), 1));
  for (float v : values(other)) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(attribution_from_head(acts, window_head(frames, bins, maps, t0, t1), 2), Error);
}

TEST(GradCamPlusPlus, InvariantToGradientScale) {
  // Scaling the logit by c > 0 scales every gradient by c; the weights then
  // change but the map's ranking must not.
  const auto acts = planted_activations(90, 3, 4, 10, 40, 5);
  const auto attr = attribution_from_head(acts, window_head(90, 3, 4, 10, 40), 0);
  ConvAttribution scaled = attr;
  for (double& v : scaled.gradients.values()) v *= 3.0;
  const auto m1 = time_saliency(gradcampp_map(attr), 3.0);
  const auto m2 = time_saliency(gradcampp_map(scaled), 3.0);
  std::vector<std::size_t> r1(m1.frame_scores.size()), r2(r1.size());
  std::iota(r1.begin(), r1.end(), 0);
  std::iota(r2.begin(), r2.end(), 0);
  std::stable_sort(r1.begin(), r1.end(), [&](auto a, auto b) { return m1.frame_scores[a] > m1.frame_scores[b]; });
  std::stable_sort(r2.begin(), r2.end(), [&](auto a, auto b) { return m2.frame_scores[a] > m2.frame_scores[b]; });
  EXPECT_EQ(r1, r2);
}

SaliencyMap frame_map(const std::function<float(std::size_t)>& value) {
  SaliencyMap m{Matrix(938, 3), "test"};
  for (std::size_t f = 0; f < 938; ++f) {
    for (std::size_t c = 0; c < 3; ++c) m.map(f, c) = value(f);
  }
  return m;
}

TEST(TimeSaliency, Binning) {
  const auto uniform = time_saliency(frame_map([](std::size_t) { return 1.0f; }));
  ASSERT_EQ(uniform.second_scores.size(), 30u);
  for (double v : uniform.second_scores) EXPECT_DOUBLE_EQ(v, 3.0);

  const auto five = time_saliency(frame_map([](std::size_t f) { return second_of_frame(f) == 5 ? 1.0f : 0.0f; }));
  EXPECT_EQ(std::max_element(five.second_scores.begin(), five.second_scores.end()) - five.second_scores.begin(), 5);

  const auto ramp = time_saliency(frame_map([](std::size_t f) { return static_cast<float>(f); }));
  for (std::size_t s = 1; s < 30; ++s) EXPECT_GT(ramp.second_scores[s], ramp.second_scores[s - 1]);
  EXPECT_EQ(ramp.frame_scores.size(), 938u);
}

ModelConfig tiny_config() {
  ModelConfig c = make_config(Variant::kCN1_LSTM_T, 3);
  c.conv_channels = {4, 6};
  c.lstm_hidden = 5;
  c.input_frames = 40;
  return c;
}

Matrix random_input(std::size_t frames, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Matrix m(frames, 12);
  for (float& v : m.data()) v = u(rng);
  return m;
}

TEST(ConvAttribution, ShapesAndClassSpecificity) {
  const auto model = build_model(tiny_config(), 7);
  const Matrix x = random_input(40, 1);
  const auto a0 = conv_attribution(model, x, 0);
  const auto a1 = conv_attribution(model, x, 1);
  EXPECT_EQ(a0.activations.shape(), (nd::Shape{40, 6, 6}));
  EXPECT_EQ(a0.activations, a1.activations);
  EXPECT_NE(a0.gradients, a1.gradients);
  EXPECT_THROW(conv_attribution(model, x, 3), Error);
  EXPECT_THROW(conv_attribution(model, x, -1), Error);
}

TEST(ConvAttribution, ZeroDenseMeansZeroGradient) {
  auto model = build_model(tiny_config(), 7);
  model.params.dense_weights.value.fill(0.0f);
  const auto attr = conv_attribution(model, random_input(40, 2), 1);
  for (double g : attr.gradients.values()) EXPECT_EQ(g, 0.0);
  for (float v : values(gradcampp_map(attr))) EXPECT_EQ(v, 0.0f);
}

TEST(ConvAttribution, AgreesWithDoublePrecisionHead) {
  const auto model = build_model(tiny_config(), 9);
  const auto attr = conv_attribution(model, random_input(40, 3), 2);
  const auto params = model.params.cast<double>();
  const ModelConfig cfg = model.config;
  AttributionHead head = [&](nd::Graph<double>& g, Var<double> a) { return classifier_head(g, cfg, params, a); };
  const auto exact = attribution_from_head(attr.activations, head, 2);
  double max_err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < exact.gradients.size(); ++i) {
    max_err = std::max(max_err, std::abs(exact.gradients[i] - attr.gradients[i]));
    scale = std::max(scale, std::abs(exact.gradients[i]));
  }
  EXPECT_LE(max_err, 1e-4 * std::max(scale, 1e-6));
}

}  // namespace
}  // namespace ragaxai

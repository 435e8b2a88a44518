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

#include <cmath>
#include <numeric>
#include <set>

#include "ragaxai/model.hpp"
#include "ragaxai/slime.hpp"

namespace ragaxai {
namespace {

// Reads back which seconds survived the perturbation.
std::vector<uint8_t> surviving_seconds(const Matrix& z) {
  std::vector<uint8_t> kept(30, 0);
  for (std::size_t f = 0; f < z.rows(); ++f) {
    if (z(f, 0) != 0.0f) kept[static_cast<std::size_t>(second_of_frame(f))] = 1;
  }
  return kept;
}

// Two-class classifier whose class-0 probability is a linear function of the
// retained seconds.
BatchClassifier linear_oracle(std::vector<double> weights, double bias) {
  return [=](const std::vector<Matrix>& batch) {
    std::vector<std::vector<float>> out;
    for (const Matrix& z : batch) {
      const auto kept = surviving_seconds(z);
      double p = bias;
      for (std::size_t j = 0; j < 30; ++j) p += weights[j] * kept[j];
      out.push_back({static_cast<float>(p), static_cast<float>(1.0 - p)});
    }
    return out;
  };
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

const Matrix kOnes(938, 12, 1.0f);

TEST(Masks, DeterministicAndBalanced) {
  const auto a = make_masks(150, 30, 11);
  const auto b = make_masks(150, 30, 11);
  EXPECT_EQ(a.masks, b.masks);
  EXPECT_NE(a.masks, make_masks(150, 30, 12).masks);
  double kept = 0;
  for (const auto& m : a.masks) {
    ASSERT_EQ(m.size(), 30u);
    EXPECT_TRUE(std::any_of(m.begin(), m.end(), [](uint8_t v) { return v == 1; }));
    kept += std::accumulate(m.begin(), m.end(), 0.0);
  }
  kept /= 150.0 * 30.0;
  EXPECT_GE(kept, 0.45);
  EXPECT_LE(kept, 0.55);
  EXPECT_EQ(make_masks(10, 1, 0).masks, std::vector<std::vector<uint8_t>>(10, {1}));
}

TEST(Perturb, Examples) {
  EXPECT_EQ(perturb(kOnes, std::vector<uint8_t>(30, 1)), kOnes);

  std::vector<uint8_t> only(30, 0);
  only[7] = 1;
  const Matrix z = perturb(kOnes, only);
  for (std::size_t f = 0; f < 938; ++f) {
    const bool keep = second_of_frame(f) == 7;
    ASSERT_EQ(z(f, 3), keep ? 1.0f : 0.0f) << f;
  }

  std::vector<uint8_t> half(30, 1);
  for (std::size_t j = 0; j < 30; j += 2) half[j] = 0;
  const Matrix h = perturb(kOnes, half);
  const double total = std::accumulate(h.data().begin(), h.data().end(), 0.0);
  const double share = 938.0 * 12 / 30;
  EXPECT_NEAR(total, 938.0 * 12 / 2, share);

  EXPECT_THROW(perturb(kOnes, std::vector<uint8_t>(29, 1)), Error);
}

TEST(KernelWeight, Values) {
  EXPECT_DOUBLE_EQ(kernel_weight(kOnes, kOnes, 2.0), 1.0);
  Matrix z = kOnes;
  z(0, 0) = 4.0f;  // distance 3
  EXPECT_NEAR(kernel_weight(kOnes, z, 3.0), std::exp(-1.0), 1e-12);
  EXPECT_THROW(kernel_weight(kOnes, z, 0.0), Error);
}

TEST(FitExplanation, SingleSuperPixelOracle) {
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t j = static_cast<std::size_t>(trial % 30);
    std::vector<double> w(30, 0.0);
    w[j] = 1.0;
    SlimeConfig cfg;
    cfg.seed = static_cast<uint64_t>(1000 + trial);
    const auto e = fit_explanation(linear_oracle(w, 0.0), kOnes, 0, make_masks(150, 30, cfg.seed), cfg);
    if (argmax(e.coefficients) == j) ++hits;
  }
  EXPECT_GE(hits, 95);
}

TEST(FitExplanation, ConstantClassifier) {
  SlimeConfig cfg;
  cfg.seed = 4;
  const auto e = fit_explanation(linear_oracle(std::vector<double>(30, 0.0), 0.37), kOnes, 0,
                                 make_masks(150, 30, 4), cfg);
  for (double c : e.coefficients) EXPECT_LE(std::abs(c), 1e-6);
  EXPECT_NEAR(e.intercept, 0.37, 1e-6);
}

TEST(FitExplanation, TwoSuperPixels) {
  std::vector<double> w(30, 0.0);
  w[3] = 0.5;
  w[7] = 0.5;
  SlimeConfig cfg;
  cfg.seed = 8;
  const auto e = fit_explanation(linear_oracle(w, 0.0), kOnes, 0, make_masks(150, 30, 8), cfg);
  std::vector<std::size_t> order(30);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return e.coefficients[a] > e.coefficients[b]; });
  EXPECT_EQ((std::set<std::size_t>{order[0], order[1]}), (std::set<std::size_t>{3, 7}));
  EXPECT_NEAR(e.coefficients[3], 0.5, 0.01);
  EXPECT_GT(e.r2, 0.99);
}

TEST(FitExplanation, BinaryTarget) {
  std::vector<double> w(30, 0.0);
  w[12] = 0.8;
  SlimeConfig cfg;
  cfg.seed = 2;
  cfg.target = SlimeTarget::kBinary;
  const auto e = fit_explanation(linear_oracle(w, 0.1), kOnes, 0, make_masks(150, 30, 2), cfg);
  EXPECT_EQ(argmax(e.coefficients), 12u);
  EXPECT_EQ(e.mode, SlimeTarget::kBinary);
  EXPECT_EQ(parse_slime_target(to_string(SlimeTarget::kBinary)), SlimeTarget::kBinary);
}

TEST(FitExplanation, DeterministicBytes) {
  std::vector<double> w(30);
  for (std::size_t j = 0; j < 30; ++j) w[j] = 0.01 * static_cast<double>(j % 7);
  SlimeConfig cfg;
  cfg.seed = 77;
  const auto a = fit_explanation(linear_oracle(w, 0.05), kOnes, 0, make_masks(150, 30, 77), cfg);
  const auto b = fit_explanation(linear_oracle(w, 0.05), kOnes, 0, make_masks(150, 30, 77), cfg);
  EXPECT_EQ(slime_coefficients_csv(a), slime_coefficients_csv(b));
}

TEST(FitExplanation, RealModelIsDeterministic) {
  ModelConfig c = make_config(Variant::kCN1_LSTM_T, 3);
  c.conv_channels = {2, 3};
  c.lstm_hidden = 3;
  const auto model = build_model(c, 5);
  SlimeConfig cfg;
  cfg.samples = 20;
  cfg.seed = 3;
  const auto a = fit_explanation(model, kOnes, 1, cfg);
  const auto b = fit_explanation(model, kOnes, 1, cfg);
  EXPECT_EQ(a.coefficients, b.coefficients);
  EXPECT_EQ(a.coefficients.size(), 30u);
  EXPECT_GT(a.sigma, 0.0);
}

TEST(SlimeTimeSaliency, Upsampling) {
  SlimeExplanation e;
  e.coefficients.assign(30, 0.0);
  e.coefficients[4] = 0.7;
  const auto ts = slime_time_saliency(e);
  ASSERT_EQ(ts.frame_scores.size(), 938u);
  for (std::size_t f = 0; f < 938; ++f) {
    EXPECT_EQ(ts.frame_scores[f], second_of_frame(f) == 4 ? 0.7 : 0.0);
  }
  e.coefficients.assign(30, -0.2);
  for (double v : slime_time_saliency(e).frame_scores) EXPECT_EQ(v, -0.2);
  EXPECT_EQ(slime_time_saliency(e).second_scores, e.coefficients);
}

}  // namespace
}  // namespace ragaxai

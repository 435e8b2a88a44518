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
#include "ragaxai/slime.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace ragaxai {

MaskSet make_masks(int n, int d, uint64_t seed) {
  if (n < 1 || d < 1) throw Error("make_masks: n and d must be >= 1");
  MaskSet set;
  set.seed = seed;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    std::vector<uint8_t> mask(static_cast<std::size_t>(d));
    do {
      for (auto& m : mask) m = static_cast<uint8_t>(rng() & 1u);
    } while (std::all_of(mask.begin(), mask.end(), [](uint8_t m) { return m == 0; }));
    set.masks.push_back(std::move(mask));
  }
  return set;
}

Matrix perturb(const Matrix& input, const std::vector<uint8_t>& mask, double frame_rate) {
  const int last = second_of_frame(input.rows() == 0 ? 0 : input.rows() - 1, frame_rate);
  if (input.rows() == 0 || static_cast<std::size_t>(last) >= mask.size()) {
    throw Error("perturb: mask of " + std::to_string(mask.size()) + " super-pixels does not cover " +
                std::to_string(input.rows()) + " frames");
  }
  Matrix out = input;
  for (std::size_t f = 0; f < out.rows(); ++f) {
    if (mask[static_cast<std::size_t>(second_of_frame(f, frame_rate))] == 0) {
      std::fill(out.row(f), out.row(f) + out.cols(), 0.0f);
    }
  }
  return out;
}

namespace {

double distance(const Matrix& x, const Matrix& z) {
  if (x.rows() != z.rows() || x.cols() != z.cols()) throw Error("kernel_weight: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x.data()[i]) - z.data()[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double weight_from_distance(double d, double sigma) { return std::exp(-(d * d) / (sigma * sigma)); }

}  // namespace

double kernel_weight(const Matrix& x, const Matrix& z, double sigma) {
  if (!(sigma > 0.0)) throw Error("kernel_weight: sigma must be positive");
  return weight_from_distance(distance(x, z), sigma);
}

SlimeExplanation fit_explanation(const BatchClassifier& classifier, const Matrix& input, int target_class,
                                 const MaskSet& masks, const SlimeConfig& config) {
  if (masks.masks.empty()) throw Error("fit_explanation: no masks");
  if (config.ridge <= 0.0) throw Error("fit_explanation: ridge penalty must be positive");
  const std::size_t n = masks.masks.size();
  const int d = masks.super_pixels();

  std::vector<Matrix> perturbed;
  perturbed.reserve(n);
  for (const auto& m : masks.masks) perturbed.push_back(perturb(input, m));
  const auto probs = classifier(perturbed);
  if (probs.size() != n) throw Error("fit_explanation: classifier returned the wrong number of rows");

  Eigen::VectorXd y(static_cast<Eigen::Index>(n)), dist(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = probs[i];
    if (target_class < 0 || static_cast<std::size_t>(target_class) >= p.size()) {
      throw Error("fit_explanation: unknown class index " + std::to_string(target_class));
    }
    const auto e = static_cast<Eigen::Index>(i);
    if (config.target == SlimeTarget::kBinary) {
      const auto top = std::max_element(p.begin(), p.end()) - p.begin();
      y(e) = top == target_class ? 1.0 : 0.0;
    } else {
      y(e) = p[static_cast<std::size_t>(target_class)];
    }
    dist(e) = distance(input, perturbed[i]);
  }

  double sigma = 1.0;
  if (config.sigma) {
    sigma = *config.sigma;
    if (!(sigma > 0.0)) throw Error("fit_explanation: sigma must be positive");
  } else {
    std::vector<double> sorted(dist.data(), dist.data() + dist.size());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    const double median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    if (median > 0.0) sigma = median;
  }

  // Design matrix with a leading intercept column; the intercept is not penalized.
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), d + 1);
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    X(e, 0) = 1.0;
    for (int j = 0; j < d; ++j) X(e, j + 1) = masks.masks[i][static_cast<std::size_t>(j)];
    w(e) = weight_from_distance(dist(e), sigma);
  }
  Eigen::MatrixXd A = X.transpose() * w.asDiagonal() * X;
  for (int j = 1; j <= d; ++j) A(j, j) += config.ridge;
  const Eigen::VectorXd b = X.transpose() * w.asDiagonal() * y;
  Eigen::LDLT<Eigen::MatrixXd> solver(A);
  if (solver.info() != Eigen::Success) throw NumericError("fit_explanation: normal equations are singular");
  const Eigen::VectorXd beta = solver.solve(b);
  if (!beta.allFinite()) throw NumericError("fit_explanation: non-finite coefficients");

  SlimeExplanation out;
  out.intercept = beta(0);
  out.coefficients.assign(beta.data() + 1, beta.data() + 1 + d);
  out.target_class = target_class;
  out.sigma = sigma;
  out.mode = config.target;
  const double wsum = w.sum();
  const double ybar = w.dot(y) / wsum;
  const Eigen::VectorXd resid = y - X * beta;
  const double ss_res = w.dot(resid.cwiseAbs2());
  const double ss_tot = w.dot((y.array() - ybar).matrix().cwiseAbs2());
  out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res <= 1e-18 ? 1.0 : 0.0);
  return out;
}

SlimeExplanation fit_explanation(const TrainedModel& model, const Matrix& input, int target_class,
                                 const SlimeConfig& config) {
  const MaskSet masks = make_masks(config.samples, config.super_pixels, config.seed);
  BatchClassifier classify = [&model](const std::vector<Matrix>& batch) { return predict_batch(model, batch); };
  return fit_explanation(classify, input, target_class, masks, config);
}

TimeSaliency slime_time_saliency(const SlimeExplanation& expl, std::size_t frames, double frame_rate) {
  TimeSaliency ts;
  ts.second_scores = expl.coefficients;
  ts.frame_scores.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const auto s = static_cast<std::size_t>(second_of_frame(f, frame_rate));
    ts.frame_scores[f] = s < expl.coefficients.size() ? expl.coefficients[s] : 0.0;
  }
  return ts;
}

std::string slime_coefficients_csv(const SlimeExplanation& expl) {
  std::ostringstream out;
  out << "super_pixel_index,coefficient\n";
  char buf[64];
  for (std::size_t i = 0; i < expl.coefficients.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, expl.coefficients[i]);
    out << buf;
  }
  return out.str();
}

std::string to_string(SlimeTarget target) { return target == SlimeTarget::kBinary ? "binary" : "probability"; }

SlimeTarget parse_slime_target(const std::string& name) {
  if (name == "probability") return SlimeTarget::kProbability;
  if (name == "binary") return SlimeTarget::kBinary;
  throw Error("unknown slime target mode '" + name + "' (expected probability or binary)");
}

}  // namespace ragaxai

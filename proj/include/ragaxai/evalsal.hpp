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
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ragaxai/manifest.hpp"

namespace ragaxai {

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;
};

enum class ReportLevel { kChunk, kSong };

struct ClassificationReport {
  ReportLevel level = ReportLevel::kChunk;
  std::vector<ClassMetrics> classes;
  ClassMetrics macro_avg;     // label "macro avg"
  ClassMetrics weighted_avg;  // label "weighted avg"
  double accuracy = 0.0;
  int total = 0;

  // Fixed-width table: one row per class, then accuracy, macro and weighted
  // averages, two decimals.
  std::string to_text() const;
  std::string to_csv() const;
};

// Per-class P/R/F1 with the zero-division convention (metric = 0 when its
// denominator is 0) and support-weighted averages.
ClassificationReport classification_report(std::span<const int> predictions, std::span<const int> labels,
                                           const std::vector<std::string>& vocabulary,
                                           ReportLevel level = ReportLevel::kChunk);
double weighted_f1(std::span<const int> predictions, std::span<const int> labels, int num_classes);

// counts[true][predicted].
using ConfusionMatrix = std::vector<std::vector<int>>;
ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels, int num_classes);
std::string confusion_csv(const ConfusionMatrix& matrix, const std::vector<std::string>& vocabulary);

// Seconds s in [0, 30) whose overlap with the annotation is >= 0.5 s. An
// interval too short to reach half a second anywhere still marks the second
// it overlaps most, so no annotated interval disappears.
std::set<int> annotated_seconds(const ExpertAnnotation& annotation);

// Fraction of the t highest-scoring seconds (ties: earlier second first) that
// are annotated. t in [1, 10].
double precision_at_t(std::span<const double> second_scores, const std::set<int>& annotated, int t);

inline constexpr int kMaxTopSeconds = 10;

struct SaliencyEvalRecord {
  std::string clip_id;
  std::string method;  // "GC" or "SL"
  std::vector<double> precision;  // index t-1 for t = 1..10
  bool correct = false;
  double probability = 0.0;  // predicted-class softmax probability
};

SaliencyEvalRecord make_saliency_record(std::string clip_id, std::string method,
                                        std::span<const double> second_scores, const std::set<int>& annotated,
                                        bool correct, double probability);

struct SaliencyReport {
  std::vector<std::string> methods;
  std::vector<std::vector<double>> mean_precision;  // [t-1][method]
  std::vector<int> clips;                           // per method
  std::string to_text() const;
  std::string to_csv() const;
};

// Mean precision@t per method; methods appear in first-seen order.
SaliencyReport saliency_report(std::span<const SaliencyEvalRecord> records);

struct PrecisionBin {
  double lower = 0.0;
  double upper = 0.0;
  double mean_precision = 0.0;
  double accuracy = 0.0;
  int count = 0;
};

// Per-clip precision score used for binning: precision@t for t in [1, 10],
// or the mean over t = 1..10 when t = 0.
double record_precision(const SaliencyEvalRecord& record, int t = 0);

// Records binned by record_precision (bins [k*w, (k+1)*w), the last one
// closed); empty bins are omitted.
std::vector<PrecisionBin> precision_accuracy_bins(std::span<const SaliencyEvalRecord> records,
                                                  double bin_width = 0.05, int t = 0);
std::string bins_csv(std::span<const PrecisionBin> bins);

// Spearman rank correlation with average ranks for ties; 0 when either side
// has no variance.
double spearman(std::span<const double> x, std::span<const double> y);
double bins_spearman(std::span<const PrecisionBin> bins);

}  // namespace ragaxai

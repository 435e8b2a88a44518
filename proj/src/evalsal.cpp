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
#include "ragaxai/evalsal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace ragaxai {
namespace {

void check_inputs(std::span<const int> predictions, std::span<const int> labels, int num_classes) {
  if (predictions.empty()) throw Error("classification metrics: empty input");
  if (predictions.size() != labels.size()) {
    throw Error("classification metrics: " + std::to_string(predictions.size()) + " predictions for " +
                std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes || predictions[i] < 0 || predictions[i] >= num_classes) {
      throw Error("classification metrics: class index out of range at sample " + std::to_string(i));
    }
  }
}

double safe_div(double a, double b) { return b > 0.0 ? a / b : 0.0; }

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels, int num_classes) {
  check_inputs(predictions, labels, num_classes);
  ConfusionMatrix m(static_cast<std::size_t>(num_classes), std::vector<int>(static_cast<std::size_t>(num_classes)));
  for (std::size_t i = 0; i < labels.size(); ++i) ++m[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
  return m;
}

ClassificationReport classification_report(std::span<const int> predictions, std::span<const int> labels,
                                           const std::vector<std::string>& vocabulary, ReportLevel level) {
  const int n = static_cast<int>(vocabulary.size());
  const ConfusionMatrix m = confusion_matrix(predictions, labels, n);
  ClassificationReport r;
  r.level = level;
  r.total = static_cast<int>(labels.size());
  int correct = 0;
  for (int c = 0; c < n; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    int tp = m[uc][uc], predicted = 0, support = 0;
    for (int k = 0; k < n; ++k) {
      predicted += m[static_cast<std::size_t>(k)][uc];
      support += m[uc][static_cast<std::size_t>(k)];
    }
    correct += tp;
    ClassMetrics cm;
    cm.label = vocabulary[uc];
    cm.precision = safe_div(tp, predicted);
    cm.recall = safe_div(tp, support);
    cm.f1 = safe_div(2.0 * cm.precision * cm.recall, cm.precision + cm.recall);
    cm.support = support;
    r.classes.push_back(cm);
  }
  r.accuracy = static_cast<double>(correct) / r.total;
  r.macro_avg.label = "macro avg";
  r.weighted_avg.label = "weighted avg";
  for (const auto& cm : r.classes) {
    r.macro_avg.precision += cm.precision / n;
    r.macro_avg.recall += cm.recall / n;
    r.macro_avg.f1 += cm.f1 / n;
    const double w = static_cast<double>(cm.support) / r.total;
    r.weighted_avg.precision += w * cm.precision;
    r.weighted_avg.recall += w * cm.recall;
    r.weighted_avg.f1 += w * cm.f1;
  }
  r.macro_avg.support = r.weighted_avg.support = r.total;
  return r;
}

double weighted_f1(std::span<const int> predictions, std::span<const int> labels, int num_classes) {
  std::vector<std::string> vocab(static_cast<std::size_t>(num_classes));
  return classification_report(predictions, labels, vocab).weighted_avg.f1;
}

std::string ClassificationReport::to_text() const {
  std::size_t width = std::string("weighted avg").size();
  for (const auto& c : classes) width = std::max(width, c.label.size());
  const int w = static_cast<int>(width);
  std::ostringstream out;
  out << fmt("%*s %9s %9s %9s %9s\n\n", w, "", "precision", "recall", "f1-score", "support");
  auto row = [&](const ClassMetrics& c) {
    out << fmt("%*s %9.2f %9.2f %9.2f %9d\n", w, c.label.c_str(), c.precision, c.recall, c.f1, c.support);
  };
  for (const auto& c : classes) row(c);
  out << '\n' << fmt("%*s %9s %9s %9.2f %9d\n", w, "accuracy", "", "", accuracy, total);
  row(macro_avg);
  row(weighted_avg);
  return out.str();
}

std::string ClassificationReport::to_csv() const {
  std::ostringstream out;
  out << "label,precision,recall,f1,support\n";
  auto row = [&](const ClassMetrics& c) {
    out << c.label << fmt(",%.6f,%.6f,%.6f,%d\n", c.precision, c.recall, c.f1, c.support);
  };
  for (const auto& c : classes) row(c);
  out << "accuracy" << fmt(",,,%.6f,%d\n", accuracy, total);
  row(macro_avg);
  row(weighted_avg);
  return out.str();
}

std::string confusion_csv(const ConfusionMatrix& matrix, const std::vector<std::string>& vocabulary) {
  std::ostringstream out;
  out << "true\\pred";
  for (const auto& v : vocabulary) out << ',' << v;
  out << '\n';
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << vocabulary.at(i);
    for (int v : matrix[i]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

std::set<int> annotated_seconds(const ExpertAnnotation& annotation) {
  std::set<int> out;
  for (const auto& iv : annotation.intervals) {
    int best = -1;
    double best_overlap = 0.0;
    bool any = false;
    for (int s = 0; s < static_cast<int>(kClipSeconds); ++s) {
      const double overlap = std::min(iv.end, s + 1.0) - std::max(iv.start, static_cast<double>(s));
      if (overlap >= 0.5) {
        out.insert(s);
        any = true;
      }
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best = s;
      }
    }
    if (!any && best >= 0) out.insert(best);
  }
  return out;
}

double precision_at_t(std::span<const double> second_scores, const std::set<int>& annotated, int t) {
  if (t < 1 || t > kMaxTopSeconds) throw Error("precision_at_t: t must be in [1, 10], got " + std::to_string(t));
  if (static_cast<std::size_t>(t) > second_scores.size()) throw Error("precision_at_t: fewer scores than t");
  std::vector<int> order(second_scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return second_scores[static_cast<std::size_t>(a)] > second_scores[static_cast<std::size_t>(b)];
  });
  int hits = 0;
  for (int i = 0; i < t; ++i) hits += annotated.count(order[static_cast<std::size_t>(i)]) ? 1 : 0;
  return static_cast<double>(hits) / t;
}

SaliencyEvalRecord make_saliency_record(std::string clip_id, std::string method,
                                        std::span<const double> second_scores, const std::set<int>& annotated,
                                        bool correct, double probability) {
  SaliencyEvalRecord r{std::move(clip_id), std::move(method), {}, correct, probability};
  for (int t = 1; t <= kMaxTopSeconds; ++t) r.precision.push_back(precision_at_t(second_scores, annotated, t));
  return r;
}

SaliencyReport saliency_report(std::span<const SaliencyEvalRecord> records) {
  SaliencyReport rep;
  std::vector<std::vector<double>> sums;
  for (const auto& r : records) {
    if (r.precision.size() != kMaxTopSeconds) throw Error("saliency_report: record without 10 precision values");
    auto it = std::find(rep.methods.begin(), rep.methods.end(), r.method);
    std::size_t m = static_cast<std::size_t>(it - rep.methods.begin());
    if (it == rep.methods.end()) {
      rep.methods.push_back(r.method);
      rep.clips.push_back(0);
      sums.emplace_back(kMaxTopSeconds, 0.0);
    }
    ++rep.clips[m];
    for (int t = 0; t < kMaxTopSeconds; ++t) sums[m][static_cast<std::size_t>(t)] += r.precision[static_cast<std::size_t>(t)];
  }
  rep.mean_precision.assign(kMaxTopSeconds, std::vector<double>(rep.methods.size()));
  for (std::size_t m = 0; m < rep.methods.size(); ++m) {
    for (std::size_t t = 0; t < kMaxTopSeconds; ++t) rep.mean_precision[t][m] = sums[m][t] / rep.clips[m];
  }
  return rep;
}

std::string SaliencyReport::to_text() const {
  std::ostringstream out;
  out << fmt("%-10s", "top-t");
  for (const auto& m : methods) out << fmt(" %8s", m.c_str());
  out << '\n';
  for (std::size_t t = 0; t < mean_precision.size(); ++t) {
    out << fmt("%-10s", (std::to_string(t + 1) + (t == 0 ? " second" : " seconds")).c_str());
    for (double v : mean_precision[t]) out << fmt(" %8.2f", v);
    out << '\n';
  }
  return out.str();
}

std::string SaliencyReport::to_csv() const {
  std::ostringstream out;
  out << "t";
  for (const auto& m : methods) out << ',' << m;
  out << '\n';
  for (std::size_t t = 0; t < mean_precision.size(); ++t) {
    out << t + 1;
    for (double v : mean_precision[t]) out << fmt(",%.6f", v);
    out << '\n';
  }
  return out.str();
}

double record_precision(const SaliencyEvalRecord& record, int t) {
  if (t < 0 || t > kMaxTopSeconds) throw Error("record_precision: t must be in [0, 10]");
  if (record.precision.size() != kMaxTopSeconds) throw Error("record_precision: record without 10 precision values");
  if (t > 0) return record.precision[static_cast<std::size_t>(t - 1)];
  return std::accumulate(record.precision.begin(), record.precision.end(), 0.0) / kMaxTopSeconds;
}

std::vector<PrecisionBin> precision_accuracy_bins(std::span<const SaliencyEvalRecord> records, double bin_width,
                                                  int t) {
  if (bin_width <= 0.0 || bin_width > 1.0) throw Error("precision_accuracy_bins: bin width must be in (0, 1]");
  const int nbins = static_cast<int>(std::ceil(1.0 / bin_width - 1e-9));
  std::vector<PrecisionBin> bins(static_cast<std::size_t>(nbins));
  std::vector<int> correct(static_cast<std::size_t>(nbins));
  for (const auto& r : records) {
    const double p = record_precision(r, t);
    // Small epsilon so that values like 0.3 (=3/10) land in [0.30, 0.35).
    int k = std::clamp(static_cast<int>(std::floor(p / bin_width + 1e-9)), 0, nbins - 1);
    auto& b = bins[static_cast<std::size_t>(k)];
    b.mean_precision += p;
    ++b.count;
    correct[static_cast<std::size_t>(k)] += r.correct ? 1 : 0;
  }
  std::vector<PrecisionBin> out;
  for (int k = 0; k < nbins; ++k) {
    auto b = bins[static_cast<std::size_t>(k)];
    if (b.count == 0) continue;
    b.lower = k * bin_width;
    b.upper = std::min(1.0, (k + 1) * bin_width);
    b.mean_precision /= b.count;
    b.accuracy = static_cast<double>(correct[static_cast<std::size_t>(k)]) / b.count;
    out.push_back(b);
  }
  return out;
}

std::string bins_csv(std::span<const PrecisionBin> bins) {
  std::ostringstream out;
  out << "bin_lower,bin_upper,mean_precision,accuracy,count\n";
  for (const auto& b : bins) {
    out << fmt("%.2f,%.2f,%.6f,%.6f,%d\n", b.lower, b.upper, b.mean_precision, b.accuracy, b.count);
  }
  return out.str();
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("spearman: length mismatch");
  if (x.size() < 2) return 0.0;
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double bins_spearman(std::span<const PrecisionBin> bins) {
  std::vector<double> p, a;
  for (const auto& b : bins) {
    p.push_back(b.mean_precision);
    a.push_back(b.accuracy);
  }
  return spearman(p, a);
}

}  // namespace ragaxai

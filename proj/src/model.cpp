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
#include "ragaxai/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "ragaxai/dsp.hpp"
#include "ragaxai/evalsal.hpp"
#include "ragaxai/manifest.hpp"

namespace ragaxai {

namespace {

constexpr int kInferenceBatch = 8;

struct VariantName {
  Variant variant;
  const char* name;
};
constexpr VariantName kVariantNames[] = {
    {Variant::kCN1_T, "CN1+T"},
    {Variant::kCN1_LSTM_T, "CN1+LSTM+T"},
    {Variant::kCN2_LSTM, "CN2+LSTM"},
    {Variant::kCN2_LSTM_T, "CN2+LSTM+T"},
};

bool is_cn2(Variant v) { return v == Variant::kCN2_LSTM || v == Variant::kCN2_LSTM_T; }

nd::Tensor<float> normal_tensor(nd::Shape shape, double stddev, std::mt19937_64& rng) {
  nd::Tensor<float> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.values()) v = static_cast<float>(dist(rng));
  return t;
}

nd::Tensor<float> uniform_tensor(nd::Shape shape, double limit, std::mt19937_64& rng) {
  nd::Tensor<float> t(std::move(shape));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : t.values()) v = static_cast<float>(dist(rng));
  return t;
}

int argmax(std::span<const float> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::string to_string(Variant variant) {
  for (const auto& v : kVariantNames) {
    if (v.variant == variant) return v.name;
  }
  throw Error("unknown model variant");
}

Variant parse_variant(std::string_view name) {
  for (const auto& v : kVariantNames) {
    if (name == v.name) return v.variant;
  }
  throw Error("unknown model variant '" + std::string(name) + "' (expected CN1+T, CN1+LSTM+T, CN2+LSTM, CN2+LSTM+T)");
}

int ModelConfig::final_bins() const {
  int f = input_bins;
  for (std::size_t i = 0; i + 1 < freq_pools.size(); ++i) f /= freq_pools[i];
  return f;
}

void ModelConfig::validate() const {
  if (num_classes < 2) throw Error("model config: num_classes must be >= 2");
  if (conv_channels.empty() || conv_channels.size() != freq_pools.size()) {
    throw Error("model config: conv_channels and freq_pools must be non-empty and of equal length");
  }
  for (int c : conv_channels) {
    if (c < 1) throw Error("model config: channel counts must be positive");
  }
  int f = input_bins;
  for (int p : freq_pools) {
    if (p < 1) throw Error("model config: pool widths must be positive");
    f /= p;
    if (f < 1) throw Error("model config: pooling leaves no frequency bins");
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) throw Error("model config: kernel_size must be odd");
  if (input_frames < 1 || input_bins < 1) throw Error("model config: input shape must be positive");
  if (uses_lstm() && lstm_hidden < 1) throw Error("model config: lstm_hidden must be positive");
  if (is_cn2(variant) && conv_channels.back() != 256) {
    throw Error("model config: CN2 variants end with 256 feature maps, got " + std::to_string(conv_channels.back()));
  }
  if (tonic_normalize != (variant != Variant::kCN2_LSTM)) {
    throw Error("model config: tonic_normalize flag does not match variant " + to_string(variant));
  }
}

ModelConfig make_config(Variant variant, int num_classes) {
  ModelConfig c;
  c.variant = variant;
  c.num_classes = num_classes;
  c.tonic_normalize = variant != Variant::kCN2_LSTM;
  if (!is_cn2(variant)) {
    c.conv_channels = {16, 32};
    c.freq_pools = {2, 2};
  }
  c.validate();
  return c;
}

TrainedModel build_model(const ModelConfig& config, uint64_t seed, std::vector<std::string> vocabulary) {
  config.validate();
  if (vocabulary.empty()) {
    for (int i = 0; i < config.num_classes; ++i) vocabulary.push_back("class_" + std::to_string(i));
  }
  if (static_cast<int>(vocabulary.size()) != config.num_classes) {
    throw Error("build_model: vocabulary has " + std::to_string(vocabulary.size()) + " labels for " +
                std::to_string(config.num_classes) + " classes");
  }
  TrainedModel m;
  m.config = config;
  m.vocabulary = std::move(vocabulary);
  std::mt19937_64 rng(seed);
  auto& p = m.params;
  const int k = config.kernel_size;
  int cin = 1;
  for (std::size_t i = 0; i < config.conv_channels.size(); ++i) {
    const int cout = config.conv_channels[i];
    const std::string prefix = "conv" + std::to_string(i + 1) + ".";
    ConvBlockParams<float> b;
    b.kernel = {prefix + "kernel", normal_tensor({k, k, cin, cout}, std::sqrt(2.0 / (k * k * cin)), rng)};
    b.bias = {prefix + "bias", nd::Tensor<float>({cout})};
    b.gamma = {prefix + "bn.gamma", nd::Tensor<float>({cout}, 1.0f)};
    b.beta = {prefix + "bn.beta", nd::Tensor<float>({cout})};
    b.running_mean = {prefix + "bn.running_mean", nd::Tensor<float>({cout}), false};
    b.running_var = {prefix + "bn.running_var", nd::Tensor<float>({cout}, 1.0f), false};
    p.blocks.push_back(std::move(b));
    cin = cout;
  }
  int pooled_bins = config.final_bins() / config.freq_pools.back();
  int features = pooled_bins * config.final_channels();
  if (config.uses_lstm()) {
    const int h = config.lstm_hidden;
    p.lstm_input = {"lstm.input_weights", uniform_tensor({features, 4 * h}, std::sqrt(6.0 / (features + 4 * h)), rng)};
    p.lstm_recurrent = {"lstm.recurrent_weights", uniform_tensor({h, 4 * h}, std::sqrt(6.0 / (5 * h)), rng)};
    nd::Tensor<float> bias({4 * h});
    // Chrono initialization: forget bias log(u), u ~ U(1, T - 1), input bias
    // its negative, so gate time constants span up to the clip length.
    std::uniform_real_distribution<double> horizon(1.0, std::max(2.0, config.input_frames - 1.0));
    for (int j = 0; j < h; ++j) {
      const auto forget = static_cast<float>(std::log(horizon(rng)));
      bias[static_cast<std::size_t>(h + j)] = forget;
      bias[static_cast<std::size_t>(j)] = -forget;
    }
    p.lstm_bias = {"lstm.bias", std::move(bias)};
    features = h;
  } else {
    features *= config.input_frames;
  }
  const int n = config.num_classes;
  p.dense_weights = {"dense.weights", uniform_tensor({features, n}, std::sqrt(6.0 / (features + n)), rng)};
  p.dense_bias = {"dense.bias", nd::Tensor<float>({n})};
  return m;
}

Matrix prepare_input(const Matrix& raw_chroma, int tonic, const ModelConfig& config) {
  if (raw_chroma.cols() != static_cast<std::size_t>(config.input_bins)) {
    throw Error("prepare_input: expected " + std::to_string(config.input_bins) + " chroma bins, got " +
                std::to_string(raw_chroma.cols()));
  }
  if (tonic < 0 || tonic > 11) throw Error("prepare_input: tonic must be a pitch class in [0, 11]");
  Matrix out = config.tonic_normalize ? dsp::rotate_pitch_classes(raw_chroma, kReferencePitchClass - tonic)
                                      : raw_chroma;
  // Per-frame max normalization; frames without energy stay zero.
  for (std::size_t r = 0; r < out.rows(); ++r) {
    float* row = out.row(r);
    const float peak = *std::max_element(row, row + out.cols());
    if (!std::isfinite(peak)) throw NumericError("prepare_input: non-finite chroma at frame " + std::to_string(r));
    if (peak > 1e-10f) {
      for (std::size_t c = 0; c < out.cols(); ++c) row[c] /= peak;
    } else {
      std::fill(row, row + out.cols(), 0.0f);
    }
  }
  return out;
}

nd::Tensor<float> stack_inputs(std::span<const Matrix> inputs, const ModelConfig& config) {
  const auto t = static_cast<std::size_t>(config.input_frames), f = static_cast<std::size_t>(config.input_bins);
  nd::Tensor<float> out({static_cast<int>(inputs.size()), config.input_frames, config.input_bins});
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].rows() != t || inputs[i].cols() != f) {
      throw Error("model input " + std::to_string(i) + " has shape " + std::to_string(inputs[i].rows()) + "x" +
                  std::to_string(inputs[i].cols()) + ", expected " + std::to_string(t) + "x" + std::to_string(f));
    }
    std::copy(inputs[i].data().begin(), inputs[i].data().end(), out.data() + i * t * f);
  }
  return out;
}

std::vector<std::vector<float>> predict_batch(const TrainedModel& model, std::span<const Matrix> inputs) {
  std::vector<std::vector<float>> out;
  out.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += kInferenceBatch) {
    const auto chunk = inputs.subspan(start, std::min<std::size_t>(kInferenceBatch, inputs.size() - start));
    nd::Graph<float> g(nd::GradMode::kNoGrad);
    auto x = g.constant(stack_inputs(chunk, model.config));
    auto logits = forward_logits(g, model.config, model.params, x, Phase::kInfer);
    const int n = model.config.num_classes;
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      std::span<const float> row(logits.value().data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n));
      auto p = nd::softmax<float>(row);
      for (float v : p) {
        if (!std::isfinite(v)) throw NumericError("predict: non-finite probability");
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<float> predict_chunk(const TrainedModel& model, const Matrix& input) {
  return predict_batch(model, std::span<const Matrix>(&input, 1)).front();
}

int vote(std::span<const std::vector<float>> chunk_probabilities) {
  if (chunk_probabilities.empty()) throw Error("predict_song: no chunks");
  const std::size_t n = chunk_probabilities.front().size();
  std::vector<int> votes(n);
  std::vector<double> mass(n);
  for (const auto& p : chunk_probabilities) {
    if (p.size() != n) throw Error("predict_song: inconsistent probability vector lengths");
    ++votes[static_cast<std::size_t>(argmax(p))];
    for (std::size_t c = 0; c < n; ++c) mass[c] += p[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < n; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best])) best = c;
  }
  return static_cast<int>(best);
}

int predict_song(const TrainedModel& model, std::span<const Matrix> chunks) {
  if (chunks.empty()) throw Error("predict_song: no chunks");
  const auto probs = predict_batch(model, chunks);
  return vote(probs);
}

namespace {

struct Evaluation {
  double loss = 0.0;
  double f1 = 0.0;
};

Evaluation evaluate(const TrainedModel& model, const std::vector<LabeledChunk>& set) {
  std::vector<Matrix> inputs;
  std::vector<int> labels, preds;
  for (const auto& s : set) {
    inputs.push_back(s.features);
    labels.push_back(s.label);
  }
  const auto probs = predict_batch(model, inputs);
  Evaluation e;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    preds.push_back(argmax(probs[i]));
    e.loss -= std::log(std::max(1e-12, static_cast<double>(probs[i][static_cast<std::size_t>(labels[i])])));
  }
  e.loss /= static_cast<double>(set.size());
  e.f1 = weighted_f1(preds, labels, model.config.num_classes);
  return e;
}

void check_split(const std::vector<LabeledChunk>& set, const char* name, const ModelConfig& config) {
  if (set.empty()) throw Error(std::string("train: empty ") + name + " split");
  for (const auto& s : set) {
    if (s.label < 0 || s.label >= config.num_classes) {
      throw Error(std::string("train: label ") + std::to_string(s.label) + " of " + s.song_id + " in " + name +
                  " split is outside the vocabulary");
    }
    if (s.features.rows() != static_cast<std::size_t>(config.input_frames) ||
        s.features.cols() != static_cast<std::size_t>(config.input_bins)) {
      throw Error(std::string("train: features of ") + s.song_id + " have the wrong shape");
    }
  }
}

}  // namespace

TrainedModel train(TrainedModel model, const std::vector<LabeledChunk>& train_set,
                   const std::vector<LabeledChunk>& val_set, const Hyperparams& hp) {
  if (hp.learning_rate < 0.0 || hp.batch_size < 1 || hp.max_epochs < 1 || hp.patience < 1) {
    throw Error("train: hyperparameters must be positive");
  }
  const ModelConfig& config = model.config;
  check_split(train_set, "train", config);
  check_split(val_set, "validation", config);
  std::vector<int> class_count(static_cast<std::size_t>(config.num_classes));
  for (const auto& s : train_set) ++class_count[static_cast<std::size_t>(s.label)];
  for (int c = 0; c < config.num_classes; ++c) {
    if (class_count[static_cast<std::size_t>(c)] == 0) {
      throw Error("train: class '" + model.vocabulary[static_cast<std::size_t>(c)] + "' is absent from the train split");
    }
  }

  nd::Adam<float> optimizer(hp.learning_rate);
  auto params = model.params.trainable();
  model.params.zero_grad();
  std::mt19937_64 rng(hp.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainedModel best = model;
  double best_f1 = -1.0, best_loss = 0.0;
  int stale = 0;
  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    const std::size_t bs = static_cast<std::size_t>(hp.batch_size);
    for (std::size_t s = 0; s < order.size(); s += bs) batches.emplace_back(s, std::min(order.size(), s + bs));
    // Batch norm needs two samples; a lone trailing sample joins the previous batch.
    if (batches.size() > 1 && batches.back().second - batches.back().first == 1) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }
    double loss_sum = 0.0;
    int correct = 0;
    for (const auto& [b0, b1] : batches) {
      std::vector<Matrix> inputs;
      std::vector<int> labels;
      for (std::size_t i = b0; i < b1; ++i) {
        inputs.push_back(train_set[order[i]].features);
        labels.push_back(train_set[order[i]].label);
      }
      nd::Graph<float> g;
      auto x = g.constant(stack_inputs(inputs, config));
      auto logits = forward_logits(g, config, model.params, x, Phase::kTrain);
      auto loss = nd::softmax_cross_entropy(logits, std::span<const int>(labels));
      const double lv = loss.value()[0];
      if (!std::isfinite(lv)) throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += lv * static_cast<double>(labels.size());
      const int n = config.num_classes;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        std::span<const float> row(logits.value().data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n));
        correct += argmax(row) == labels[i] ? 1 : 0;
      }
      g.backward(loss);
      optimizer.step(params);
      model.params.zero_grad();
    }
    const Evaluation val = evaluate(model, val_set);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(train_set.size()),
                    static_cast<double>(correct) / static_cast<double>(train_set.size()), val.loss, val.f1};
    model.history.push_back(rec);
    if (hp.on_epoch) hp.on_epoch(rec);
    if (val.f1 > best_f1 + 1e-12 || (std::abs(val.f1 - best_f1) <= 1e-12 && val.loss < best_loss)) {
      best_f1 = val.f1;
      best_loss = val.loss;
      best = model;
      best.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= hp.patience) {
      break;
    }
  }
  best.history = model.history;
  return best;
}

CrossValidationResult cross_validate(const ModelConfig& config, const std::vector<SongChunks>& songs, int folds,
                                     const Hyperparams& hp, const std::vector<std::string>& vocabulary) {
  if (folds < 2) throw Error("cross_validate: folds must be >= 2");
  if (songs.empty()) throw Error("cross_validate: no songs");
  std::vector<std::string> labels;
  for (const auto& s : songs) {
    if (s.label < 0 || s.label >= config.num_classes) throw Error("cross_validate: label out of range for " + s.song_id);
    labels.push_back(vocabulary.at(static_cast<std::size_t>(s.label)));
  }
  const FoldAssignment assignment = assign_folds(labels, folds, hp.seed);
  CrossValidationResult result;
  result.relaxed = assignment.relaxed;
  result.warnings = assignment.warnings;

  for (int fold = 0; fold < folds; ++fold) {
    std::vector<LabeledChunk> train_set, val_set, test_set;
    std::vector<const SongChunks*> test_songs;
    std::map<int, std::vector<const SongChunks*>> train_by_class;
    for (std::size_t i = 0; i < songs.size(); ++i) {
      if (assignment.fold_of_song[i] == fold) {
        test_songs.push_back(&songs[i]);
      } else {
        train_by_class[songs[i].label].push_back(&songs[i]);
      }
    }
    std::size_t train_songs = 0;
    for (const auto& [label, list] : train_by_class) {
      const bool hold_out = list.size() >= 3;
      for (std::size_t j = 0; j < list.size(); ++j) {
        for (const auto& c : list[j]->chunks) {
          LabeledChunk lc{c, label, list[j]->song_id};
          if (hold_out && j == 0) {
            val_set.push_back(std::move(lc));
          } else {
            if (!hold_out) val_set.push_back(lc);
            train_set.push_back(std::move(lc));
          }
        }
        if (!(hold_out && j == 0)) ++train_songs;
      }
    }
    Hyperparams fold_hp = hp;
    fold_hp.seed = hp.seed + static_cast<uint64_t>(fold) + 1;
    TrainedModel model = train(build_model(config, fold_hp.seed, vocabulary), train_set, val_set, fold_hp);

    std::vector<int> chunk_pred, chunk_true, song_pred, song_true;
    for (const SongChunks* s : test_songs) {
      const auto probs = predict_batch(model, s->chunks);
      for (const auto& p : probs) {
        chunk_pred.push_back(argmax(p));
        chunk_true.push_back(s->label);
      }
      song_pred.push_back(vote(probs));
      song_true.push_back(s->label);
    }
    FoldMetrics fm;
    fm.fold = fold;
    fm.train_songs = train_songs;
    fm.test_songs = test_songs.size();
    if (!chunk_pred.empty()) {
      fm.chunk_f1 = weighted_f1(chunk_pred, chunk_true, config.num_classes);
      fm.song_f1 = weighted_f1(song_pred, song_true, config.num_classes);
    } else {
      result.warnings.push_back("fold " + std::to_string(fold) + " has no test songs");
    }
    result.folds.push_back(fm);
  }
  result.min_f1 = result.max_f1 = result.folds.front().chunk_f1;
  double sum = 0.0;
  for (const auto& f : result.folds) {
    result.min_f1 = std::min(result.min_f1, f.chunk_f1);
    result.max_f1 = std::max(result.max_f1, f.chunk_f1);
    sum += f.chunk_f1;
  }
  result.mean_f1 = sum / static_cast<double>(result.folds.size());
  return result;
}

}  // namespace ragaxai

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
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ragaxai/common.hpp"
#include "ragaxai/nd/nd.hpp"

namespace ragaxai {

// Architecture family. CN1 stacks end in a flatten (or LSTM) head, CN2 stacks
// use frequency-only pooling feeding an LSTM; "+T" means tonic-normalized input.
enum class Variant { kCN1_T, kCN1_LSTM_T, kCN2_LSTM, kCN2_LSTM_T };

std::string to_string(Variant variant);
Variant parse_variant(std::string_view name);  // "CN2+LSTM+T", ...

struct ModelConfig {
  Variant variant = Variant::kCN2_LSTM_T;
  std::vector<int> conv_channels{32, 64, 256};
  std::vector<int> freq_pools{2, 2, 1};  // (1, w) max-pool after each conv block
  int kernel_size = 3;
  int lstm_hidden = 64;
  int num_classes = 12;
  bool tonic_normalize = true;
  int input_frames = kClipFrames;
  int input_bins = kChromaBins;

  bool uses_lstm() const { return variant != Variant::kCN1_T; }
  // Frequency extent of the last conv block's activations.
  int final_bins() const;
  int final_channels() const { return conv_channels.back(); }
  void validate() const;
};

// Default layer plan of a variant: CN2 stacks are conv(32)-pool2, conv(64)-pool2,
// conv(256) with LSTM(64); CN1 stacks are conv(16)-pool2, conv(32)-pool2.
ModelConfig make_config(Variant variant, int num_classes = 12);

template <typename S>
struct ConvBlockParams {
  nd::Parameter<S> kernel, bias, gamma, beta, running_mean, running_var;
};

template <typename S>
struct NetworkParams {
  std::vector<ConvBlockParams<S>> blocks;
  nd::Parameter<S> lstm_input, lstm_recurrent, lstm_bias;  // empty without an LSTM head
  nd::Parameter<S> dense_weights, dense_bias;

  // Every tensor in checkpoint order; empty tensors are skipped.
  template <typename Self>
  static auto collect(Self& self) {
    using P = std::conditional_t<std::is_const_v<Self>, const nd::Parameter<S>*, nd::Parameter<S>*>;
    std::vector<P> out;
    for (auto& b : self.blocks) {
      for (auto* p : {&b.kernel, &b.bias, &b.gamma, &b.beta, &b.running_mean, &b.running_var}) out.push_back(p);
    }
    for (auto* p : {&self.lstm_input, &self.lstm_recurrent, &self.lstm_bias, &self.dense_weights, &self.dense_bias}) {
      if (!p->value.empty()) out.push_back(p);
    }
    return out;
  }
  std::vector<nd::Parameter<S>*> all() { return collect(*this); }
  std::vector<const nd::Parameter<S>*> all() const { return collect(*this); }

  std::vector<nd::Parameter<S>*> trainable() {
    std::vector<nd::Parameter<S>*> out;
    for (auto* p : all()) {
      if (p->trainable) out.push_back(p);
    }
    return out;
  }
  void zero_grad() {
    for (auto* p : trainable()) p->zero_grad();
  }

  template <typename T>
  NetworkParams<T> cast() const {
    NetworkParams<T> out;
    for (const auto& b : blocks) {
      out.blocks.push_back({b.kernel.template cast<T>(), b.bias.template cast<T>(), b.gamma.template cast<T>(),
                            b.beta.template cast<T>(), b.running_mean.template cast<T>(),
                            b.running_var.template cast<T>()});
    }
    out.lstm_input = lstm_input.template cast<T>();
    out.lstm_recurrent = lstm_recurrent.template cast<T>();
    out.lstm_bias = lstm_bias.template cast<T>();
    out.dense_weights = dense_weights.template cast<T>();
    out.dense_bias = dense_bias.template cast<T>();
    return out;
  }
};

enum class Phase { kTrain, kInfer };

// Conv stack: input [B, T, F] -> last conv block activations [B, T, F', C]
// (after batch norm and ReLU, before any pooling of the last block).
// `Params` is NetworkParams<S> (trainable, running statistics updated in
// training phase) or const NetworkParams<S> (read-only).
template <typename S, typename Params>
nd::Var<S> conv_features(nd::Graph<S>& g, const ModelConfig& config, Params& params, nd::Var<S> input,
                         Phase phase) {
  const auto& in_shape = input.shape();
  if (in_shape.size() != 3 || in_shape[1] != config.input_frames || in_shape[2] != config.input_bins) {
    throw Error("model input must be [batch, " + std::to_string(config.input_frames) + ", " +
                std::to_string(config.input_bins) + "], got " + nd::shape_string(in_shape));
  }
  nd::Var<S> x = nd::reshape(input, {in_shape[0], in_shape[1], in_shape[2], 1});
  const std::size_t n = params.blocks.size();
  nd::Var<S> activation;
  for (std::size_t i = 0; i < n; ++i) {
    auto& block = params.blocks[i];
    x = nd::conv2d(x, g.param(block.kernel), g.param(block.bias));
    if (phase == Phase::kTrain) {
      if constexpr (std::is_const_v<Params>) {
        x = nd::batchnorm_train(x, g.param(block.gamma), g.param(block.beta));
      } else {
        x = nd::batchnorm_train(x, g.param(block.gamma), g.param(block.beta), &block.running_mean.value,
                                &block.running_var.value);
      }
    } else {
      x = nd::batchnorm_infer(x, g.param(block.gamma), g.param(block.beta), block.running_mean.value,
                              block.running_var.value);
    }
    x = nd::relu(x);
    if (i + 1 == n) {
      activation = x;
    } else if (config.freq_pools[i] > 1) {
      x = nd::maxpool_freq(x, config.freq_pools[i]);
    }
  }
  // The last block's pool (if any) is applied by the head so that the
  // attribution target stays time-aligned with the input.
  return activation;
}

// Head: optional pool of the last block, then LSTM(last hidden) or flatten,
// then dense logits [B, N].
template <typename S, typename Params>
nd::Var<S> classifier_head(nd::Graph<S>& g, const ModelConfig& config, Params& params, nd::Var<S> activations) {
  nd::Var<S> x = activations;
  if (config.freq_pools.back() > 1) x = nd::maxpool_freq(x, config.freq_pools.back());
  const auto& s = x.shape();
  if (config.uses_lstm()) {
    x = nd::reshape(x, {s[0], s[1], s[2] * s[3]});
    auto lstm = nd::lstm_sequence(x, g.param(params.lstm_input), g.param(params.lstm_recurrent),
                                  g.param(params.lstm_bias));
    x = nd::last_timestep(lstm.outputs);
  } else {
    x = nd::reshape(x, {s[0], s[1] * s[2] * s[3]});
  }
  return nd::dense(x, g.param(params.dense_weights), g.param(params.dense_bias));
}

template <typename S, typename Params>
nd::Var<S> forward_logits(nd::Graph<S>& g, const ModelConfig& config, Params& params, nd::Var<S> input,
                          Phase phase) {
  return classifier_head(g, config, params, conv_features(g, config, params, input, phase));
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
};

class TrainedModel {
 public:
  ModelConfig config;
  std::vector<std::string> vocabulary;
  NetworkParams<float> params;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 0: untrained
};

// He-style seeded initialization; LSTM gate biases use chrono initialization.
// An empty vocabulary becomes "class_0", "class_1", ...
TrainedModel build_model(const ModelConfig& config, uint64_t seed, std::vector<std::string> vocabulary = {});

struct LabeledChunk {
  Matrix features;  // model input, already tonic-normalized when the config asks for it
  int label = 0;
  std::string song_id;
};

struct Hyperparams {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;
  uint64_t seed = 0;
  std::function<void(const EpochRecord&)> on_epoch;  // progress hook
};

// Adam on the mean batch cross-entropy with early stopping on validation
// weighted F1 (ties broken by lower validation loss). Returns the best
// validation checkpoint with the full history.
TrainedModel train(TrainedModel model, const std::vector<LabeledChunk>& train_set,
                   const std::vector<LabeledChunk>& val_set, const Hyperparams& hp);

// Batched inference; rows of the result are softmax probabilities.
std::vector<std::vector<float>> predict_batch(const TrainedModel& model, std::span<const Matrix> inputs);
std::vector<float> predict_chunk(const TrainedModel& model, const Matrix& input);

// Majority vote over chunk argmaxes; ties go to the tied class with the highest
// summed probability, then to the lowest index.
int vote(std::span<const std::vector<float>> chunk_probabilities);
int predict_song(const TrainedModel& model, std::span<const Matrix> chunks);

// Applies the config's tonic normalization to a raw chromagram, then scales
// each frame to a maximum of 1.
Matrix prepare_input(const Matrix& raw_chroma, int tonic, const ModelConfig& config);

nd::Tensor<float> stack_inputs(std::span<const Matrix> inputs, const ModelConfig& config);

struct SongChunks {
  std::string song_id;
  int label = 0;
  std::vector<Matrix> chunks;  // model inputs
};

struct FoldMetrics {
  int fold = 0;
  double chunk_f1 = 0.0;
  double song_f1 = 0.0;
  std::size_t train_songs = 0;
  std::size_t test_songs = 0;
};

struct CrossValidationResult {
  std::vector<FoldMetrics> folds;
  double min_f1 = 0.0, max_f1 = 0.0, mean_f1 = 0.0;  // chunk-level weighted F1
  bool relaxed = false;
  std::vector<std::string> warnings;
};

// Song-level stratified k-fold. Fold i is the test set; one song per class is
// held out of the remaining folds for early stopping when the class has at
// least three training songs, otherwise early stopping watches the training
// songs themselves.
CrossValidationResult cross_validate(const ModelConfig& config, const std::vector<SongChunks>& songs, int folds,
                                     const Hyperparams& hp, const std::vector<std::string>& vocabulary);

}  // namespace ragaxai

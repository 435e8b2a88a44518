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
#include "ragaxai/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ragaxai/manifest.hpp"

namespace ragaxai {

static_assert(std::endian::native == std::endian::little);

namespace {

constexpr char kMagic[4] = {'R', 'G', 'M', 'D'};

template <typename T>
void append(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(T)) throw FormatError("checkpoint: truncated file");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"variant", to_string(c.variant)},     {"conv_channels", c.conv_channels},
          {"freq_pools", c.freq_pools},          {"kernel_size", c.kernel_size},
          {"lstm_hidden", c.lstm_hidden},        {"num_classes", c.num_classes},
          {"tonic_normalize", c.tonic_normalize}, {"input_frames", c.input_frames},
          {"input_bins", c.input_bins}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.conv_channels = j.at("conv_channels").get<std::vector<int>>();
    c.freq_pools = j.at("freq_pools").get<std::vector<int>>();
    c.kernel_size = j.at("kernel_size").get<int>();
    c.lstm_hidden = j.at("lstm_hidden").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.tonic_normalize = j.at("tonic_normalize").get<bool>();
    c.input_frames = j.value("input_frames", kClipFrames);
    c.input_bins = j.value("input_bins", kChromaBins);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string encode_checkpoint(const TrainedModel& model) {
  nlohmann::json header;
  header["config"] = config_to_json(model.config);
  header["vocabulary"] = model.vocabulary;
  header["best_epoch"] = model.best_epoch;
  nlohmann::json params = nlohmann::json::array();
  for (const auto* p : model.params.all()) {
    params.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"trainable", p->trainable}});
  }
  header["parameters"] = params;
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : model.history) {
    history.push_back({{"epoch", h.epoch},
                       {"train_loss", h.train_loss},
                       {"train_accuracy", h.train_accuracy},
                       {"val_loss", h.val_loss},
                       {"val_f1", h.val_f1}});
  }
  header["history"] = history;
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  append<uint16_t>(out, kCheckpointVersion);
  append<uint32_t>(out, static_cast<uint32_t>(text.size()));
  out += text;
  for (const auto* p : model.params.all()) {
    out.append(reinterpret_cast<const char*>(p->value.data()), p->value.size() * sizeof(float));
  }
  return out;
}

TrainedModel decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  std::size_t pos = 4;
  const auto version = take<uint16_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto len = take<uint32_t>(bytes, pos);
  if (bytes.size() - pos < len) throw FormatError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: corrupt header: ") + e.what());
  }
  pos += len;

  TrainedModel model;
  try {
    const ModelConfig config = config_from_json(header.at("config"));
    model = build_model(config, 0, header.at("vocabulary").get<std::vector<std::string>>());
    model.best_epoch = header.value("best_epoch", 0);
    for (const auto& h : header.at("history")) {
      model.history.push_back({h.at("epoch").get<int>(), h.at("train_loss").get<double>(),
                               h.at("train_accuracy").get<double>(), h.at("val_loss").get<double>(),
                               h.at("val_f1").get<double>()});
    }
    const auto& entries = header.at("parameters");
    auto params = model.params.all();
    if (entries.size() != params.size()) {
      throw FormatError("checkpoint: " + std::to_string(entries.size()) + " parameters, config expects " +
                        std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto shape = entries[i].at("shape").get<nd::Shape>();
      const auto name = entries[i].at("name").get<std::string>();
      if (name != params[i]->name || shape != params[i]->value.shape()) {
        throw FormatError("checkpoint: parameter " + name + " " + nd::shape_string(shape) +
                          " does not match config (" + params[i]->name + " " +
                          nd::shape_string(params[i]->value.shape()) + ")");
      }
      const std::size_t nbytes = params[i]->value.size() * sizeof(float);
      if (bytes.size() - pos < nbytes) throw FormatError("checkpoint: truncated parameter data (" + name + ")");
      std::memcpy(params[i]->value.data(), bytes.data() + pos, nbytes);
      pos += nbytes;
      params[i]->zero_grad();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
  }
  if (pos != bytes.size()) throw FormatError("checkpoint: trailing bytes after parameter data");
  return model;
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(model));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace ragaxai

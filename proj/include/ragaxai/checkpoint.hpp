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
#include <filesystem>
#include <string>

#include "json.hpp"
#include "ragaxai/model.hpp"

namespace ragaxai {

inline constexpr uint16_t kCheckpointVersion = 1;

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

// "RGMD" | u16 version | u32 header length | JSON header (config, vocabulary,
// parameter names and shapes, history) | f32 LE arrays in declaration order.
std::string encode_checkpoint(const TrainedModel& model);
TrainedModel decode_checkpoint(const std::string& bytes);

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ragaxai

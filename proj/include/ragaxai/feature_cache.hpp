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

#include "ragaxai/common.hpp"

namespace ragaxai {

// Binary feature cache:
//   "CHRM" | u16 version (=1) | u32 rows | u32 cols | rows*cols f32, row-major
// All integers and floats little-endian.
inline constexpr char kFeatureCacheMagic[4] = {'C', 'H', 'R', 'M'};
inline constexpr uint16_t kFeatureCacheVersion = 1;

std::string encode_feature_cache(const Matrix& matrix);
Matrix decode_feature_cache(const std::string& bytes);

// Written atomically (temp file + rename).
void write_feature_cache(const Matrix& matrix, const std::filesystem::path& path);
Matrix read_feature_cache(const std::filesystem::path& path);

}  // namespace ragaxai

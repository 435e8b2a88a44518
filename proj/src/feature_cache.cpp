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
#include "ragaxai/feature_cache.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ragaxai/manifest.hpp"

namespace ragaxai {

static_assert(std::endian::native == std::endian::little);

namespace {

constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 4;

template <typename T>
void append(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T load(const std::string& bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

std::string encode_feature_cache(const Matrix& matrix) {
  for (float v : matrix.data()) {
    if (!std::isfinite(v)) throw Error("feature cache: matrix contains non-finite values");
  }
  std::string out;
  out.reserve(kHeaderBytes + matrix.size() * 4);
  out.append(kFeatureCacheMagic, 4);
  append<uint16_t>(out, kFeatureCacheVersion);
  append<uint32_t>(out, static_cast<uint32_t>(matrix.rows()));
  append<uint32_t>(out, static_cast<uint32_t>(matrix.cols()));
  out.append(reinterpret_cast<const char*>(matrix.data().data()), matrix.size() * 4);
  return out;
}

Matrix decode_feature_cache(const std::string& bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("feature cache: truncated header");
  if (std::memcmp(bytes.data(), kFeatureCacheMagic, 4) != 0) {
    throw FormatError("feature cache: bad magic");
  }
  const auto version = load<uint16_t>(bytes, 4);
  if (version != kFeatureCacheVersion) {
    throw FormatError("feature cache: unsupported version " + std::to_string(version));
  }
  const auto rows = load<uint32_t>(bytes, 6);
  const auto cols = load<uint32_t>(bytes, 10);
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  if (bytes.size() - kHeaderBytes != count * 4) {
    throw FormatError("feature cache: payload holds " + std::to_string(bytes.size() - kHeaderBytes) +
                      " bytes, expected " + std::to_string(count * 4));
  }
  std::vector<float> data(count);
  std::memcpy(data.data(), bytes.data() + kHeaderBytes, count * 4);
  return Matrix(rows, cols, std::move(data));
}

void write_feature_cache(const Matrix& matrix, const std::filesystem::path& path) {
  write_file_atomic(path, encode_feature_cache(matrix));
}

Matrix read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature cache " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_feature_cache(bytes);
}

}  // namespace ragaxai

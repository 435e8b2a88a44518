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

#include <string>
#include <vector>

#include "ragaxai/common.hpp"

namespace ragaxai {

// Class-specific attribution over the model's time x frequency cells.
struct SaliencyMap {
  Matrix map;  // [frames, freq cells]
  std::string method;
};

struct TimeSaliency {
  std::vector<double> frame_scores;   // one per input frame
  std::vector<double> second_scores;  // 30 one-second bins
};

// Frames of second s are those with second_of_frame(f) == s; seconds beyond
// the clip length stay 0.
std::vector<double> seconds_from_frames(const std::vector<double>& frame_scores, int seconds = 30,
                                        double frame_rate = kFrameRate);

std::string frame_saliency_csv(const TimeSaliency& ts);
std::string second_saliency_csv(const TimeSaliency& ts);

}  // namespace ragaxai

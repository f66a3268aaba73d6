// Copyright 2026 The recistkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Test-time flip fusion and Soft-NMS.

#include <vector>

#include "recist/grouping.hpp"

namespace recist {

enum class SoftNmsMethod { Gaussian, Linear };

struct SoftNmsConfig {
  double sigma = 0.5;
  double score_floor = 0.001;
  SoftNmsMethod method = SoftNmsMethod::Gaussian;
  /// Overlap above which the linear variant decays by (1 - iou).
  double linear_threshold = 0.3;

  void validate() const;
};

/// Maps detections made on a horizontally flipped image back to the original
/// frame. Left and right swap roles; the source tag toggles.
std::vector<Detection> unflip_detections(const std::vector<Detection>& dets, double image_width);

/// Greedy Soft-NMS on the tight boxes. Returns survivors sorted by final score.
std::vector<Detection> soft_nms(std::vector<Detection> dets, const SoftNmsConfig& cfg = {});

std::vector<Detection> fuse_tta(const std::vector<Detection>& original, const std::vector<Detection>& flipped_raw,
                                double image_width, const SoftNmsConfig& cfg = {});

}  // namespace recist

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

// Lesion-level matching and FROC sensitivity at fixed false positives per
// image, with optional stratification.

#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "recist/geometry.hpp"
#include "recist/grouping.hpp"

namespace recist {

struct MatchEntry {
  int detection = 0;
  double score = 0;
  bool is_tp = false;
  int gt = -1;  // matched ground truth index, -1 for a false positive
};

struct ImageMatches {
  std::vector<MatchEntry> entries;  // score-descending processing order
  int n_gt = 0;
};

struct MatchResult {
  std::vector<ImageMatches> images;

  int n_lesions() const;
};

struct MatchOptions {
  double iou_threshold = 0.5;
  double pad = 5.0;
};

/// Greedy matching per image. Detections are visited by score (descending,
/// ties by index); each is padded and assigned to the unmatched ground truth
/// of highest IoU if that IoU reaches the threshold. Ground-truth boxes are
/// expected to be padded already.
MatchResult match_detections(std::span<const std::vector<Detection>> dets,
                             std::span<const std::vector<BBox<double>>> gts, const MatchOptions& opt = {});

ImageMatches match_image(const std::vector<Detection>& dets, const std::vector<BBox<double>>& gts,
                         const MatchOptions& opt = {});

struct OperatingPoint {
  double fp_target = 0;
  double sensitivity = 0;
  /// Lowest score threshold (inclusive) achieving the sensitivity; +inf when
  /// no detection may be kept.
  double threshold = std::numeric_limits<double>::infinity();
};

struct CurvePoint {
  double threshold = 0;
  double fp_per_image = 0;
  double sensitivity = 0;
  int tp = 0;
  int fp = 0;
};

struct FrocResult {
  std::vector<OperatingPoint> operating_points;
  std::vector<CurvePoint> curve;
  int n_images = 0;
  int n_lesions = 0;
};

inline const std::vector<double> kDefaultFpTargets = {0.5, 1, 2, 3, 4};

/// Step-function FROC: the sensitivity at target f is the best sensitivity
/// among thresholds whose FP rate does not exceed f.
FrocResult froc(const MatchResult& matches, const std::vector<double>& fp_targets = kDefaultFpTargets);

enum class StratifyKey { LesionType, DiameterBucket, SliceInterval };

struct LesionMeta {
  int lesion_type = -1;            // 1..8, -1 unknown
  double long_diameter_mm = -1;    // negative when unknown
  double slice_interval_mm = -1;   // negative when unknown
};

/// Two-letter code for a DeepLesion coarse lesion type, "other" when unknown.
std::string lesion_type_name(int code);
/// "<10", "10-30" (closed), ">30"; "other" for unknown.
std::string diameter_bucket(double long_diameter_mm);
/// "<2.5" or ">=2.5"; "other" for unknown.
std::string slice_interval_bucket(double slice_interval_mm);
std::string stratum_of(const LesionMeta& meta, StratifyKey key);
std::string to_string(StratifyKey key);

struct Strata {
  StratifyKey key = StratifyKey::LesionType;
  std::map<std::string, FrocResult> per_stratum;
};

/// FROC per stratum. False positives are counted over all images regardless
/// of stratum; sensitivity counts only lesions of the stratum.
/// `labels[i][g]` is the stratum of ground truth g in image i.
FrocResult froc_for_label(const MatchResult& matches, const std::vector<std::vector<std::string>>& labels,
                          const std::string& label, const std::vector<double>& fp_targets = kDefaultFpTargets);

Strata stratified_froc(const MatchResult& matches, const std::vector<std::vector<LesionMeta>>& meta, StratifyKey key,
                       const std::vector<double>& fp_targets = kDefaultFpTargets);

}  // namespace recist

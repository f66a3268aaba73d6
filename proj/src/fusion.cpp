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

#include "recist/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recist {

namespace {

// Deterministic order for equal scores: geometry, then source.
bool detection_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  const auto key = [](const Detection& d) {
    return std::tuple(d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2, d.extremes.top.x(), d.extremes.top.y(),
                      d.extremes.left.x(), d.extremes.left.y(), d.extremes.bottom.x(), d.extremes.bottom.y(),
                      d.extremes.right.x(), d.extremes.right.y(), static_cast<int>(d.source));
  };
  return key(a) < key(b);
}

}  // namespace

void SoftNmsConfig::validate() const {
  if (!(sigma > 0)) throw std::invalid_argument("SoftNmsConfig: sigma must be positive");
  if (!(score_floor >= 0)) throw std::invalid_argument("SoftNmsConfig: score_floor must be non-negative");
}

std::vector<Detection> unflip_detections(const std::vector<Detection>& dets, double image_width) {
  std::vector<Detection> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    Detection u = d;
    u.extremes = flip_horizontal(d.extremes, image_width);
    u.bbox = flip_horizontal(d.bbox, image_width);
    u.source = d.source == Source::Original ? Source::Flipped : Source::Original;
    out.push_back(u);
  }
  return out;
}

std::vector<Detection> soft_nms(std::vector<Detection> dets, const SoftNmsConfig& cfg) {
  cfg.validate();
  for (const auto& d : dets)
    if (!std::isfinite(d.score)) throw std::invalid_argument("soft_nms: non-finite score");

  std::vector<Detection> kept;
  kept.reserve(dets.size());
  while (!dets.empty()) {
    auto best = std::min_element(dets.begin(), dets.end(), detection_before);
    if (best->score < cfg.score_floor) break;
    std::iter_swap(dets.begin(), best);
    kept.push_back(dets.front());
    const BBox<double>& ref = kept.back().bbox;

    std::vector<Detection> rest;
    rest.reserve(dets.size() - 1);
    for (auto it = dets.begin() + 1; it != dets.end(); ++it) {
      const double ov = iou(ref, it->bbox);
      double w = 1.0;
      if (cfg.method == SoftNmsMethod::Gaussian)
        w = std::exp(-(ov * ov) / cfg.sigma);
      else if (ov > cfg.linear_threshold)
        w = 1.0 - ov;
      it->score *= w;
      if (it->score >= cfg.score_floor) rest.push_back(*it);
    }
    dets = std::move(rest);
  }
  std::stable_sort(kept.begin(), kept.end(), detection_before);
  return kept;
}

std::vector<Detection> fuse_tta(const std::vector<Detection>& original, const std::vector<Detection>& flipped_raw,
                                double image_width, const SoftNmsConfig& cfg) {
  std::vector<Detection> pooled = original;
  const auto unflipped = unflip_detections(flipped_raw, image_width);
  pooled.insert(pooled.end(), unflipped.begin(), unflipped.end());
  return soft_nms(std::move(pooled), cfg);
}

}  // namespace recist

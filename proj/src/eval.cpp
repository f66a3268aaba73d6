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

#include "recist/eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace recist {

int MatchResult::n_lesions() const {
  int n = 0;
  for (const auto& im : images) n += im.n_gt;
  return n;
}

ImageMatches match_image(const std::vector<Detection>& dets, const std::vector<BBox<double>>& gts,
                         const MatchOptions& opt) {
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dets[a].score > dets[b].score; });

  ImageMatches out;
  out.n_gt = static_cast<int>(gts.size());
  std::vector<bool> taken(gts.size(), false);
  for (int i : order) {
    const auto box = pad_bbox(dets[i].bbox, opt.pad);
    int best = -1;
    double best_iou = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(box, gts[g]);
      if (v >= opt.iou_threshold && v > best_iou) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) taken[best] = true;
    out.entries.push_back({i, dets[i].score, best >= 0, best});
  }
  return out;
}

MatchResult match_detections(std::span<const std::vector<Detection>> dets,
                             std::span<const std::vector<BBox<double>>> gts, const MatchOptions& opt) {
  if (dets.size() != gts.size()) throw std::invalid_argument("match_detections: image count mismatch");
  MatchResult out;
  out.images.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) out.images.push_back(match_image(dets[i], gts[i], opt));
  return out;
}

namespace {

struct Scored {
  double score;
  bool tp;
  bool fp;
};

// Shared sweep: `hits` are entries counted as true positives for the
// denominator `n_lesions`, `fps` are counted as false positives.
FrocResult sweep(std::vector<Scored> entries, int n_images, int n_lesions, const std::vector<double>& fp_targets) {
  if (n_images < 1) throw std::invalid_argument("froc: no images");
  if (n_lesions < 1) throw std::invalid_argument("froc: no lesions");
  std::stable_sort(entries.begin(), entries.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });

  FrocResult res;
  res.n_images = n_images;
  res.n_lesions = n_lesions;
  res.curve.push_back({std::numeric_limits<double>::infinity(), 0, 0, 0, 0});
  int tp = 0, fp = 0;
  for (std::size_t i = 0; i < entries.size();) {
    const double t = entries[i].score;
    for (; i < entries.size() && entries[i].score == t; ++i) {
      tp += entries[i].tp;
      fp += entries[i].fp;
    }
    res.curve.push_back({t, double(fp) / n_images, double(tp) / n_lesions, tp, fp});
  }

  for (double f : fp_targets) {
    OperatingPoint op;
    op.fp_target = f;
    // FP counts are integers: fp / n <= f  <=>  fp <= f * n.
    const double max_fp = f * n_images;
    for (const auto& c : res.curve) {
      if (c.fp > max_fp + 1e-9) break;
      op.sensitivity = c.sensitivity;
      op.threshold = c.threshold;
    }
    res.operating_points.push_back(op);
  }
  return res;
}

}  // namespace

FrocResult froc(const MatchResult& matches, const std::vector<double>& fp_targets) {
  std::vector<Scored> all;
  for (const auto& im : matches.images)
    for (const auto& e : im.entries) all.push_back({e.score, e.is_tp, !e.is_tp});
  return sweep(std::move(all), static_cast<int>(matches.images.size()), matches.n_lesions(), fp_targets);
}

FrocResult froc_for_label(const MatchResult& matches, const std::vector<std::vector<std::string>>& labels,
                          const std::string& label, const std::vector<double>& fp_targets) {
  if (labels.size() != matches.images.size()) throw std::invalid_argument("froc_for_label: image count mismatch");
  std::vector<Scored> all;
  int n_lesions = 0;
  for (std::size_t i = 0; i < matches.images.size(); ++i) {
    const auto& im = matches.images[i];
    if (static_cast<int>(labels[i].size()) != im.n_gt)
      throw std::invalid_argument("froc_for_label: label count differs from ground truth count");
    n_lesions += static_cast<int>(std::count(labels[i].begin(), labels[i].end(), label));
    for (const auto& e : im.entries) {
      const bool hit = e.is_tp && labels[i][e.gt] == label;
      all.push_back({e.score, hit, !e.is_tp});
    }
  }
  return sweep(std::move(all), static_cast<int>(matches.images.size()), n_lesions, fp_targets);
}

std::string lesion_type_name(int code) {
  // DeepLesion coarse type codes.
  switch (code) {
    case 1: return "BN";
    case 2: return "AB";
    case 3: return "ME";
    case 4: return "LV";
    case 5: return "LU";
    case 6: return "KD";
    case 7: return "ST";
    case 8: return "PV";
    default: return "other";
  }
}

std::string diameter_bucket(double mm) {
  if (!(mm >= 0)) return "other";
  if (mm < 10) return "<10";
  if (mm <= 30) return "10-30";
  return ">30";
}

std::string slice_interval_bucket(double mm) {
  if (!(mm >= 0)) return "other";
  return mm < 2.5 ? "<2.5" : ">=2.5";
}

std::string stratum_of(const LesionMeta& meta, StratifyKey key) {
  switch (key) {
    case StratifyKey::LesionType: return lesion_type_name(meta.lesion_type);
    case StratifyKey::DiameterBucket: return diameter_bucket(meta.long_diameter_mm);
    case StratifyKey::SliceInterval: return slice_interval_bucket(meta.slice_interval_mm);
  }
  return "other";
}

std::string to_string(StratifyKey key) {
  switch (key) {
    case StratifyKey::LesionType: return "type";
    case StratifyKey::DiameterBucket: return "diameter";
    case StratifyKey::SliceInterval: return "interval";
  }
  return "?";
}

Strata stratified_froc(const MatchResult& matches, const std::vector<std::vector<LesionMeta>>& meta, StratifyKey key,
                       const std::vector<double>& fp_targets) {
  std::vector<std::vector<std::string>> labels(meta.size());
  std::set<std::string> names;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    for (const auto& m : meta[i]) {
      labels[i].push_back(stratum_of(m, key));
      names.insert(labels[i].back());
    }
  }
  Strata out;
  out.key = key;
  for (const auto& name : names) out.per_stratum[name] = froc_for_label(matches, labels, name, fp_targets);
  return out;
}

}  // namespace recist

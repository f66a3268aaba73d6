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

#include "recist/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace recist {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  SplitMix64 sm(seed);
  for (auto& s : s_) s = sm();
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const double span = static_cast<double>(hi) - lo + 1;
  return lo + std::min(static_cast<int>(uniform() * span), hi - lo);
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::poisson(double lambda) {
  if (!(lambda >= 0)) throw std::invalid_argument("poisson: negative rate");
  if (lambda == 0) return 0;
  const double limit = std::exp(-lambda);
  int k = 0;
  double p = uniform();
  while (p > limit) {
    ++k;
    p *= uniform();
  }
  return k;
}

std::vector<ExtremePoints<double>> SyntheticScene::extremes() const {
  std::vector<ExtremePoints<double>> out;
  out.reserve(lesions.size());
  for (const auto& l : lesions) out.push_back(l.extremes());
  return out;
}

std::string scene_key(std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%06llu_01_01_000.png", static_cast<unsigned long long>(seed));
  return buf;
}

double box_gap(const BBox<double>& a, const BBox<double>& b) {
  return std::max({b.x1 - a.x2, a.x1 - b.x2, b.y1 - a.y2, a.y1 - b.y2});
}

int count_cross_lesion_quadruples(const std::vector<ExtremePoints<double>>& lesions, int stride, double tau_c,
                                  const RenderOptions& render) {
  const int n = static_cast<int>(lesions.size());
  std::vector<int> radius(n);
  std::vector<Cell> centers(n);
  for (int i = 0; i < n; ++i) {
    radius[i] = annotation_radius(lesions[i], stride, render);
    centers[i] = cell_of(lesions[i].center, stride);
  }
  auto center_response = [&](Cell c) {
    double best = 0;
    for (int i = 0; i < n; ++i) {
      const int dr = c.row - centers[i].row, dc = c.col - centers[i].col;
      if (std::abs(dr) > radius[i] || std::abs(dc) > radius[i]) continue;
      const double sigma = radius[i] / render.sigma_divisor;
      best = std::max(best, std::exp(-(dr * dr + dc * dc) / (2 * sigma * sigma)));
    }
    return best;
  };

  int count = 0;
  const double s = stride;
  for (int t = 0; t < n; ++t)
    for (int l = 0; l < n; ++l)
      for (int b = 0; b < n; ++b)
        for (int r = 0; r < n; ++r) {
          if (t == l && l == b && b == r) continue;
          const auto& T = lesions[t].top;
          const auto& B = lesions[b].bottom;
          const auto& L = lesions[l].left;
          const auto& R = lesions[r].right;
          if (std::floor(T.y() / s) > std::floor(B.y() / s) || std::floor(L.x() / s) > std::floor(R.x() / s)) continue;
          const Cell c{static_cast<int>(std::floor((T.y() / s + B.y() / s) / 2)),
                       static_cast<int>(std::floor((L.x() / s + R.x() / s) / 2))};
          if (center_response(c) > tau_c) ++count;
        }
  return count;
}

SyntheticScene generate_scene(int n_lesions, std::uint64_t seed, const SceneOptions& opt) {
  if (n_lesions < 0) throw std::invalid_argument("generate_scene: negative lesion count");
  if (!(opt.min_size_mm > 0) || opt.max_size_mm < opt.min_size_mm)
    throw std::invalid_argument("generate_scene: bad size range");
  SyntheticScene scene;
  scene.width = opt.image_width;
  scene.height = opt.image_height;
  if (n_lesions == 0) return scene;

  Rng rng(seed);
  const double spacing = rng.uniform(opt.min_spacing, opt.max_spacing);
  static constexpr double kSliceIntervals[] = {1.25, 2.5, 5.0};
  const double interval = kSliceIntervals[rng.uniform_int(0, 2)];
  const std::string key = opt.key.empty() ? scene_key(seed) : opt.key;

  for (int i = 0; i < n_lesions; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < opt.max_retries && !placed; ++attempt) {
      const double long_px = rng.uniform(opt.min_size_mm, opt.max_size_mm) / spacing;
      const double short_px = long_px * rng.uniform(opt.min_aspect, opt.max_aspect);
      const double theta = rng.uniform(0, std::numbers::pi);
      const double u = rng.uniform();
      const double v = rng.uniform();
      const int type = rng.uniform_int(1, 8);

      const Point2d axis(std::cos(theta), std::sin(theta));
      const Point2d perp(-axis.y(), axis.x());
      const double hx = std::max(std::abs(axis.x()) * long_px, std::abs(perp.x()) * short_px) / 2;
      const double hy = std::max(std::abs(axis.y()) * long_px, std::abs(perp.y()) * short_px) / 2;
      const double lo_x = hx + opt.pad, hi_x = opt.image_width - 1 - hx - opt.pad;
      const double lo_y = hy + opt.pad, hi_y = opt.image_height - 1 - hy - opt.pad;
      if (hi_x < lo_x || hi_y < lo_y) continue;
      const Point2d c(lo_x + u * (hi_x - lo_x), lo_y + v * (hi_y - lo_y));

      RecistAnnotation a;
      a.file_name = key;
      a.diameters = {c - axis * (long_px / 2), c + axis * (long_px / 2), c - perp * (short_px / 2),
                     c + perp * (short_px / 2)};
      a.bbox = pad_bbox(bbox_from_extremes(extremes_from_recist(a.diameters).points), opt.pad);
      if (a.bbox.x1 < 0 || a.bbox.y1 < 0 || a.bbox.x2 > opt.image_width - 1 || a.bbox.y2 > opt.image_height - 1)
        continue;
      const bool clear = std::all_of(scene.lesions.begin(), scene.lesions.end(), [&](const RecistAnnotation& o) {
        return box_gap(a.bbox, o.bbox) >= opt.min_gap;
      });
      if (!clear) continue;
      if (opt.unambiguous_grouping) {
        auto ex = scene.extremes();
        ex.push_back(extremes_from_recist(a.diameters).points);
        if (count_cross_lesion_quadruples(ex, opt.stride, opt.tau_c, opt.render) > 0) continue;
      }
      a.lesion_type = type;
      a.long_px = a.diameters.long_length();
      a.short_px = a.diameters.short_length();
      a.spacing = Eigen::Vector3d(spacing, spacing, interval);
      a.split = Split::Test;
      a.row = i + 1;
      scene.lesions.push_back(std::move(a));
      placed = true;
    }
    if (!placed)
      throw std::runtime_error("generate_scene: could not place lesion " + std::to_string(i + 1) + " of " +
                               std::to_string(n_lesions) + " after " + std::to_string(opt.max_retries) +
                               " attempts");
  }
  return scene;
}

void DegradationConfig::validate() const {
  if (!(noise_sigma >= 0)) throw std::invalid_argument("DegradationConfig: noise_sigma must be >= 0");
  if (!(peak_drop_prob >= 0 && peak_drop_prob <= 1))
    throw std::invalid_argument("DegradationConfig: peak_drop_prob must lie in [0, 1]");
  if (!(spurious_rate >= 0)) throw std::invalid_argument("DegradationConfig: spurious_rate must be >= 0");
  if (jitter_cells < 0) throw std::invalid_argument("DegradationConfig: jitter_cells must be >= 0");
  if (!(spurious_min_score >= 0 && spurious_min_score <= 1))
    throw std::invalid_argument("DegradationConfig: spurious_min_score must lie in [0, 1]");
  if (spurious_radius < 1) throw std::invalid_argument("DegradationConfig: spurious_radius must be >= 1");
}

HeatmapBundle<double> simulate_heatmaps(const SyntheticScene& scene, const DegradationConfig& cfg, int stride,
                                        const RenderOptions& render) {
  cfg.validate();
  const int rows = output_extent(scene.height, stride);
  const int cols = output_extent(scene.width, stride);
  const auto extremes = scene.extremes();
  auto placements = keypoint_placements<double>(extremes, rows, cols, stride, render);

  Rng rng(cfg.seed);
  std::vector<KeypointPlacement<double>> kept;
  kept.reserve(placements.size());
  for (auto pl : placements) {
    const bool drop = rng.uniform() < cfg.peak_drop_prob;
    const int jx = rng.uniform_int(-cfg.jitter_cells, cfg.jitter_cells);
    const int jy = rng.uniform_int(-cfg.jitter_cells, cfg.jitter_cells);
    if (drop) continue;
    pl.cell.col = std::clamp(pl.cell.col + jx, 0, cols - 1);
    pl.cell.row = std::clamp(pl.cell.row + jy, 0, rows - 1);
    kept.push_back(pl);
  }

  HeatmapBundle<double> bundle(rows, cols, stride, scene.width, scene.height);
  draw_placements<double>(bundle, kept, render);

  for (int k = 0; k < kNumKeypoints; ++k) {
    const Role role = static_cast<Role>(k);
    std::vector<Cell> taken;
    for (const auto& pl : placements)
      if (pl.role == role) taken.push_back(pl.cell);
    for (const auto& pl : kept)
      if (pl.role == role) taken.push_back(pl.cell);

    const int count = rng.poisson(cfg.spurious_rate);
    for (int s = 0; s < count; ++s) {
      const int r = rng.uniform_int(0, rows - 1);
      const int c = rng.uniform_int(0, cols - 1);
      const double score = rng.uniform(cfg.spurious_min_score, 1.0);
      const bool near = std::any_of(taken.begin(), taken.end(), [&](const Cell& t) {
        return std::max(std::abs(t.row - r), std::abs(t.col - c)) <= cfg.spurious_exclusion;
      });
      if (near) continue;
      draw_gaussian(bundle.heatmap(role), Cell{r, c}, cfg.spurious_radius, render.sigma_divisor, score);
    }
  }

  if (cfg.noise_sigma > 0) {
    for (auto& map : bundle.keypoints) {
      for (Eigen::Index r = 0; r < map.rows(); ++r)
        for (Eigen::Index c = 0; c < map.cols(); ++c)
          map(r, c) = std::clamp(map(r, c) + cfg.noise_sigma * rng.normal(), 0.0, 1.0);
    }
  }
  return bundle;
}

}  // namespace recist

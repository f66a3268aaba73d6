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

// Ground-truth heatmap and offset rendering at output (strided) resolution.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "recist/geometry.hpp"
#include "recist/types.hpp"

namespace recist {

/// Five keypoint heatmaps and eight offset planes sharing one output grid.
template <typename Scalar>
struct HeatmapBundle {
  std::array<Grid<Scalar>, kNumKeypoints> keypoints;
  std::array<Grid<Scalar>, kNumOffsetPlanes> offsets;
  int stride = 4;
  int input_width = 0;
  int input_height = 0;

  HeatmapBundle() = default;
  HeatmapBundle(int rows, int cols, int stride_, int in_w, int in_h)
      : stride(stride_), input_width(in_w), input_height(in_h) {
    for (auto& g : keypoints) g = Grid<Scalar>::Zero(rows, cols);
    for (auto& g : offsets) g = Grid<Scalar>::Zero(rows, cols);
  }

  int rows() const { return static_cast<int>(keypoints[0].rows()); }
  int cols() const { return static_cast<int>(keypoints[0].cols()); }

  const Grid<Scalar>& heatmap(Role r) const { return keypoints[static_cast<int>(r)]; }
  Grid<Scalar>& heatmap(Role r) { return keypoints[static_cast<int>(r)]; }

  /// Offset plane for an extreme role; component 0 = dx, 1 = dy.
  const Grid<Scalar>& offset(Role r, int component) const {
    return offsets[2 * static_cast<int>(r) + component];
  }
  Grid<Scalar>& offset(Role r, int component) { return offsets[2 * static_cast<int>(r) + component]; }

  /// Channel i in file order: keypoint maps then offset planes.
  const Grid<Scalar>& channel(int i) const {
    return i < kNumKeypoints ? keypoints[i] : offsets[i - kNumKeypoints];
  }
  Grid<Scalar>& channel(int i) { return i < kNumKeypoints ? keypoints[i] : offsets[i - kNumKeypoints]; }

  template <typename Other>
  HeatmapBundle<Other> cast() const {
    HeatmapBundle<Other> out;
    for (int i = 0; i < kNumKeypoints; ++i) out.keypoints[i] = keypoints[i].template cast<Other>();
    for (int i = 0; i < kNumOffsetPlanes; ++i) out.offsets[i] = offsets[i].template cast<Other>();
    out.stride = stride;
    out.input_width = input_width;
    out.input_height = input_height;
    return out;
  }

  bool same_shape() const {
    for (int i = 0; i < kNumChannels; ++i)
      if (channel(i).rows() != rows() || channel(i).cols() != cols()) return false;
    return true;
  }
};

/// Ground-truth location of one keypoint on the output grid.
template <typename Scalar>
struct GtCell {
  Cell cell;
  Point2<Scalar> offset;  // p / s - floor(p / s)
  int annotation = 0;
};

template <typename Scalar>
struct TargetBundle {
  HeatmapBundle<Scalar> bundle;
  int n_objects = 0;
  /// Indexed by Role; one entry per annotation.
  std::array<std::vector<GtCell<Scalar>>, kNumKeypoints> gt_cells;
};

struct RenderOptions {
  double min_overlap = 0.3;
  /// sigma = radius / sigma_divisor
  double sigma_divisor = 3.0;
};

/// Largest shift r (in output cells, for a box of the given extent in output
/// cells) that keeps IoU >= min_overlap with the original box, over the three
/// corner-displacement cases: both corners translated together, both moved
/// inward, both moved outward. Floored to an integer, never below 1.
inline int gaussian_radius(double width, double height, double min_overlap = 0.3) {
  if (!(width > 0) || !(height > 0))
    throw std::invalid_argument("gaussian_radius: box dimensions must be positive");
  if (!(min_overlap > 0) || !(min_overlap < 1))
    throw std::invalid_argument("gaussian_radius: min_overlap must lie in (0, 1)");
  const double sum = width + height;
  const double prod = width * height;
  const double o = min_overlap;

  // (w - r)(h - r) / (2wh - (w - r)(h - r)) = o
  const double c1 = prod * (1 - o) / (1 + o);
  const double r1 = (sum - std::sqrt(sum * sum - 4 * c1)) / 2;
  // (w - 2r)(h - 2r) / wh = o
  const double r2 = (2 * sum - std::sqrt(4 * sum * sum - 16 * prod * (1 - o))) / 8;
  // wh / ((w + 2r)(h + 2r)) = o
  const double r3 = (-2 * o * sum + std::sqrt(4 * o * o * sum * sum + 16 * o * prod * (1 - o))) / (8 * o);

  const double r = std::min({r1, r2, r3});
  return std::max(1, static_cast<int>(std::floor(r)));
}

template <typename Scalar>
Point2<Scalar> offset_target(const Point2<Scalar>& p, int stride) {
  if (stride < 1) throw std::invalid_argument("offset_target: stride must be >= 1");
  const Point2<Scalar> q = p / Scalar(stride);
  return q - q.array().floor().matrix();
}

template <typename Scalar>
Cell cell_of(const Point2<Scalar>& p, int stride) {
  return {static_cast<int>(std::floor(p.y() / Scalar(stride))),
          static_cast<int>(std::floor(p.x() / Scalar(stride)))};
}

/// Draws peak * exp(-d^2 / (2 sigma^2)) over the (2r+1)^2 window around
/// `center`, combining with the existing values by element-wise maximum.
template <typename Scalar>
void draw_gaussian(Grid<Scalar>& grid, Cell center, int radius, double sigma_divisor,
                   Scalar peak = Scalar(1)) {
  const double sigma = radius / sigma_divisor;
  const double denom = 2 * sigma * sigma;
  const int r0 = std::max(0, center.row - radius);
  const int r1 = std::min<int>(static_cast<int>(grid.rows()) - 1, center.row + radius);
  const int c0 = std::max(0, center.col - radius);
  const int c1 = std::min<int>(static_cast<int>(grid.cols()) - 1, center.col + radius);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const int dy = r - center.row;
      const int dx = c - center.col;
      const Scalar v = peak * static_cast<Scalar>(std::exp(-(dx * dx + dy * dy) / denom));
      grid(r, c) = std::max(grid(r, c), v);
    }
  }
}

/// One kernel to be drawn: where, how wide, how tall, and whether its
/// offset entry is written.
template <typename Scalar>
struct KeypointPlacement {
  Role role = Role::Top;
  Cell cell;
  Point2<Scalar> offset = Point2<Scalar>::Zero();
  int radius = 1;
  Scalar peak = Scalar(1);
  bool write_offset = true;
};

/// Kernel size for one annotation: the gaussian radius of its tight box
/// measured in output cells. Degenerate boxes get the minimum radius.
template <typename Scalar>
int annotation_radius(const ExtremePoints<Scalar>& e, int stride, const RenderOptions& opt) {
  const auto box = bbox_from_extremes(e);
  const double w = static_cast<double>(box.width()) / stride;
  const double h = static_cast<double>(box.height()) / stride;
  if (!(w > 0) || !(h > 0)) return 1;
  return gaussian_radius(w, h, opt.min_overlap);
}

/// Exact placements of all five keypoints of every annotation, annotation-major
/// then role order. Throws if a keypoint falls outside the output grid.
template <typename Scalar>
std::vector<KeypointPlacement<Scalar>> keypoint_placements(std::span<const ExtremePoints<Scalar>> annotations,
                                                           int out_h, int out_w, int stride,
                                                           const RenderOptions& opt = {}) {
  std::vector<KeypointPlacement<Scalar>> out;
  out.reserve(annotations.size() * kNumKeypoints);
  for (std::size_t a = 0; a < annotations.size(); ++a) {
    const auto& e = annotations[a];
    const int radius = annotation_radius(e, stride, opt);
    for (int k = 0; k < kNumKeypoints; ++k) {
      const Role role = static_cast<Role>(k);
      const Point2<Scalar>& p = e[role];
      const Cell cell = cell_of(p, stride);
      if (!p.allFinite() || p.x() < 0 || p.y() < 0 || cell.row >= out_h || cell.col >= out_w)
        throw std::out_of_range("render_targets: annotation " + std::to_string(a) + " " +
                                std::string(role_name(role)) + " keypoint lies outside the " +
                                std::to_string(out_w) + "x" + std::to_string(out_h) + " output grid");
      out.push_back({role, cell, offset_target(p, stride), radius, Scalar(1), role != Role::Center});
    }
  }
  return out;
}

/// Draws placements into a zeroed bundle. Later offset writes to the same
/// cell overwrite earlier ones.
template <typename Scalar>
void draw_placements(HeatmapBundle<Scalar>& bundle, std::span<const KeypointPlacement<Scalar>> placements,
                     const RenderOptions& opt = {}) {
  for (const auto& pl : placements) {
    draw_gaussian(bundle.heatmap(pl.role), pl.cell, pl.radius, opt.sigma_divisor, pl.peak);
    if (pl.write_offset && pl.role != Role::Center) {
      bundle.offset(pl.role, 0)(pl.cell.row, pl.cell.col) = pl.offset.x();
      bundle.offset(pl.role, 1)(pl.cell.row, pl.cell.col) = pl.offset.y();
    }
  }
}

template <typename Scalar>
TargetBundle<Scalar> render_targets(std::span<const ExtremePoints<Scalar>> annotations, int out_h, int out_w,
                                    int stride, const RenderOptions& opt = {}) {
  if (stride < 1 || out_h < 1 || out_w < 1) throw std::invalid_argument("render_targets: bad grid geometry");
  const auto placements = keypoint_placements(annotations, out_h, out_w, stride, opt);

  TargetBundle<Scalar> t;
  t.bundle = HeatmapBundle<Scalar>(out_h, out_w, stride, out_w * stride, out_h * stride);
  t.n_objects = static_cast<int>(annotations.size());
  draw_placements<Scalar>(t.bundle, placements, opt);
  for (std::size_t i = 0; i < placements.size(); ++i) {
    const auto& pl = placements[i];
    t.gt_cells[static_cast<int>(pl.role)].push_back(
        {pl.cell, pl.offset, static_cast<int>(i / kNumKeypoints)});
  }
  return t;
}

template <typename Scalar>
TargetBundle<Scalar> render_targets(const std::vector<ExtremePoints<Scalar>>& annotations, int out_h, int out_w,
                                    int stride, const RenderOptions& opt = {}) {
  return render_targets(std::span<const ExtremePoints<Scalar>>(annotations), out_h, out_w, stride, opt);
}

}  // namespace recist

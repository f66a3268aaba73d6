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

// Geometric grouping of keypoint heatmaps into scored detections:
// peak extraction, center-validated quadruple enumeration, and offset
// refinement.

#include <algorithm>
#include <cmath>
#include <queue>
#include <thread>
#include <tuple>
#include <vector>

#include "recist/geometry.hpp"
#include "recist/targets.hpp"
#include "recist/types.hpp"

namespace recist {

enum class CenterLookup { Nearest, Bilinear };

struct GroupingConfig {
  double tau_e = 0.1;
  double tau_c = 0.1;
  int k1 = 40;
  int k2 = 100;
  int kernel = 3;
  CenterLookup center_lookup = CenterLookup::Nearest;
  /// Threads for quadruple enumeration; output does not depend on it.
  int workers = 1;

  void validate() const {
    if (!(tau_e >= 0 && tau_e <= 1) || !(tau_c >= 0 && tau_c <= 1))
      throw std::invalid_argument("GroupingConfig: thresholds must lie in [0, 1]");
    if (k1 < 1 || k2 < 1) throw std::invalid_argument("GroupingConfig: k1 and k2 must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("GroupingConfig: kernel must be odd and >= 1");
    if (workers < 1) throw std::invalid_argument("GroupingConfig: workers must be >= 1");
  }
};

struct Peak {
  Cell cell;
  double score = 0;
  Role role = Role::Top;
  /// Position inside the cell in cell units. Without an offset prediction the
  /// keypoint is taken to sit at the cell center.
  Point2d subcell = Point2d(0.5, 0.5);

  Point2d grid_position() const { return Point2d(cell.col + subcell.x(), cell.row + subcell.y()); }
};

/// Orders peaks by score descending, then row, then column.
inline bool peak_before(const Peak& a, const Peak& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.cell < b.cell;
}

/// A center-validated quadruple in grid coordinates, before refinement.
struct Candidate {
  std::array<Peak, kNumExtremes> peaks;  // top, left, bottom, right
  Cell center_cell;
  double center_score = 0;
  double score = 0;

  const Peak& operator[](Role r) const { return peaks[static_cast<int>(r)]; }
};

/// Score descending, then cells of top, left, bottom, right lexicographically.
inline bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  for (int k = 0; k < kNumExtremes; ++k)
    if (a.peaks[k].cell != b.peaks[k].cell) return a.peaks[k].cell < b.peaks[k].cell;
  return false;
}

inline double combination_score(double t, double l, double b, double r, double c) {
  return t + l + b + r + 2 * c;
}

enum class Source { Original, Flipped };

struct Detection {
  ExtremePoints<double> extremes;
  double score = 0;
  BBox<double> bbox;
  Source source = Source::Original;
};

template <typename Scalar>
std::vector<Peak> extract_peaks(const Grid<Scalar>& map, const GroupingConfig& cfg, Role role) {
  cfg.validate();
  const int rows = static_cast<int>(map.rows());
  const int cols = static_cast<int>(map.cols());
  const int half = cfg.kernel / 2;
  std::vector<Peak> peaks;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Scalar v = map(r, c);
      if (!(static_cast<double>(v) > cfg.tau_e)) continue;
      const int r0 = std::max(0, r - half), r1 = std::min(rows - 1, r + half);
      const int c0 = std::max(0, c - half), c1 = std::min(cols - 1, c + half);
      if (map.block(r0, c0, r1 - r0 + 1, c1 - c0 + 1).maxCoeff() == v)
        peaks.push_back({{r, c}, static_cast<double>(v), role});
    }
  }
  std::sort(peaks.begin(), peaks.end(), peak_before);
  if (peaks.size() > static_cast<std::size_t>(cfg.k1)) peaks.resize(cfg.k1);
  return peaks;
}

namespace detail {

template <typename Scalar>
double sample_center(const Grid<Scalar>& center, double gx, double gy, CenterLookup mode, Cell& cell) {
  const int rows = static_cast<int>(center.rows());
  const int cols = static_cast<int>(center.cols());
  cell = {static_cast<int>(std::floor(gy)), static_cast<int>(std::floor(gx))};
  if (cell.row < 0 || cell.row >= rows || cell.col < 0 || cell.col >= cols) return 0.0;
  if (mode == CenterLookup::Nearest) return static_cast<double>(center(cell.row, cell.col));

  // Cell centers sit at integer + 0.5.
  const double x = std::clamp(gx - 0.5, 0.0, cols - 1.0);
  const double y = std::clamp(gy - 0.5, 0.0, rows - 1.0);
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, cols - 1), y1 = std::min(y0 + 1, rows - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * center(y0, x0) + fx * center(y0, x1)) +
         fy * ((1 - fx) * center(y1, x0) + fx * center(y1, x1));
}

struct CandidateWorse {
  bool operator()(const Candidate& a, const Candidate& b) const { return candidate_before(a, b); }
};

// Max-heap on "worst first": the top is the candidate that would be evicted.
using BoundedHeap = std::priority_queue<Candidate, std::vector<Candidate>, CandidateWorse>;

inline void offer(BoundedHeap& heap, std::size_t capacity, Candidate&& c) {
  if (heap.size() < capacity) {
    heap.push(std::move(c));
  } else if (candidate_before(c, heap.top())) {
    heap.pop();
    heap.push(std::move(c));
  }
}

}  // namespace detail

/// Enumerates every (top, left, bottom, right) combination, keeping those
/// with top above bottom, left of right, and a center response above tau_c.
/// The center is the midpoint of the left/right x and top/bottom y positions
/// (cell + subcell), looked up at the cell containing it. Returns the best
/// k2 candidates ordered by candidate_before.
template <typename Scalar>
std::vector<Candidate> enumerate_quadruples(const std::array<std::vector<Peak>, kNumExtremes>& peaks,
                                            const Grid<Scalar>& center_map, const GroupingConfig& cfg) {
  cfg.validate();
  const auto& tops = peaks[static_cast<int>(Role::Top)];
  const auto& lefts = peaks[static_cast<int>(Role::Left)];
  const auto& bottoms = peaks[static_cast<int>(Role::Bottom)];
  const auto& rights = peaks[static_cast<int>(Role::Right)];

  struct Pair {
    std::size_t a, b;
    double coord;
  };
  std::vector<Pair> horizontal;
  for (std::size_t l = 0; l < lefts.size(); ++l)
    for (std::size_t r = 0; r < rights.size(); ++r)
      if (lefts[l].cell.col <= rights[r].cell.col)
        horizontal.push_back({l, r, (lefts[l].grid_position().x() + rights[r].grid_position().x()) / 2});

  const std::size_t capacity = static_cast<std::size_t>(cfg.k2);
  auto run = [&](std::size_t first_top, std::size_t step, detail::BoundedHeap& heap) {
    for (std::size_t t = first_top; t < tops.size(); t += step) {
      for (const auto& bot : bottoms) {
        if (tops[t].cell.row > bot.cell.row) continue;
        const double gy = (tops[t].grid_position().y() + bot.grid_position().y()) / 2;
        for (const auto& h : horizontal) {
          Cell cc;
          const double cs = detail::sample_center(center_map, h.coord, gy, cfg.center_lookup, cc);
          if (!(cs > cfg.tau_c)) continue;
          Candidate cand;
          cand.peaks = {tops[t], lefts[h.a], bot, rights[h.b]};
          cand.center_cell = cc;
          cand.center_score = cs;
          cand.score = combination_score(tops[t].score, lefts[h.a].score, bot.score, rights[h.b].score, cs);
          detail::offer(heap, capacity, std::move(cand));
        }
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(cfg.workers, std::max<std::size_t>(tops.size(), 1));
  std::vector<detail::BoundedHeap> heaps(workers);
  if (workers == 1) {
    run(0, 1, heaps[0]);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back([&, w] { run(w, workers, heaps[w]); });
  }

  std::vector<Candidate> out;
  for (auto& heap : heaps) {
    while (!heap.empty()) {
      out.push_back(heap.top());
      heap.pop();
    }
  }
  std::sort(out.begin(), out.end(), candidate_before);
  if (out.size() > capacity) out.resize(capacity);
  return out;
}

/// Maps candidates to input pixels: coordinate = stride * (cell + offset).
/// The center is recomputed from the refined extremes.
template <typename Scalar>
std::vector<Detection> refine_with_offsets(const std::vector<Candidate>& candidates,
                                           const std::array<Grid<Scalar>, kNumOffsetPlanes>& offsets, int stride) {
  std::vector<Detection> out;
  out.reserve(candidates.size());
  for (const auto& cand : candidates) {
    Detection det;
    for (int k = 0; k < kNumExtremes; ++k) {
      const Cell c = cand.peaks[k].cell;
      const double dx = static_cast<double>(offsets[2 * k](c.row, c.col));
      const double dy = static_cast<double>(offsets[2 * k + 1](c.row, c.col));
      det.extremes[static_cast<Role>(k)] = Point2d(stride * (c.col + dx), stride * (c.row + dy));
    }
    det.extremes.update_center();
    det.bbox = bbox_from_extremes(det.extremes);
    det.score = cand.score;
    out.push_back(det);
  }
  return out;
}

/// Full grouping: peaks per extreme map (positioned with their predicted
/// offsets), center-validated enumeration, and refinement.
template <typename Scalar>
std::vector<Detection> detect(const HeatmapBundle<Scalar>& bundle, const GroupingConfig& cfg) {
  cfg.validate();
  if (!bundle.same_shape()) throw std::invalid_argument("detect: bundle planes differ in shape");
  std::array<std::vector<Peak>, kNumExtremes> peaks;
  for (int k = 0; k < kNumExtremes; ++k) {
    const Role role = static_cast<Role>(k);
    peaks[k] = extract_peaks(bundle.heatmap(role), cfg, role);
    for (auto& p : peaks[k])
      p.subcell = Point2d(static_cast<double>(bundle.offset(role, 0)(p.cell.row, p.cell.col)),
                          static_cast<double>(bundle.offset(role, 1)(p.cell.row, p.cell.col)));
  }
  const auto candidates = enumerate_quadruples(peaks, bundle.heatmap(Role::Center), cfg);
  return refine_with_offsets(candidates, bundle.offsets, bundle.stride);
}

}  // namespace recist

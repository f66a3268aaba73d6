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

// Synthetic detector: procedurally generated lesion scenes and controllably
// degraded heatmap bundles, standing in for a trained network.

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "recist/dataio.hpp"
#include "recist/targets.hpp"

namespace recist {

/// splitmix64 (Vigna). Used to expand a 64-bit seed into generator state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// xoshiro256** seeded from four splitmix64 outputs. All derived draws are
/// defined here (not by the standard library distributions) so streams are
/// reproducible across platforms and languages.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next(); }

  std::uint64_t next();
  /// (next() >> 11) * 2^-53, in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Inclusive range; lo + floor(uniform() * (hi - lo + 1)).
  int uniform_int(int lo, int hi);
  /// Box-Muller on two uniforms, cosine branch only: one normal per two draws.
  double normal();
  /// Knuth's product-of-uniforms method.
  int poisson(double lambda);

 private:
  std::uint64_t s_[4];
};

struct SceneOptions {
  int image_width = 512;
  int image_height = 512;
  /// Long-diameter range in mm.
  double min_size_mm = 8;
  double max_size_mm = 40;
  /// In-plane pixel spacing range, mm per pixel.
  double min_spacing = 0.6;
  double max_spacing = 1.0;
  /// short / long ratio range.
  double min_aspect = 0.4;
  double max_aspect = 1.0;
  /// Minimum separation between padded boxes, pixels, along x or y.
  double min_gap = 8;
  double pad = 5;
  int max_retries = 2000;
  std::string key;  // empty: derived from the seed
  /// Reject placements where keypoints of different lesions could be grouped
  /// into a center-validated quadruple (see count_cross_lesion_quadruples).
  bool unambiguous_grouping = true;
  int stride = 4;
  double tau_c = 0.1;
  RenderOptions render;
};

struct SyntheticScene {
  int width = 0;
  int height = 0;
  std::vector<RecistAnnotation> lesions;

  std::vector<ExtremePoints<double>> extremes() const;
};

/// DeepLesion-style key for a synthetic image, e.g. "000042_01_01_000.png".
std::string scene_key(std::uint64_t seed);

/// Separation of two boxes: the largest axis gap (negative when overlapping).
double box_gap(const BBox<double>& a, const BBox<double>& b);

/// Number of quadruples mixing keypoints of at least two lesions that would
/// pass the center test on noise-free rendered targets: keypoints on their
/// exact cells, center taken at the midpoint of the exact keypoint positions,
/// center response from the rendered center kernels.
int count_cross_lesion_quadruples(const std::vector<ExtremePoints<double>>& lesions, int stride, double tau_c,
                                  const RenderOptions& render = {});

/// Random lesions (ellipse axes and orientation mapped to RECIST diameters)
/// placed with pairwise padded-box gaps. Throws std::runtime_error when the
/// packing cannot be satisfied within the retry budget.
SyntheticScene generate_scene(int n_lesions, std::uint64_t seed, const SceneOptions& opt = {});

struct DegradationConfig {
  double noise_sigma = 0;
  double peak_drop_prob = 0;
  double spurious_rate = 0;
  int jitter_cells = 0;
  std::uint64_t seed = 0;
  /// Spurious peak scores are drawn from U(spurious_min_score, 1).
  double spurious_min_score = 0.1;
  int spurious_radius = 1;
  /// Spurious peaks keep this Chebyshev distance (cells) from true peaks.
  int spurious_exclusion = 2;

  void validate() const;
};

/// Output grid size for an input extent: ceil(extent / stride).
inline int output_extent(int input_extent, int stride) { return (input_extent + stride - 1) / stride; }

/// Renders the scene's targets and degrades them. Draw order: per lesion and
/// role (drop, jitter x, jitter y), then per keypoint map (spurious count, then
/// per spurious peak row, col, score), then noise in map-major raster order.
HeatmapBundle<double> simulate_heatmaps(const SyntheticScene& scene, const DegradationConfig& cfg, int stride,
                                        const RenderOptions& render = {});

}  // namespace recist

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

#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "oracles.hpp"
#include "recist/grouping.hpp"

namespace recist {
namespace {

std::set<std::pair<int, int>> cells_of(const std::vector<Peak>& peaks) {
  std::set<std::pair<int, int>> out;
  for (const auto& p : peaks) out.insert({p.cell.row, p.cell.col});
  return out;
}

Peak make_peak(int row, int col, double score, Role role) {
  Peak p;
  p.cell = {row, col};
  p.score = score;
  p.role = role;
  return p;
}

TEST(ExtractPeaks, IsolatedMaximaAndPlateaus) {
  Grid2d g = Grid2d::Zero(5, 5);
  g(1, 1) = 0.9;
  g(3, 3) = 0.5;
  g(3, 4) = 0.5;  // plateau: both survive the equality test
  g(0, 4) = 0.1;  // at threshold, rejected
  const auto peaks = extract_peaks(g, GroupingConfig{}, Role::Top);
  ASSERT_EQ(peaks.size(), 3u);
  EXPECT_EQ(peaks[0].cell, (Cell{1, 1}));
  EXPECT_EQ(peaks[1].cell, (Cell{3, 3}));
  EXPECT_EQ(peaks[2].cell, (Cell{3, 4}));
  EXPECT_EQ(peaks[0].role, Role::Top);
}

TEST(ExtractPeaks, NonMaximaSuppressed) {
  Grid2d g = Grid2d::Zero(4, 4);
  g(1, 1) = 0.8;
  g(1, 2) = 0.6;
  g(2, 2) = 0.7;
  const auto peaks = extract_peaks(g, GroupingConfig{}, Role::Left);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_EQ(peaks[0].cell, (Cell{1, 1}));
}

TEST(ExtractPeaks, MatchesBruteForce) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int size : {16, 64}) {
    for (int trial = 0; trial < 10; ++trial) {
      Grid2d g(size, size);
      for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = std::floor(u(gen) * 8) / 8;  // forces ties
      GroupingConfig cfg;
      cfg.k1 = size * size;
      EXPECT_EQ(cells_of(extract_peaks(g, cfg, Role::Top)), testing::brute_force_peaks(g, cfg.tau_e, 3));
      cfg.kernel = 5;
      EXPECT_EQ(cells_of(extract_peaks(g, cfg, Role::Top)), testing::brute_force_peaks(g, cfg.tau_e, 5));
    }
  }
}

TEST(ExtractPeaks, TopKOrdering) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0, 1);
  Grid2d g(64, 64);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = u(gen);
  const auto peaks = extract_peaks(g, GroupingConfig{}, Role::Right);
  ASSERT_EQ(peaks.size(), 40u);
  EXPECT_TRUE(std::is_sorted(peaks.begin(), peaks.end(), peak_before));
  GroupingConfig all;
  all.k1 = 4096;
  const auto every = extract_peaks(g, all, Role::Right);
  EXPECT_TRUE(std::equal(peaks.begin(), peaks.end(), every.begin(),
                         [](const Peak& a, const Peak& b) { return a.cell == b.cell && a.score == b.score; }));
}

TEST(ExtractPeaks, EmptyAndFlatMaps) {
  EXPECT_TRUE(extract_peaks(Grid2d(Grid2d::Zero(8, 8)), GroupingConfig{}, Role::Top).empty());
  EXPECT_TRUE(extract_peaks(Grid2d(0, 0), GroupingConfig{}, Role::Top).empty());
  EXPECT_EQ(extract_peaks(Grid2d(Grid2d::Constant(3, 3, 0.5)), GroupingConfig{}, Role::Top).size(), 9u);
}

TEST(GroupingConfig, Validation) {
  GroupingConfig cfg;
  cfg.kernel = 2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.k1 = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.workers = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

std::array<std::vector<Peak>, 4> unit_quad() {
  return {{{make_peak(2, 5, 0.5, Role::Top)},
           {make_peak(5, 2, 0.5, Role::Left)},
           {make_peak(8, 5, 0.5, Role::Bottom)},
           {make_peak(5, 8, 0.5, Role::Right)}}};
}

TEST(EnumerateQuadruples, ScoresCombination) {
  Grid2d center = Grid2d::Zero(12, 12);
  center(5, 5) = 1.0;
  const auto cands = enumerate_quadruples(unit_quad(), center, GroupingConfig{});
  ASSERT_EQ(cands.size(), 1u);
  EXPECT_DOUBLE_EQ(cands[0].score, 4.0);
  EXPECT_EQ(cands[0].center_cell, (Cell{5, 5}));
  EXPECT_EQ(cands[0].center_score, 1.0);
}

TEST(EnumerateQuadruples, CenterThresholdIsStrict) {
  Grid2d center = Grid2d::Zero(12, 12);
  center(5, 5) = 0.1;
  EXPECT_TRUE(enumerate_quadruples(unit_quad(), center, GroupingConfig{}).empty());
  center(5, 5) = std::nextafter(0.1, 1.0);
  EXPECT_EQ(enumerate_quadruples(unit_quad(), center, GroupingConfig{}).size(), 1u);
}

TEST(EnumerateQuadruples, RejectsInvertedGeometry) {
  Grid2d center = Grid2d::Constant(12, 12, 1.0);
  auto q = unit_quad();
  q[0][0].cell.row = 9;  // top below bottom
  EXPECT_TRUE(enumerate_quadruples(q, center, GroupingConfig{}).empty());
  q = unit_quad();
  q[1][0].cell.col = 9;  // left right of right
  EXPECT_TRUE(enumerate_quadruples(q, center, GroupingConfig{}).empty());
  q = unit_quad();
  q[0][0].cell.row = 8;  // equal rows and columns are allowed
  q[1][0].cell.col = 8;
  EXPECT_EQ(enumerate_quadruples(q, center, GroupingConfig{}).size(), 1u);
}

std::array<std::vector<Peak>, 4> random_peaks(std::mt19937_64& gen, int size, int per_role) {
  std::uniform_int_distribution<int> pos(0, size - 1);
  std::uniform_real_distribution<double> score(0.1, 1.0);
  std::array<std::vector<Peak>, 4> peaks;
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < per_role; ++i) peaks[k].push_back(make_peak(pos(gen), pos(gen), score(gen), Role(k)));
  return peaks;
}

Grid2d random_center(std::mt19937_64& gen, int size) {
  std::uniform_real_distribution<double> u(0, 0.3);
  Grid2d c(size, size);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = u(gen);
  return c;
}

TEST(EnumerateQuadruples, MatchesExhaustiveOracle) {
  std::mt19937_64 gen(21);
  std::uniform_int_distribution<int> count(0, 6);
  for (int trial = 0; trial < 300; ++trial) {
    auto peaks = random_peaks(gen, 12, 0);
    std::uniform_int_distribution<int> pos(0, 11);
    std::uniform_real_distribution<double> score(0.1, 1.0);
    for (int k = 0; k < 4; ++k) {
      const int n = count(gen);
      for (int i = 0; i < n; ++i) peaks[k].push_back(make_peak(pos(gen), pos(gen), score(gen), Role(k)));
    }
    const Grid2d center = random_center(gen, 12);
    GroupingConfig cfg;
    cfg.k2 = 100000;
    const auto got = testing::to_oracle(enumerate_quadruples(peaks, center, cfg));
    const auto want = testing::exhaustive_quadruples(peaks, center, cfg.tau_c);
    ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].cells, want[i].cells);
      EXPECT_NEAR(got[i].score, want[i].score, 1e-12);
    }
  }
}

TEST(EnumerateQuadruples, TruncatesToBestK2InOrder) {
  std::mt19937_64 gen(22);
  const auto peaks = random_peaks(gen, 20, 8);
  const Grid2d center = random_center(gen, 20);
  GroupingConfig all;
  all.k2 = 100000;
  const auto every = enumerate_quadruples(peaks, center, all);
  ASSERT_GT(every.size(), 100u);
  const auto top = enumerate_quadruples(peaks, center, GroupingConfig{});
  ASSERT_EQ(top.size(), 100u);
  EXPECT_TRUE(std::is_sorted(top.begin(), top.end(), candidate_before));
  for (std::size_t i = 0; i < top.size(); ++i) EXPECT_EQ(top[i].score, every[i].score);
}

TEST(EnumerateQuadruples, WorkerCountDoesNotChangeResult) {
  std::mt19937_64 gen(23);
  const auto peaks = random_peaks(gen, 40, 40);
  const Grid2d center = random_center(gen, 40);
  GroupingConfig cfg;
  const auto base = enumerate_quadruples(peaks, center, cfg);
  for (int w : {2, 3, 4, 7, 64}) {
    cfg.workers = w;
    const auto other = enumerate_quadruples(peaks, center, cfg);
    ASSERT_EQ(other.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      EXPECT_EQ(other[i].score, base[i].score);
      for (int k = 0; k < 4; ++k) EXPECT_EQ(other[i].peaks[k].cell, base[i].peaks[k].cell);
    }
  }
}

TEST(EnumerateQuadruples, PermutationInvariant) {
  std::mt19937_64 gen(24);
  auto peaks = random_peaks(gen, 24, 10);
  const Grid2d center = random_center(gen, 24);
  GroupingConfig cfg;
  cfg.k2 = 100000;
  const auto base = testing::to_oracle(enumerate_quadruples(peaks, center, cfg));
  for (auto& v : peaks) std::shuffle(v.begin(), v.end(), gen);
  EXPECT_EQ(testing::to_oracle(enumerate_quadruples(peaks, center, cfg)), base);
}

TEST(EnumerateQuadruples, MonotoneInThresholds) {
  std::mt19937_64 gen(25);
  const auto peaks = random_peaks(gen, 24, 10);
  const Grid2d center = random_center(gen, 24);
  GroupingConfig cfg;
  cfg.k2 = 100000;
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double tau : {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3}) {
    cfg.tau_c = tau;
    const std::size_t n = enumerate_quadruples(peaks, center, cfg).size();
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(EnumerateQuadruples, BilinearLookupInterpolates) {
  Grid2d center = Grid2d::Zero(12, 12);
  center(5, 5) = 1.0;
  auto q = unit_quad();
  // Midpoint x lands at 5.75: a quarter of the way toward column 6.
  q[3][0].subcell = Point2d(1.0, 0.5);
  GroupingConfig cfg;
  cfg.center_lookup = CenterLookup::Bilinear;
  const auto cands = enumerate_quadruples(q, center, cfg);
  ASSERT_EQ(cands.size(), 1u);
  EXPECT_NEAR(cands[0].center_score, 0.75, 1e-12);
  cfg.center_lookup = CenterLookup::Nearest;
  EXPECT_EQ(enumerate_quadruples(q, center, cfg)[0].center_score, 1.0);
}

TEST(RefineWithOffsets, MapsCellsToPixels) {
  std::array<Grid2d, kNumOffsetPlanes> offsets;
  for (auto& g : offsets) g = Grid2d::Zero(6, 6);
  offsets[0](1, 2) = 0.5;  // top dx at cell (row 1, col 2)
  offsets[1](1, 2) = 0.75;
  Candidate c;
  c.peaks = {make_peak(1, 2, 0.9, Role::Top), make_peak(3, 0, 0.9, Role::Left), make_peak(5, 2, 0.9, Role::Bottom),
             make_peak(3, 4, 0.9, Role::Right)};
  c.score = 5.0;
  const auto dets = refine_with_offsets(std::vector<Candidate>{c}, offsets, 4);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].extremes.top, Point2d(10, 7));
  EXPECT_EQ(dets[0].extremes.left, Point2d(0, 12));
  EXPECT_EQ(dets[0].bbox, (BBox<double>{0, 7, 16, 20}));
  EXPECT_EQ(dets[0].score, 5.0);
  EXPECT_EQ(dets[0].source, Source::Original);
}

ExtremePoints<double> lesion_at(double cx, double cy, double half_w, double half_h) {
  ExtremePoints<double> e{{cx + 0.3, cy - half_h}, {cx - half_w, cy + 0.7}, {cx - 0.6, cy + half_h},
                          {cx + half_w, cy - 0.2}, {}};
  e.update_center();
  return e;
}

TEST(Detect, RecoversSingleAnnotation) {
  const auto e = lesion_at(60.25, 70.5, 20, 14);
  const auto t = render_targets(std::vector<ExtremePoints<double>>{e}, 40, 40, 4);
  const auto dets = detect(t.bundle, GroupingConfig{});
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].score, 6.0);
  for (int k = 0; k < kNumKeypoints; ++k)
    EXPECT_LT((dets[0].extremes[Role(k)] - e[Role(k)]).norm(), 1e-9) << role_name(Role(k));
}

TEST(Detect, EmptyBundleHasNoDetections) {
  HeatmapBundle<double> b(16, 16, 4, 64, 64);
  EXPECT_TRUE(detect(b, GroupingConfig{}).empty());
}

TEST(Detect, SeparatedAnnotations) {
  const std::vector<ExtremePoints<double>> es = {lesion_at(40.5, 40.5, 15, 10), lesion_at(120.5, 130.5, 12, 18)};
  const auto t = render_targets(es, 48, 48, 4);
  const auto dets = detect(t.bundle, GroupingConfig{});
  int exact = 0;
  for (const auto& d : dets)
    if (d.score == 6.0) ++exact;
  EXPECT_EQ(exact, 2);
  for (const auto& e : es) {
    bool found = false;
    for (const auto& d : dets)
      if (d.score == 6.0 && (d.extremes.top - e.top).norm() < 1e-9) found = true;
    EXPECT_TRUE(found);
  }
}

TEST(Detect, FloatBundleAgrees) {
  const auto e = lesion_at(60.25, 70.5, 20, 14);
  const auto t = render_targets(std::vector<ExtremePoints<double>>{e}, 40, 40, 4);
  const auto d64 = detect(t.bundle, GroupingConfig{});
  const auto d32 = detect(t.bundle.cast<float>(), GroupingConfig{});
  ASSERT_EQ(d32.size(), d64.size());
  EXPECT_NEAR(d32[0].score, d64[0].score, 1e-6);
  EXPECT_LT((d32[0].extremes.top - d64[0].extremes.top).norm(), 1e-4);
}

}  // namespace
}  // namespace recist

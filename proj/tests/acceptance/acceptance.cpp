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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "recist/dataio.hpp"
#include "recist/eval.hpp"
#include "recist/fusion.hpp"
#include "recist/grouping.hpp"
#include "recist/loss.hpp"
#include "recist/oracle.hpp"

namespace fs = std::filesystem;
using namespace recist;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

// ---------------------------------------------------------------------------
// 1. Zero-noise round trip.

Outcome zero_noise_round_trip() {
  const auto t0 = Clock::now();
  std::vector<std::vector<Detection>> all_dets;
  std::vector<std::vector<BBox<double>>> all_gts;
  int lesions = 0, recovered = 0;
  double worst_err = 0, worst_iou = 1;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const int n = 1 + static_cast<int>(seed % 5);
    const auto scene = generate_scene(n, seed);
    const auto ex = scene.extremes();
    const auto t = render_targets(ex, output_extent(scene.height, 4), output_extent(scene.width, 4), 4);
    const auto dets = detect(t.bundle, GroupingConfig{});
    std::vector<BBox<double>> gts;
    for (std::size_t i = 0; i < ex.size(); ++i) {
      ++lesions;
      gts.push_back(scene.lesions[i].bbox);
      double best = std::numeric_limits<double>::infinity();
      const Detection* match = nullptr;
      for (const auto& d : dets) {
        double err = 0;
        for (int k = 0; k < kNumKeypoints; ++k) err = std::max(err, (d.extremes[Role(k)] - ex[i][Role(k)]).norm());
        if (err < best) {
          best = err;
          match = &d;
        }
      }
      if (!match) continue;
      const double ov = iou(pad_bbox(match->bbox, 5.0), scene.lesions[i].bbox);
      worst_err = std::max(worst_err, best);
      worst_iou = std::min(worst_iou, ov);
      if (best < 1e-6 && ov == 1.0) ++recovered;
    }
    all_dets.push_back(dets);
    all_gts.push_back(std::move(gts));
  }
  const auto r = froc(match_detections(all_dets, all_gts), {0.5});
  const int fps = r.curve.back().fp;
  const double secs = seconds_since(t0);
  std::ostringstream ss;
  ss << recovered << "/" << lesions << " lesions recovered, max point error " << worst_err << " px, min IoU "
     << worst_iou << ", sensitivity@0.5 " << r.operating_points[0].sensitivity << ", FPs " << fps << ", " << secs
     << " s";
  return {recovered == lesions && r.operating_points[0].sensitivity == 1.0 && fps == 0 && secs < 60, ss.str()};
}

// ---------------------------------------------------------------------------
// 2. Focal loss.

Outcome focal_loss_correctness() {
  Grid2d pred = Grid2d::Constant(2, 2, 0.5), target = Grid2d::Zero(2, 2);
  target(0, 0) = 1;
  const double example = focal_loss(pred, target, 1);
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> p(0.02, 0.98), shoulder(0.0, 0.9);
  std::uniform_int_distribution<int> kind(0, 3);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Grid2d x(8, 8), y(8, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = p(gen);
      const int k = kind(gen);
      y.data()[i] = k == 0 ? 1.0 : k == 1 ? 0.0 : shoulder(gen);
    }
    const Grid2d g = focal_loss_grad(x, y, 3);
    // Reference loss in extended precision; the analytic gradient is double.
    const Grid<long double> yl = y.cast<long double>();
    const auto rep = finite_diff_check<double>(
        [&](const VectorX<double>& v) {
          return focal_loss(Eigen::Map<const Grid2d>(v.data(), 8, 8).cast<long double>(), yl, 3);
        },
        Eigen::Map<const VectorX<double>>(x.data(), x.size()), Eigen::Map<const VectorX<double>>(g.data(), g.size()),
        1e-6, 1e-5);
    worst = std::max(worst, rep.max_rel_err);
  }
  std::ostringstream ss;
  ss.precision(9);
  ss << "2x2 example " << example << ", max gradient rel err " << worst << " over 100 instances";
  return {std::abs(example - 0.693147) <= 1e-6 && worst < 1e-5, ss.str()};
}

// ---------------------------------------------------------------------------
// 3. Offsets.

Outcome offset_correctness() {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0, 512);
  int exact = 0;
  for (int i = 0; i < 10000; ++i) {
    const int s = 1 << (i % 4);
    const Point2d pt(u(gen), u(gen));
    const Point2d off = offset_target(pt, s);
    const Cell c = cell_of(pt, s);
    if (s * (c.col + off.x()) == pt.x() && s * (c.row + off.y()) == pt.y()) ++exact;
  }
  ExtremePoints<double> e{{30.5, 10.25}, {12.75, 31}, {30, 50.5}, {47.25, 29.75}, {}};
  e.update_center();
  const auto t = render_targets(std::vector<ExtremePoints<double>>{e}, 16, 16, 4);
  auto pred = t.bundle.offsets;
  for (int k = 0; k < kNumExtremes; ++k) {
    const Cell c = t.gt_cells[k][0].cell;
    pred[2 * k](c.row, c.col) += 0.5;
    pred[2 * k + 1](c.row, c.col) -= 0.5;
  }
  const double loss = offset_loss(pred, t);
  std::ostringstream ss;
  ss << exact << "/10000 exact reconstructions, off-by-0.5 loss " << loss;
  return {exact == 10000 && loss == 1.0, ss.str()};
}

// ---------------------------------------------------------------------------
// 4. Grouping against the exhaustive enumerator.

Outcome grouping_oracle() {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> count(0, 6), pos(0, 23);
  std::uniform_real_distribution<double> score(0.11, 1.0), cval(0.0, 0.3);
  int equal = 0;
  for (int trial = 0; trial < 100; ++trial) {
    HeatmapBundle<double> b(24, 24, 4, 96, 96);
    for (int k = 0; k < kNumExtremes; ++k) {
      const int n = count(gen);
      for (int i = 0; i < n; ++i) b.keypoints[k](pos(gen), pos(gen)) = score(gen);
    }
    for (Eigen::Index i = 0; i < b.keypoints[4].size(); ++i) b.keypoints[4].data()[i] = cval(gen);
    GroupingConfig cfg;
    cfg.k2 = 1 << 20;
    std::array<std::vector<Peak>, 4> peaks;
    for (int k = 0; k < 4; ++k) peaks[k] = extract_peaks(b.keypoints[k], cfg, Role(k));
    const auto got = testing::to_oracle(enumerate_quadruples(peaks, b.keypoints[4], cfg));
    if (got == testing::exhaustive_quadruples(peaks, b.keypoints[4], cfg.tau_c)) ++equal;
  }
  return {equal == 100, std::to_string(equal) + "/100 bundles identical to exhaustive enumeration"};
}

// ---------------------------------------------------------------------------
// 5. Peak extraction against the neighborhood scan.

Outcome peak_oracle() {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0, 1);
  int sets_equal = 0, topk_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Grid2d g(64, 64);
    // Quantized values force plateaus and score ties.
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = std::floor(u(gen) * 16) / 16;
    GroupingConfig all;
    all.k1 = 64 * 64;
    std::set<std::pair<int, int>> got;
    for (const auto& p : extract_peaks(g, all, Role::Top)) got.insert({p.cell.row, p.cell.col});
    const auto want = testing::brute_force_peaks(g, all.tau_e, 3);
    if (got == want) ++sets_equal;

    std::vector<std::tuple<double, int, int>> order;
    for (const auto& [r, c] : want) order.emplace_back(-g(r, c), r, c);
    std::sort(order.begin(), order.end());
    const auto top = extract_peaks(g, GroupingConfig{}, Role::Top);
    bool ok = top.size() == std::min<std::size_t>(40, order.size());
    for (std::size_t i = 0; ok && i < top.size(); ++i)
      ok = top[i].cell.row == std::get<1>(order[i]) && top[i].cell.col == std::get<2>(order[i]);
    if (ok) ++topk_ok;
  }
  std::ostringstream ss;
  ss << sets_equal << "/100 peak sets equal, " << topk_ok << "/100 top-40 truncations in tie-break order";
  return {sets_equal == 100 && topk_ok == 100, ss.str()};
}

// ---------------------------------------------------------------------------
// 6. Soft-NMS.

Detection box_det(double x1, double y1, double x2, double y2, double score) {
  Detection d;
  d.bbox = {x1, y1, x2, y2};
  d.extremes = {{(x1 + x2) / 2, y1}, {x1, (y1 + y2) / 2}, {(x1 + x2) / 2, y2}, {x2, (y1 + y2) / 2}, {}};
  d.extremes.update_center();
  d.score = score;
  return d;
}

Outcome soft_nms_properties() {
  const auto pair = soft_nms({box_det(0, 0, 10, 10, 0.9), box_det(0, 0, 10, 10, 0.8)});
  const double decayed = pair.size() == 2 ? pair[1].score : -1;
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> pos(0, 200), size(5, 60), score(0, 6);
  std::uniform_int_distribution<int> count(1, 30);
  int ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Detection> dets;
    const int n = count(gen);
    for (int i = 0; i < n; ++i) {
      const double x = pos(gen), y = pos(gen);
      dets.push_back(box_det(x, y, x + size(gen), y + size(gen), score(gen)));
    }
    const auto out = soft_nms(dets);
    bool good = true;
    // No score increases: every output is bounded by its own input.
    for (const auto& o : out) {
      bool bounded = false;
      for (const auto& d : dets) bounded |= d.bbox == o.bbox && o.score <= d.score;
      good &= bounded;
    }
    // Top-1 invariance.
    const auto best = *std::max_element(dets.begin(), dets.end(),
                                        [](const Detection& a, const Detection& b) { return a.score < b.score; });
    good &= !out.empty() && out[0].score == best.score && out[0].bbox == best.bbox;
    // Disjoint boxes pass through untouched.
    std::vector<Detection> grid;
    for (int i = 0; i < n; ++i) grid.push_back(box_det(100.0 * i, 0, 100.0 * i + 50, 50, score(gen) + 0.01));
    const auto same = soft_nms(grid);
    good &= same.size() == grid.size();
    std::vector<double> in_scores, out_scores;
    for (const auto& d : grid) in_scores.push_back(d.score);
    for (const auto& d : same) out_scores.push_back(d.score);
    std::sort(in_scores.rbegin(), in_scores.rend());
    good &= in_scores == out_scores;
    if (good) ++ok;
  }
  std::ostringstream ss;
  ss.precision(8);
  ss << "decayed score " << decayed << ", " << ok << "/1000 random instances satisfy all properties";
  return {std::abs(decayed - 0.10827) <= 1e-5 && ok == 1000, ss.str()};
}

// ---------------------------------------------------------------------------
// 7. FROC.

Outcome froc_properties() {
  // Six lesions over three images. By descending score the outcomes are
  // TP FP TP FP TP FP TP FP FP FP TP FP FP FP TP FP...; with three images the
  // FP budgets 0.5, 1, 2, 3, 4 per image allow 1, 3, 6, 9, 12 false positives.
  std::vector<std::vector<BBox<double>>> gts = {{{0, 0, 40, 40}, {100, 100, 140, 140}},
                                                {{0, 0, 40, 40}, {100, 100, 140, 140}},
                                                {{0, 0, 40, 40}, {100, 100, 140, 140}}};
  std::vector<std::vector<Detection>> dets(3);
  auto tp = [&](int image, int g, double s) {
    const auto& b = gts[image][g];
    dets[image].push_back(box_det(b.x1 + 5, b.y1 + 5, b.x2 - 5, b.y2 - 5, s));
  };
  int fp_index = 0;
  auto fp = [&](double s) {
    const double x = 300 + 50 * fp_index;
    dets[fp_index++ % 3].push_back(box_det(x, 300, x + 20, 320, s));
  };
  tp(0, 0, 0.95);
  fp(0.90);
  tp(1, 0, 0.85);
  fp(0.80);
  tp(2, 0, 0.75);
  fp(0.70);
  tp(0, 1, 0.65);
  fp(0.60), fp(0.55), fp(0.50);
  tp(1, 1, 0.45);
  fp(0.40), fp(0.35), fp(0.30);
  tp(2, 1, 0.25);
  for (int i = 0; i < 6; ++i) fp(0.20 - 0.01 * i);
  const auto r = froc(match_detections(dets, gts));
  const std::vector<double> expected = {2.0 / 6, 4.0 / 6, 5.0 / 6, 6.0 / 6, 6.0 / 6};
  bool crafted_ok = r.operating_points.size() == expected.size();
  for (std::size_t i = 0; crafted_ok && i < expected.size(); ++i)
    crafted_ok = r.operating_points[i].sensitivity == expected[i];

  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> n_images(1, 8), n_gt(1, 4), n_extra(0, 6);
  std::uniform_real_distribution<double> u(0, 1);
  int ok = 0;
  const std::vector<double> targets = {0.125, 0.25, 0.5, 1, 2, 3, 4, 8};
  for (int trial = 0; trial < 1000; ++trial) {
    MatchResult m;
    const int ni = n_images(gen);
    for (int i = 0; i < ni; ++i) {
      ImageMatches im;
      im.n_gt = n_gt(gen);
      for (int g = 0; g < im.n_gt; ++g)
        if (u(gen) < 0.7) im.entries.push_back({g, u(gen), true, g});
      const int extra = n_extra(gen);
      for (int e = 0; e < extra; ++e) im.entries.push_back({im.n_gt + e, u(gen), false, -1});
      m.images.push_back(im);
    }
    const auto fr = froc(m, targets);
    bool good = true;
    for (std::size_t i = 1; i < fr.operating_points.size(); ++i)
      good &= fr.operating_points[i].sensitivity >= fr.operating_points[i - 1].sensitivity;
    for (std::size_t i = 1; i < fr.curve.size(); ++i)
      good &= fr.curve[i].tp >= fr.curve[i - 1].tp && fr.curve[i].fp >= fr.curve[i - 1].fp &&
              fr.curve[i].threshold < fr.curve[i - 1].threshold;
    good &= fr.curve.back().sensitivity <= 1.0;
    // Adding a lowest-scoring false positive never raises any operating point.
    MatchResult worse = m;
    worse.images[0].entries.push_back({99, -1.0, false, -1});
    const auto fw = froc(worse, targets);
    for (std::size_t i = 0; i < fr.operating_points.size(); ++i)
      good &= fw.operating_points[i].sensitivity <= fr.operating_points[i].sensitivity;
    if (good) ++ok;
  }
  std::ostringstream ss;
  ss << "crafted sensitivities";
  for (const auto& op : r.operating_points) ss << " " << op.sensitivity;
  ss << (crafted_ok ? " (as hand-computed)" : " (MISMATCH)") << ", " << ok << "/1000 random match sets monotone";
  return {crafted_ok && ok == 1000, ss.str()};
}

// ---------------------------------------------------------------------------
// 8. Degradation monotonicity.

Outcome degradation_monotonicity() {
  const std::vector<double> sigmas = {0, 0.05, 0.1, 0.2};
  std::vector<double> mean(sigmas.size(), 0);
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::vector<std::vector<Detection>> dets;
      std::vector<std::vector<BBox<double>>> gts;
      for (int j = 0; j < 5; ++j) {
        const auto scene = generate_scene(1 + j, 1000 + 5 * seed + j);
        DegradationConfig dc;
        dc.noise_sigma = sigmas[si];
        dc.seed = 5 * seed + j;
        dets.push_back(detect(simulate_heatmaps(scene, dc, 4), GroupingConfig{}));
        gts.emplace_back();
        for (const auto& l : scene.lesions) gts.back().push_back(l.bbox);
      }
      mean[si] += froc(match_detections(dets, gts), {1.0}).operating_points[0].sensitivity / 20;
    }
  }
  bool ok = true;
  for (std::size_t i = 1; i < mean.size(); ++i) ok &= mean[i] <= mean[i - 1] + 0.02;
  std::ostringstream ss;
  ss << "mean sensitivity@1FP for sigma 0/0.05/0.1/0.2:";
  for (double m : mean) ss << " " << m;
  return {ok, ss.str()};
}

// ---------------------------------------------------------------------------
// 9. Performance budget.

HeatmapBundle<double> worst_case_bundle() {
  HeatmapBundle<double> b(160, 160, 4, 640, 640);
  // 40 isolated peaks per role, every combination geometrically valid and
  // every center above threshold: all 40^4 quadruples survive pruning.
  for (int i = 0; i < 40; ++i) {
    const double s = 0.5 + 0.01 * i;
    const int a = 2 * (i / 20), c = 20 + 6 * (i % 20);
    b.keypoints[0](a, c) = s;  // top rows 0..2
    b.keypoints[1](c, a) = s;  // left cols 0..2
    b.keypoints[2](156 + a, c) = s - 0.005;  // bottom rows 156..158
    b.keypoints[3](c, 156 + a) = s - 0.005;  // right cols 156..158
  }
  b.keypoints[4].setConstant(0.5);
  return b;
}

Outcome performance_budget() {
  const auto b = worst_case_bundle();
  GroupingConfig cfg;
  std::array<std::vector<Peak>, 4> peaks;
  for (int k = 0; k < 4; ++k) peaks[k] = extract_peaks(b.keypoints[k], cfg, Role(k));
  bool full = true;
  for (const auto& p : peaks) full &= p.size() == 40;

  std::vector<std::vector<Detection>> outs;
  std::vector<double> times;
  for (int w : {1, 2, 4}) {
    cfg.workers = w;
    const auto t0 = Clock::now();
    outs.push_back(detect(b, cfg));
    times.push_back(seconds_since(t0));
  }
  bool identical = true;
  for (std::size_t i = 1; i < outs.size(); ++i) {
    identical &= outs[i].size() == outs[0].size();
    for (std::size_t j = 0; identical && j < outs[0].size(); ++j)
      identical &= outs[i][j].score == outs[0][j].score && outs[i][j].extremes == outs[0][j].extremes;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  // Scaling can only be observed with more than one hardware thread.
  const bool scales = hw < 2 || times[1] < times[0] * 0.85;
  std::ostringstream ss;
  ss << (full ? "40" : "<40") << " peaks per role, " << outs[0].size() << " detections; 1/2/4 workers " << times[0]
     << "/" << times[1] << "/" << times[2] << " s, output " << (identical ? "bit-identical" : "DIFFERS") << ", "
     << hw << " hardware thread(s)" << (hw < 2 ? " so speedup not measurable" : "");
  return {full && times[0] < 2.0 && identical && scales, ss.str()};
}

// ---------------------------------------------------------------------------
// 10. Bit-exact I/O and CLI determinism.

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RECIST_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  return out;
}

Outcome bit_exact_io() {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<float> u(-2, 2);
  std::uniform_int_distribution<int> dim(1, 40);
  int heat_ok = 0, det_ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    HeatmapBundle<float> b(dim(gen), dim(gen), 4, 0, 0);
    b.input_width = b.cols() * 4;
    b.input_height = b.rows() * 4;
    for (int c = 0; c < kNumChannels; ++c)
      for (Eigen::Index i = 0; i < b.channel(c).size(); ++i) b.channel(c).data()[i] = u(gen);
    const std::string bytes = encode_heatmaps(b);
    const auto back = decode_heatmaps(bytes);
    bool same = encode_heatmaps(back) == bytes;
    for (int c = 0; same && c < kNumChannels; ++c)
      same = std::memcmp(back.channel(c).data(), b.channel(c).data(), sizeof(float) * b.channel(c).size()) == 0;
    if (same) ++heat_ok;

    DetectionSet set;
    std::uniform_int_distribution<int> nd(0, 5);
    for (int im = 0; im < 3; ++im) {
      auto& list = set["img" + std::to_string(im)];
      const int n = nd(gen);
      for (int i = 0; i < n; ++i) {
        Detection d = box_det(u(gen) * 100, u(gen) * 100, 300 + u(gen), 300 + u(gen), u(gen) * 3 + 0.1 * i);
        d.source = i % 2 ? Source::Flipped : Source::Original;
        list.push_back(d);
      }
    }
    const std::string text = detections_to_json(set).dump(1);
    const auto parsed = detections_from_json(nlohmann::json::parse(text));
    bool dsame = detections_to_json(parsed).dump(1) == text;
    for (const auto& [k, v] : set)
      for (std::size_t i = 0; dsame && i < v.size(); ++i)
        dsame = parsed.at(k)[i].score == v[i].score && parsed.at(k)[i].extremes == v[i].extremes &&
                parsed.at(k)[i].bbox == v[i].bbox && parsed.at(k)[i].source == v[i].source;
    if (dsame) ++det_ok;
  }

  const fs::path root = fs::temp_directory_path() / "recist_acceptance_cli";
  fs::remove_all(root);
  bool cli_ok = true;
  for (const char* run : {"a", "b"}) {
    const fs::path d = root / run;
    fs::create_directories(d);
    write_raw_f32(d / "hu.raw", {-1000.0f, -150.0f, 50.0f, 250.0f, 3000.0f});
    const std::string s = d.string();
    const std::string jobs = std::string(run) == "a" ? "--jobs 1 " : "--jobs 3 ";
    cli_ok &= run_cli(jobs + "simulate --scene-seed 21 --n-scenes 3 --n-lesions 3 --noise 0.05 --spurious 1 "
                             "--flipped --out " + s + "/sim") == 0;
    cli_ok &= run_cli(jobs + "render-targets --annotations " + s + "/sim/annotations.csv --out " + s + "/rt") == 0;
    cli_ok &= run_cli(jobs + "detect --heatmaps " + s + "/sim/heatmaps --out " + s + "/o.json") == 0;
    cli_ok &= run_cli(jobs + "detect --heatmaps " + s + "/sim/heatmaps_flipped --out " + s + "/f.json") == 0;
    cli_ok &= run_cli(jobs + "fuse --original " + s + "/o.json --flipped " + s + "/f.json --out " + s + "/fused.json") == 0;
    cli_ok &= run_cli(jobs + "eval --detections " + s + "/fused.json --annotations " + s +
                      "/sim/annotations.csv --stratify interval --out " + s + "/report") == 0;
    cli_ok &= run_cli("check-gradients --trials 5 --out " + s + "/grad.json") == 0;
    cli_ok &= run_cli("window --preset lung --in " + s + "/hu.raw --out " + s + "/w.raw") == 0;
  }
  const auto a = snapshot(root / "a"), b = snapshot(root / "b");
  const bool same_bytes = cli_ok && a == b && a.size() > 10;
  fs::remove_all(root);

  std::ostringstream ss;
  ss << heat_ok << "/50 heatmap and " << det_ok << "/50 detection round trips bitwise, " << a.size()
     << " CLI output files " << (same_bytes ? "byte-identical across runs" : "DIFFER or failed");
  return {heat_ok == 50 && det_ok == 50 && same_bytes, ss.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"zero-noise round trip", zero_noise_round_trip},
      {"focal loss value and gradient", focal_loss_correctness},
      {"offset targets and offset loss", offset_correctness},
      {"grouping equals exhaustive enumeration", grouping_oracle},
      {"peak extraction equals neighborhood scan", peak_oracle},
      {"soft-nms example and properties", soft_nms_properties},
      {"froc crafted scenario and monotonicity", froc_properties},
      {"degradation monotonicity", degradation_monotonicity},
      {"grouping performance budget", performance_budget},
      {"bit-exact i/o and cli determinism", bit_exact_io},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}

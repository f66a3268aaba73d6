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

// Batch command-line front end: target rendering, detection from heatmap
// files, flip fusion, FROC evaluation, synthetic data, gradient checks and
// CT windowing.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "recist/config.hpp"
#include "recist/dataio.hpp"
#include "recist/eval.hpp"
#include "recist/fusion.hpp"
#include "recist/grouping.hpp"
#include "recist/loss.hpp"
#include "recist/oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace recist;

namespace {

constexpr std::string_view kHeatmapExt = ".rkhm";

// Files and directories created by the running command, removed again if it
// fails so no half-written output survives.
class OutputGuard {
 public:
  void file(const fs::path& p) { created_.push_back(p); }
  void dir(const fs::path& p) {
    if (!fs::exists(p)) {
      fs::create_directories(p);
      created_.push_back(p);
    }
  }
  void rollback() noexcept {
    std::error_code ec;
    for (auto it = created_.rbegin(); it != created_.rend(); ++it) fs::remove_all(*it, ec);
    created_.clear();
  }
  void commit() { created_.clear(); }

 private:
  std::vector<fs::path> created_;
};

OutputGuard g_outputs;

void write_output(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path() && !fs::exists(path.parent_path())) g_outputs.dir(path.parent_path());
  g_outputs.file(path);
  write_file_atomic(path, bytes);
}

template <typename T>
void apply_flag(const CLI::Option* opt, T& dst, const T& value) {
  if (opt->count() > 0) dst = value;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "not a number list: " + text);
    }
  }
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

// Runs f(i) for i in [0, n) on up to `jobs` threads. Each index is handled by
// exactly one worker, so results written by index do not depend on `jobs`.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < n; i = next++) f(i);
        } catch (...) {
          errors[w] = std::current_exception();
          next = n;
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<fs::path> heatmap_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputFormatError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == kHeatmapExt) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string format_fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

json froc_json(const FrocResult& r) {
  json ops = json::array();
  for (const auto& op : r.operating_points)
    ops.push_back({{"fp_per_image", op.fp_target},
                   {"sensitivity", op.sensitivity},
                   {"threshold", std::isinf(op.threshold) ? json(nullptr) : json(op.threshold)}});
  return {{"n_images", r.n_images}, {"n_lesions", r.n_lesions}, {"operating_points", ops}};
}

std::string froc_row(const std::string& name, const FrocResult& r) {
  std::ostringstream ss;
  ss << std::left << std::setw(14) << name;
  for (const auto& op : r.operating_points) ss << std::right << std::setw(9) << format_fixed(100 * op.sensitivity, 2);
  ss << std::right << std::setw(9) << r.n_lesions << "\n";
  return ss.str();
}

// ---------------------------------------------------------------------------

struct GlobalOptions {
  std::string config_path;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

// Out-of-range flag values are usage errors, not internal ones.
template <typename T>
void check_flags(const T& cfg) {
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError(e.what());
  }
}

RunConfig base_config(const GlobalOptions& g) { return g.config_path.empty() ? RunConfig{} : load_config(g.config_path); }

json provenance(const std::string& command, const RunConfig& cfg, json extra = json::object()) {
  extra["command"] = command;
  extra["config"] = config_to_json(cfg);
  return extra;
}

struct RenderArgs {
  std::string annotations, exclude, out;
  int input_size = 511;
  int stride = 4;
};

void run_render(const GlobalOptions& g, const RenderArgs& a, const CLI::App& sub) {
  RunConfig cfg = base_config(g);
  apply_flag(sub.get_option("--input-size"), cfg.input_size, a.input_size);
  apply_flag(sub.get_option("--stride"), cfg.stride, a.stride);
  check_flags(cfg);

  const auto rep = parse_annotations(a.annotations, a.exclude.empty() ? std::nullopt : std::optional<fs::path>(a.exclude));
  const auto images = group_by_image(rep.annotations);
  const int out_size = output_extent(cfg.input_size, cfg.stride);
  g_outputs.dir(a.out);
  std::vector<std::pair<std::string, std::vector<RecistAnnotation>>> work(images.begin(), images.end());
  std::vector<std::string> encoded(work.size());
  parallel_for(work.size(), g.jobs, [&](std::size_t i) {
    std::vector<ExtremePoints<double>> ex;
    for (const auto& ann : work[i].second) ex.push_back(ann.extremes());
    try {
      auto t = render_targets(ex, out_size, out_size, cfg.stride, cfg.targets);
      t.bundle.input_width = t.bundle.input_height = cfg.input_size;
      encoded[i] = encode_heatmaps(t.bundle.cast<float>(), provenance("render-targets", cfg, {{"image", work[i].first}}));
    } catch (const std::out_of_range& e) {
      throw InputFormatError(work[i].first + ": " + e.what());
    }
  });
  for (std::size_t i = 0; i < work.size(); ++i) write_output(fs::path(a.out) / (work[i].first + std::string(kHeatmapExt)), encoded[i]);
  std::cout << "rendered " << work.size() << " images (" << rep.n_excluded << " rows excluded, "
            << rep.inconsistent.size() << " inconsistent boxes)\n";
}

struct DetectArgs {
  std::string heatmaps, out, center_lookup = "nearest";
  GroupingConfig grouping;
};

void run_detect(const GlobalOptions& g, const DetectArgs& a, const CLI::App& sub) {
  RunConfig cfg = base_config(g);
  apply_flag(sub.get_option("--tau-e"), cfg.grouping.tau_e, a.grouping.tau_e);
  apply_flag(sub.get_option("--tau-c"), cfg.grouping.tau_c, a.grouping.tau_c);
  apply_flag(sub.get_option("--k1"), cfg.grouping.k1, a.grouping.k1);
  apply_flag(sub.get_option("--k2"), cfg.grouping.k2, a.grouping.k2);
  apply_flag(sub.get_option("--kernel"), cfg.grouping.kernel, a.grouping.kernel);
  if (sub.get_option("--center-lookup")->count() > 0)
    cfg.grouping.center_lookup = a.center_lookup == "bilinear" ? CenterLookup::Bilinear : CenterLookup::Nearest;
  check_flags(cfg);

  const auto files = heatmap_files(a.heatmaps);
  std::vector<std::vector<Detection>> results(files.size());
  GroupingConfig gc = cfg.grouping;
  gc.workers = 1;
  parallel_for(files.size(), g.jobs, [&](std::size_t i) {
    try {
      results[i] = detect(read_heatmaps(files[i]), gc);
    } catch (const InputFormatError& e) {
      throw InputFormatError(files[i].filename().string() + ": " + e.what());
    }
  });
  DetectionSet set;
  for (std::size_t i = 0; i < files.size(); ++i) set[files[i].stem().string()] = std::move(results[i]);
  write_output(a.out, detections_to_json(set, provenance("detect", cfg)).dump(1) + "\n");
  std::size_t total = 0;
  for (const auto& [k, v] : set) total += v.size();
  std::cout << "detected " << total << " candidates in " << set.size() << " images\n";
}

struct FuseArgs {
  std::string original, flipped, out, method = "gaussian";
  double image_width = 512;
  SoftNmsConfig nms;
};

void run_fuse(const GlobalOptions& g, const FuseArgs& a, const CLI::App& sub) {
  RunConfig cfg = base_config(g);
  apply_flag(sub.get_option("--sigma"), cfg.soft_nms.sigma, a.nms.sigma);
  apply_flag(sub.get_option("--score-floor"), cfg.soft_nms.score_floor, a.nms.score_floor);
  apply_flag(sub.get_option("--linear-threshold"), cfg.soft_nms.linear_threshold, a.nms.linear_threshold);
  if (sub.get_option("--method")->count() > 0)
    cfg.soft_nms.method = a.method == "linear" ? SoftNmsMethod::Linear : SoftNmsMethod::Gaussian;
  check_flags(cfg);
  if (!(a.image_width > 0)) throw CLI::ValidationError("--image-width", "must be positive");

  const auto orig = read_detections(a.original);
  const auto flip = read_detections(a.flipped);
  std::vector<std::string> keys;
  for (const auto& [k, v] : orig) keys.push_back(k);
  for (const auto& [k, v] : flip)
    if (!orig.count(k)) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  std::vector<std::vector<Detection>> fused(keys.size());
  parallel_for(keys.size(), g.jobs, [&](std::size_t i) {
    static const std::vector<Detection> none;
    const auto o = orig.find(keys[i]);
    const auto f = flip.find(keys[i]);
    fused[i] = fuse_tta(o == orig.end() ? none : o->second, f == flip.end() ? none : f->second, a.image_width,
                        cfg.soft_nms);
  });
  DetectionSet set;
  for (std::size_t i = 0; i < keys.size(); ++i) set[keys[i]] = std::move(fused[i]);
  write_output(a.out, detections_to_json(set, provenance("fuse", cfg, {{"image_width", a.image_width}})).dump(1) + "\n");
  std::cout << "fused " << set.size() << " images\n";
}

struct EvalArgs {
  std::string detections, annotations, exclude, out, stratify, fps = "0.5,1,2,3,4";
  double iou = 0.5, pad = 5;
};

void run_eval(const GlobalOptions& g, const EvalArgs& a, const CLI::App& sub) {
  (void)g.jobs;
  RunConfig cfg = base_config(g);
  apply_flag(sub.get_option("--iou"), cfg.match.iou_threshold, a.iou);
  apply_flag(sub.get_option("--pad"), cfg.match.pad, a.pad);
  if (sub.get_option("--fps")->count() > 0) cfg.fp_targets = parse_number_list(a.fps, "--fps");
  check_flags(cfg);

  const auto rep = parse_annotations(a.annotations, a.exclude.empty() ? std::nullopt : std::optional<fs::path>(a.exclude));
  const auto images = group_by_image(rep.annotations);
  const auto dets = read_detections(a.detections);
  for (const auto& [k, v] : dets)
    if (!images.count(k)) throw InputFormatError("detections for unannotated image " + k);

  std::vector<std::vector<Detection>> per_image;
  std::vector<std::vector<BBox<double>>> gts;
  std::vector<std::vector<LesionMeta>> meta;
  for (const auto& [key, anns] : images) {
    const auto it = dets.find(key);
    per_image.push_back(it == dets.end() ? std::vector<Detection>{} : it->second);
    gts.emplace_back();
    meta.emplace_back();
    for (const auto& ann : anns) {
      gts.back().push_back(ann.bbox);
      meta.back().push_back(ann.meta());
    }
  }
  const auto matches = match_detections(per_image, gts, cfg.match);
  const auto overall = froc(matches, cfg.fp_targets);

  json doc = {{"format", "recist-froc/1"}, {"overall", froc_json(overall)}};
  std::ostringstream text;
  text << std::left << std::setw(14) << "FPs/image";
  for (double f : cfg.fp_targets) text << std::right << std::setw(9) << f;
  text << std::right << std::setw(9) << "lesions" << "\n";
  text << froc_row("overall", overall);

  if (!a.stratify.empty()) {
    const StratifyKey key = a.stratify == "type"       ? StratifyKey::LesionType
                            : a.stratify == "diameter" ? StratifyKey::DiameterBucket
                                                       : StratifyKey::SliceInterval;
    const auto strata = stratified_froc(matches, meta, key, cfg.fp_targets);
    json js = json::object();
    for (const auto& [name, r] : strata.per_stratum) {
      js[name] = froc_json(r);
      text << froc_row(name, r);
    }
    doc["stratify"] = to_string(key);
    doc["strata"] = js;
  }
  doc["config"] = config_to_json(cfg);
  write_output(a.out + ".json", doc.dump(1) + "\n");
  write_output(a.out + ".txt", text.str());
  std::cout << text.str();
}

struct SimulateArgs {
  std::string out;
  std::uint64_t scene_seed = 0;
  int n_scenes = 1;
  int n_lesions = 3;
  int stride = 4;
  DegradationConfig degrade;
  bool flipped = false;
};

void run_simulate(const GlobalOptions& g, SimulateArgs a, const CLI::App& sub) {
  RunConfig cfg = base_config(g);
  apply_flag(sub.get_option("--stride"), cfg.stride, a.stride);
  check_flags(cfg);
  if (a.n_scenes < 1) throw CLI::ValidationError("--n-scenes", "must be >= 1");
  if (a.n_lesions < 0) throw CLI::ValidationError("--n-lesions", "must be >= 0");
  check_flags(a.degrade);

  SceneOptions so;
  so.stride = cfg.stride;
  so.tau_c = cfg.grouping.tau_c;
  so.render = cfg.targets;
  const std::size_t n = static_cast<std::size_t>(a.n_scenes);
  std::vector<SyntheticScene> scenes(n);
  std::vector<std::string> original(n), mirrored(n);
  parallel_for(n, g.jobs, [&](std::size_t i) {
    const std::uint64_t seed = a.scene_seed + i;
    scenes[i] = generate_scene(a.n_lesions, seed, so);
    DegradationConfig dc = a.degrade;
    dc.seed = a.degrade.seed + i;
    const json prov = provenance("simulate", cfg, {{"scene_seed", seed}, {"degradation_seed", dc.seed},
                                                   {"noise", dc.noise_sigma}, {"drop", dc.peak_drop_prob},
                                                   {"spurious", dc.spurious_rate}, {"jitter", dc.jitter_cells}});
    original[i] = encode_heatmaps(simulate_heatmaps(scenes[i], dc, cfg.stride, cfg.targets).cast<float>(), prov);
    if (a.flipped) {
      SyntheticScene flip = scenes[i];
      for (auto& les : flip.lesions) {
        les.diameters = {flip_horizontal(les.diameters.long_a, double(flip.width)),
                         flip_horizontal(les.diameters.long_b, double(flip.width)),
                         flip_horizontal(les.diameters.short_a, double(flip.width)),
                         flip_horizontal(les.diameters.short_b, double(flip.width))};
        les.bbox = flip_horizontal(les.bbox, double(flip.width));
      }
      dc.seed = ~dc.seed;
      mirrored[i] = encode_heatmaps(simulate_heatmaps(flip, dc, cfg.stride, cfg.targets).cast<float>(), prov);
    }
  });

  std::vector<RecistAnnotation> all;
  for (std::size_t i = 0; i < n; ++i) {
    const auto key = scene_key(a.scene_seed + i);
    write_output(fs::path(a.out) / "heatmaps" / (key + std::string(kHeatmapExt)), original[i]);
    if (a.flipped) write_output(fs::path(a.out) / "heatmaps_flipped" / (key + std::string(kHeatmapExt)), mirrored[i]);
    all.insert(all.end(), scenes[i].lesions.begin(), scenes[i].lesions.end());
  }
  const fs::path csv = fs::path(a.out) / "annotations.csv";
  g_outputs.file(csv);
  write_annotations(csv, all);
  std::cout << "simulated " << n << " scenes, " << all.size() << " lesions\n";
}

struct GradientArgs {
  int trials = 100;
  double tol = 1e-5;
  double step = 1e-6;
  std::uint64_t seed = 0;
  std::string out;
};

// Random 8x8 focal-loss instances plus offset-loss instances; each analytic
// gradient is compared with central differences on clamp-interior cells. The
// focal reference is evaluated in long double: in double, rounding of the
// summed loss dominates the derivative of weakly weighted cells.
void run_check_gradients(const GlobalOptions& g, const GradientArgs& a) {
  const RunConfig cfg = base_config(g);
  if (a.trials < 1) throw CLI::ValidationError("--trials", "must be >= 1");
  Rng rng(a.seed);
  double worst_focal = 0, worst_offset = 0;
  for (int t = 0; t < a.trials; ++t) {
    Grid2d pred(8, 8), target(8, 8);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
      pred.data()[i] = rng.uniform(0.02, 0.98);
      const int kind = rng.uniform_int(0, 3);
      target.data()[i] = kind == 0 ? 1.0 : kind == 1 ? 0.0 : rng.uniform(0.0, 0.9);
    }
    const int n = rng.uniform_int(1, 4);
    const Grid2d grad = focal_loss_grad(pred, target, n, cfg.focal);
    const VectorX<double> x = Eigen::Map<const VectorX<double>>(pred.data(), pred.size());
    const VectorX<double> an = Eigen::Map<const VectorX<double>>(grad.data(), grad.size());
    const Grid<long double> target_ld = target.cast<long double>();
    const auto rep = finite_diff_check<double>(
        [&](const VectorX<double>& v) {
          return focal_loss(Eigen::Map<const Grid2d>(v.data(), 8, 8).cast<long double>(), target_ld, n, cfg.focal);
        },
        x, an, a.step, a.tol);
    worst_focal = std::max(worst_focal, rep.max_rel_err);

    ExtremePoints<double> e{{rng.uniform(8, 24), rng.uniform(0, 8)}, {rng.uniform(0, 8), rng.uniform(8, 24)},
                            {rng.uniform(8, 24), rng.uniform(24, 31)}, {rng.uniform(24, 31), rng.uniform(8, 24)}, {}};
    e.update_center();
    const auto tb = render_targets(std::vector<ExtremePoints<double>>{e}, 8, 8, 4, cfg.targets);
    auto off = tb.bundle.offsets;
    for (auto& plane : off)
      for (Eigen::Index i = 0; i < plane.size(); ++i) plane.data()[i] = rng.uniform(-1.5, 2.5);
    const auto og = offset_loss_grad(off, tb);
    const Eigen::Index m = off[0].size();
    VectorX<double> ox(kNumOffsetPlanes * m), oa(kNumOffsetPlanes * m);
    for (int k = 0; k < kNumOffsetPlanes; ++k) {
      ox.segment(k * m, m) = Eigen::Map<const VectorX<double>>(off[k].data(), m);
      oa.segment(k * m, m) = Eigen::Map<const VectorX<double>>(og[k].data(), m);
    }
    const auto orep = finite_diff_check<double>(
        [&](const VectorX<double>& v) {
          auto p = off;
          for (int k = 0; k < kNumOffsetPlanes; ++k) p[k] = Eigen::Map<const Grid2d>(v.data() + k * m, 8, 8);
          return offset_loss(p, tb);
        },
        ox, oa, a.step, a.tol);
    worst_offset = std::max(worst_offset, orep.max_rel_err);
  }
  const bool pass = worst_focal < a.tol && worst_offset < a.tol;
  const json doc = {{"trials", a.trials},       {"tol", a.tol},
                    {"step", a.step},           {"seed", a.seed},
                    {"focal_max_rel_err", worst_focal}, {"offset_max_rel_err", worst_offset},
                    {"pass", pass},             {"config", config_to_json(cfg)}};
  if (!a.out.empty()) write_output(a.out, doc.dump(1) + "\n");
  std::cout << (pass ? "PASS" : "FAIL") << " focal max rel err " << worst_focal << ", offset max rel err "
            << worst_offset << " over " << a.trials << " trials (tol " << a.tol << ")\n";
  if (!pass) throw InvariantViolation("analytic gradient disagrees with finite differences");
}

struct WindowArgs {
  std::string in, out, preset;
  double level = 50, width = 400;
};

void run_window(const GlobalOptions& g, const WindowArgs& a, const CLI::App& sub) {
  const RunConfig cfg = base_config(g);
  double level = a.level, width = a.width;
  if (!a.preset.empty()) {
    const auto it = std::find_if(cfg.windows.begin(), cfg.windows.end(), [&](const auto& w) { return w.name == a.preset; });
    if (it == cfg.windows.end()) throw CLI::ValidationError("--preset", "unknown window preset " + a.preset);
    if (sub.get_option("--level")->count() == 0) level = it->level;
    if (sub.get_option("--width")->count() == 0) width = it->width;
  }
  if (!(width > 0)) throw CLI::ValidationError("--width", "must be positive");
  const auto raw = read_raw_f32(a.in);
  const Eigen::Map<const Grid2f> hu(raw.data(), 1, static_cast<Eigen::Index>(raw.size()));
  const Grid2f w = apply_ct_window(hu, level, width);
  g_outputs.file(a.out);
  write_raw_f32(a.out, std::vector<float>(w.data(), w.data() + w.size()));
  std::cout << "windowed " << raw.size() << " values (level " << level << ", width " << width << ")\n";
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int fail(const std::string& cls, const std::string& msg, int code) {
  g_outputs.rollback();
  std::cerr << "error[" << cls << "]: " << one_line(msg) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RECIST extreme-point lesion detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.get_formatter()->column_width(40);

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config file; flags override its values");
  app.add_option("--jobs", g.jobs, "Worker threads for per-image work")->capture_default_str()->check(CLI::PositiveNumber);

  const RunConfig defaults;

  RenderArgs ra;
  auto* render = app.add_subcommand("render-targets", "Render training targets for every annotated image");
  render->add_option("--annotations", ra.annotations, "Annotation CSV")->required()->check(CLI::ExistingFile);
  render->add_option("--exclude", ra.exclude, "File names to drop, one per line")->check(CLI::ExistingFile);
  render->add_option("--input-size", ra.input_size, "Network input size in pixels")->capture_default_str();
  render->add_option("--stride", ra.stride, "Output stride")->capture_default_str();
  render->add_option("--out", ra.out, "Output directory")->required();

  DetectArgs da;
  da.grouping = defaults.grouping;
  auto* det = app.add_subcommand("detect", "Group heatmap peaks into detections");
  det->add_option("--heatmaps", da.heatmaps, "Directory of heatmap files")->required();
  det->add_option("--out", da.out, "Output detections JSON")->required();
  det->add_option("--tau-e", da.grouping.tau_e, "Extreme-point peak threshold")->capture_default_str();
  det->add_option("--tau-c", da.grouping.tau_c, "Center threshold")->capture_default_str();
  det->add_option("--k1", da.grouping.k1, "Peaks kept per extreme map")->capture_default_str();
  det->add_option("--k2", da.grouping.k2, "Detections kept per image")->capture_default_str();
  det->add_option("--kernel", da.grouping.kernel, "Peak max-pool window")->capture_default_str();
  det->add_option("--center-lookup", da.center_lookup, "Center sampling")
      ->capture_default_str()
      ->check(CLI::IsMember({"nearest", "bilinear"}));

  FuseArgs fa;
  fa.nms = defaults.soft_nms;
  auto* fuse = app.add_subcommand("fuse", "Merge original and flipped-image detections with Soft-NMS");
  fuse->add_option("--original", fa.original, "Detections on the original images")->required()->check(CLI::ExistingFile);
  fuse->add_option("--flipped", fa.flipped, "Detections on the flipped images")->required()->check(CLI::ExistingFile);
  fuse->add_option("--image-width", fa.image_width, "Image width in pixels")->capture_default_str();
  fuse->add_option("--sigma", fa.nms.sigma, "Gaussian Soft-NMS sigma")->capture_default_str();
  fuse->add_option("--score-floor", fa.nms.score_floor, "Drop detections below this score")->capture_default_str();
  fuse->add_option("--method", fa.method, "Decay function")->capture_default_str()->check(CLI::IsMember({"gaussian", "linear"}));
  fuse->add_option("--linear-threshold", fa.nms.linear_threshold, "IoU above which linear decay applies")
      ->capture_default_str();
  fuse->add_option("--out", fa.out, "Output detections JSON")->required();

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "FROC evaluation against annotations");
  ev->add_option("--detections", ea.detections, "Detections JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--annotations", ea.annotations, "Annotation CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--exclude", ea.exclude, "File names to drop, one per line")->check(CLI::ExistingFile);
  ev->add_option("--iou", ea.iou, "Matching IoU threshold")->capture_default_str();
  ev->add_option("--pad", ea.pad, "Padding added to detection boxes")->capture_default_str();
  ev->add_option("--fps", ea.fps, "False positives per image, comma separated")->capture_default_str();
  ev->add_option("--stratify", ea.stratify, "Also report per stratum")->check(CLI::IsMember({"type", "diameter", "interval"}));
  ev->add_option("--out", ea.out, "Report path prefix (.json and .txt)")->required();

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Synthetic scenes with degraded heatmaps and ground truth");
  sim->add_option("--scene-seed", sa.scene_seed, "Seed of the first scene")->capture_default_str();
  sim->add_option("--n-scenes", sa.n_scenes, "Number of scenes (consecutive seeds)")->capture_default_str();
  sim->add_option("--n-lesions", sa.n_lesions, "Lesions per scene")->capture_default_str();
  sim->add_option("--noise", sa.degrade.noise_sigma, "Gaussian noise sigma")->capture_default_str();
  sim->add_option("--drop", sa.degrade.peak_drop_prob, "Keypoint drop probability")->capture_default_str();
  sim->add_option("--spurious", sa.degrade.spurious_rate, "Mean spurious peaks per map")->capture_default_str();
  sim->add_option("--jitter", sa.degrade.jitter_cells, "Keypoint jitter in cells")->capture_default_str();
  sim->add_option("--degradation-seed", sa.degrade.seed, "Seed of the first degradation")->capture_default_str();
  sim->add_option("--stride", sa.stride, "Output stride")->capture_default_str();
  sim->add_flag("--flipped", sa.flipped, "Also write heatmaps of the mirrored scenes");
  sim->add_option("--out", sa.out, "Output directory")->required();

  GradientArgs ga;
  auto* grad = app.add_subcommand("check-gradients", "Compare analytic loss gradients with finite differences");
  grad->add_option("--trials", ga.trials, "Random instances")->capture_default_str();
  grad->add_option("--tol", ga.tol, "Maximum relative error")->capture_default_str();
  grad->add_option("--step", ga.step, "Central-difference step")->capture_default_str();
  grad->add_option("--seed", ga.seed, "Instance seed")->capture_default_str();
  grad->add_option("--out", ga.out, "Optional JSON report");

  WindowArgs wa;
  auto* win = app.add_subcommand("window", "Apply a CT intensity window to raw float32 values");
  win->add_option("--in", wa.in, "Input raw float32 file")->required()->check(CLI::ExistingFile);
  win->add_option("--out", wa.out, "Output raw float32 file")->required();
  win->add_option("--level", wa.level, "Window level (HU)")->capture_default_str();
  win->add_option("--width", wa.width, "Window width (HU)")->capture_default_str();
  win->add_option("--preset", wa.preset, "Named preset from the config (lung, soft_tissue, bone)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*render) run_render(g, ra, *render);
    else if (*det) run_detect(g, da, *det);
    else if (*fuse) run_fuse(g, fa, *fuse);
    else if (*ev) run_eval(g, ea, *ev);
    else if (*sim) run_simulate(g, sa, *sim);
    else if (*grad) run_check_gradients(g, ga);
    else if (*win) run_window(g, wa, *win);
    g_outputs.commit();
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  } catch (const InputFormatError& e) {
    return fail("input-format", e.what(), 3);
  } catch (const InvariantViolation& e) {
    return fail("invariant", e.what(), 4);
  } catch (const std::logic_error& e) {
    return fail("invariant", e.what(), 4);
  } catch (const std::exception& e) {
    return fail("input-format", e.what(), 3);
  }
}

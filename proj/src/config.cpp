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

#include "recist/config.hpp"

#include <set>

#include "recist/dataio.hpp"

namespace recist {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw InputFormatError("config: " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(path.empty() ? "/" : path, "expected object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items())
    if (!ok.count(k)) config_error(path + "/" + k, "unknown key");
}

template <typename T>
void read(const json& obj, const char* key, const std::string& path, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string p = path + "/" + key;
  if constexpr (std::is_same_v<T, int>) {
    if (!it->is_number_integer()) config_error(p, "expected integer");
  } else if constexpr (std::is_arithmetic_v<T>) {
    if (!it->is_number()) config_error(p, "expected number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) config_error(p, "expected string");
  }
  out = it->get<T>();
}

}  // namespace

void RunConfig::validate() const {
  grouping.validate();
  soft_nms.validate();
  focal.validate();
  if (stride < 1) throw std::invalid_argument("config: stride must be >= 1");
  if (input_size < 1) throw std::invalid_argument("config: input_size must be >= 1");
  if (!(targets.min_overlap > 0 && targets.min_overlap < 1))
    throw std::invalid_argument("config: targets.min_overlap must lie in (0, 1)");
  if (!(targets.sigma_divisor > 0)) throw std::invalid_argument("config: targets.sigma_divisor must be positive");
  if (!(match.iou_threshold > 0 && match.iou_threshold <= 1))
    throw std::invalid_argument("config: eval.iou must lie in (0, 1]");
  if (!(match.pad >= 0)) throw std::invalid_argument("config: eval.pad must be >= 0");
  if (fp_targets.empty()) throw std::invalid_argument("config: eval.fps must not be empty");
  for (const auto& w : windows)
    if (!(w.width > 0)) throw std::invalid_argument("config: window " + w.name + " must have positive width");
}

RunConfig config_from_json(const json& doc, RunConfig cfg) {
  check_keys(doc, "", {"grouping", "soft_nms", "focal", "targets", "eval", "windows"});
  if (doc.contains("grouping")) {
    const auto& g = doc["grouping"];
    check_keys(g, "/grouping", {"tau_e", "tau_c", "k1", "k2", "kernel", "center_lookup", "workers"});
    read(g, "tau_e", "/grouping", cfg.grouping.tau_e);
    read(g, "tau_c", "/grouping", cfg.grouping.tau_c);
    read(g, "k1", "/grouping", cfg.grouping.k1);
    read(g, "k2", "/grouping", cfg.grouping.k2);
    read(g, "kernel", "/grouping", cfg.grouping.kernel);
    read(g, "workers", "/grouping", cfg.grouping.workers);
    std::string lookup = cfg.grouping.center_lookup == CenterLookup::Nearest ? "nearest" : "bilinear";
    read(g, "center_lookup", "/grouping", lookup);
    if (lookup == "nearest")
      cfg.grouping.center_lookup = CenterLookup::Nearest;
    else if (lookup == "bilinear")
      cfg.grouping.center_lookup = CenterLookup::Bilinear;
    else
      config_error("/grouping/center_lookup", "expected \"nearest\" or \"bilinear\"");
  }
  if (doc.contains("soft_nms")) {
    const auto& s = doc["soft_nms"];
    check_keys(s, "/soft_nms", {"sigma", "score_floor", "method", "linear_threshold"});
    read(s, "sigma", "/soft_nms", cfg.soft_nms.sigma);
    read(s, "score_floor", "/soft_nms", cfg.soft_nms.score_floor);
    read(s, "linear_threshold", "/soft_nms", cfg.soft_nms.linear_threshold);
    std::string method = cfg.soft_nms.method == SoftNmsMethod::Gaussian ? "gaussian" : "linear";
    read(s, "method", "/soft_nms", method);
    if (method == "gaussian")
      cfg.soft_nms.method = SoftNmsMethod::Gaussian;
    else if (method == "linear")
      cfg.soft_nms.method = SoftNmsMethod::Linear;
    else
      config_error("/soft_nms/method", "expected \"gaussian\" or \"linear\"");
  }
  if (doc.contains("focal")) {
    const auto& f = doc["focal"];
    check_keys(f, "/focal", {"alpha", "beta", "clamp_eps"});
    read(f, "alpha", "/focal", cfg.focal.alpha);
    read(f, "beta", "/focal", cfg.focal.beta);
    read(f, "clamp_eps", "/focal", cfg.focal.clamp_eps);
  }
  if (doc.contains("targets")) {
    const auto& t = doc["targets"];
    check_keys(t, "/targets", {"min_overlap", "sigma_divisor", "stride", "input_size"});
    read(t, "min_overlap", "/targets", cfg.targets.min_overlap);
    read(t, "sigma_divisor", "/targets", cfg.targets.sigma_divisor);
    read(t, "stride", "/targets", cfg.stride);
    read(t, "input_size", "/targets", cfg.input_size);
  }
  if (doc.contains("eval")) {
    const auto& e = doc["eval"];
    check_keys(e, "/eval", {"iou", "pad", "fps"});
    read(e, "iou", "/eval", cfg.match.iou_threshold);
    read(e, "pad", "/eval", cfg.match.pad);
    if (e.contains("fps")) {
      const auto& f = e["fps"];
      if (!f.is_array()) config_error("/eval/fps", "expected array of numbers");
      cfg.fp_targets.clear();
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f[i].is_number()) config_error("/eval/fps/" + std::to_string(i), "expected number");
        cfg.fp_targets.push_back(f[i].get<double>());
      }
    }
  }
  if (doc.contains("windows")) {
    const auto& w = doc["windows"];
    if (!w.is_array()) config_error("/windows", "expected array");
    cfg.windows.clear();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::string p = "/windows/" + std::to_string(i);
      check_keys(w[i], p, {"name", "level", "width"});
      WindowPreset preset;
      read(w[i], "name", p, preset.name);
      read(w[i], "level", p, preset.level);
      read(w[i], "width", p, preset.width);
      cfg.windows.push_back(preset);
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw InputFormatError(e.what());
  }
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json windows = json::array();
  for (const auto& w : cfg.windows) windows.push_back({{"name", w.name}, {"level", w.level}, {"width", w.width}});
  return {
      {"grouping",
       {{"tau_e", cfg.grouping.tau_e},
        {"tau_c", cfg.grouping.tau_c},
        {"k1", cfg.grouping.k1},
        {"k2", cfg.grouping.k2},
        {"kernel", cfg.grouping.kernel},
        {"center_lookup", cfg.grouping.center_lookup == CenterLookup::Nearest ? "nearest" : "bilinear"}}},
      {"soft_nms",
       {{"sigma", cfg.soft_nms.sigma},
        {"score_floor", cfg.soft_nms.score_floor},
        {"method", cfg.soft_nms.method == SoftNmsMethod::Gaussian ? "gaussian" : "linear"},
        {"linear_threshold", cfg.soft_nms.linear_threshold}}},
      {"focal", {{"alpha", cfg.focal.alpha}, {"beta", cfg.focal.beta}, {"clamp_eps", cfg.focal.clamp_eps}}},
      {"targets",
       {{"min_overlap", cfg.targets.min_overlap},
        {"sigma_divisor", cfg.targets.sigma_divisor},
        {"stride", cfg.stride},
        {"input_size", cfg.input_size}}},
      {"eval", {{"iou", cfg.match.iou_threshold}, {"pad", cfg.match.pad}, {"fps", cfg.fp_targets}}},
      {"windows", windows},
  };
}

RunConfig load_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InputFormatError(path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace recist

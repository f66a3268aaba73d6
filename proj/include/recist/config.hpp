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

// Run configuration shared by the command-line tools. Loaded from JSON;
// unknown keys are rejected so typos cannot silently fall back to defaults.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "recist/eval.hpp"
#include "recist/fusion.hpp"
#include "recist/grouping.hpp"
#include "recist/loss.hpp"
#include "recist/targets.hpp"

namespace recist {

struct WindowPreset {
  std::string name;
  double level = 0;
  double width = 1;
};

struct RunConfig {
  GroupingConfig grouping;
  SoftNmsConfig soft_nms;
  FocalParams focal;
  RenderOptions targets;
  int stride = 4;
  int input_size = 511;
  MatchOptions match;
  std::vector<double> fp_targets = kDefaultFpTargets;
  std::vector<WindowPreset> windows = {{"lung", -600, 1500}, {"soft_tissue", 50, 400}, {"bone", 400, 1800}};

  void validate() const;
};

/// Overlays `doc` on `base`. Throws InputFormatError naming the first unknown
/// or ill-typed key.
RunConfig config_from_json(const nlohmann::json& doc, RunConfig base = {});
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace recist

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

// Annotation CSV parsing (DeepLesion schema), heatmap container and
// detections document I/O, and CT intensity windowing.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "recist/eval.hpp"
#include "recist/geometry.hpp"
#include "recist/grouping.hpp"
#include "recist/targets.hpp"

namespace recist {

enum class Split { Train, Val, Test };

struct RecistAnnotation {
  std::string file_name;
  RecistDiameters<double> diameters;
  BBox<double> bbox;  // as provided, already padded
  int lesion_type = -1;
  double long_px = 0;
  double short_px = 0;
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();  // x, y mm per pixel; z mm per slice
  Split split = Split::Test;
  int row = 0;  // 1-based data row in the source CSV

  ExtremePoints<double> extremes() const { return extremes_from_recist(diameters).points; }
  LesionMeta meta() const;
};

struct ParseReport {
  std::vector<RecistAnnotation> annotations;
  int n_excluded = 0;
  /// Rows whose provided box disagrees with the padded box of their diameters.
  std::vector<std::string> inconsistent;
  /// Rows whose diameters collapse to zero width or height.
  std::vector<std::string> degenerate;
};

/// Tolerance of the box consistency check, per coordinate.
inline constexpr double kBoxConsistencyTol = 1e-3;

/// Reads a comma-separated file with double-quoted fields into rows of
/// fields. The header is returned as the first row.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

std::vector<std::string> read_exclusion_list(const std::filesystem::path& path);

/// Parses the annotation table. Long and short diameters are assigned by
/// Euclidean length, not column order. Rows named in the exclusion list are
/// dropped and counted.
ParseReport parse_annotations(const std::filesystem::path& csv_path,
                              const std::optional<std::filesystem::path>& exclusion_list = std::nullopt);

void write_annotations(const std::filesystem::path& csv_path, const std::vector<RecistAnnotation>& annotations);

/// Groups annotations by file name, preserving row order within a file.
std::map<std::string, std::vector<RecistAnnotation>> group_by_image(const std::vector<RecistAnnotation>& anns);

// Heatmap container: the magic line "RKHM1", one line of JSON header, then
// 13 planes of little-endian float32 in channel order, row-major.

inline constexpr std::string_view kHeatmapMagic = "RKHM1";

std::string encode_heatmaps(const HeatmapBundle<float>& bundle, const nlohmann::json& provenance = {});
HeatmapBundle<float> decode_heatmaps(const std::string& bytes);

void write_heatmaps(const std::filesystem::path& path, const HeatmapBundle<float>& bundle,
                    const nlohmann::json& provenance = {});
void write_heatmaps(const std::filesystem::path& path, const HeatmapBundle<double>& bundle,
                    const nlohmann::json& provenance = {});
HeatmapBundle<float> read_heatmaps(const std::filesystem::path& path);

// Detections document.

using DetectionSet = std::map<std::string, std::vector<Detection>>;

inline constexpr std::string_view kDetectionsFormat = "recist-detections/1";

nlohmann::json detections_to_json(const DetectionSet& dets, const nlohmann::json& config = {});
/// Validates the schema; errors name the offending JSON path.
DetectionSet detections_from_json(const nlohmann::json& doc);

void write_detections(const std::filesystem::path& path, const DetectionSet& dets, const nlohmann::json& config = {});
DetectionSet read_detections(const std::filesystem::path& path);

std::string to_string(Source s);

/// Linear HU window: (v - (level - width / 2)) / width clamped to [0, 1].
template <typename Derived>
Grid<typename Derived::Scalar> apply_ct_window(const Eigen::ArrayBase<Derived>& hu, double level, double width) {
  using Scalar = typename Derived::Scalar;
  if (!(width > 0)) throw std::invalid_argument("apply_ct_window: width must be positive");
  const Scalar lo = static_cast<Scalar>(level - width / 2);
  const Scalar w = static_cast<Scalar>(width);
  return ((hu.derived() - lo) / w).cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
}

std::vector<float> read_raw_f32(const std::filesystem::path& path);
void write_raw_f32(const std::filesystem::path& path, const std::vector<float>& values);

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write leaves no partial output.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace recist

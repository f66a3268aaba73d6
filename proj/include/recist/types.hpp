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

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace recist {

/// Row-major 2-D grid of scalars (heatmaps, offset planes, HU slices).
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Grid2d = Grid<double>;
using Grid2f = Grid<float>;
using Point2d = Point2<double>;

/// Keypoint roles in heatmap channel order.
enum class Role : int { Top = 0, Left = 1, Bottom = 2, Right = 3, Center = 4 };

inline constexpr int kNumKeypoints = 5;
inline constexpr int kNumExtremes = 4;
inline constexpr int kNumOffsetPlanes = 8;
inline constexpr int kNumChannels = kNumKeypoints + kNumOffsetPlanes;

inline constexpr std::array<std::string_view, kNumChannels> kChannelNames = {
    "top",       "left",      "bottom",       "right",       "center",
    "top.dx",    "top.dy",    "left.dx",      "left.dy",     "bottom.dx",
    "bottom.dy", "right.dx",  "right.dy"};

inline constexpr std::string_view role_name(Role r) {
  return kChannelNames[static_cast<std::size_t>(r)];
}

/// Integer cell on an output grid.
struct Cell {
  int row = 0;
  int col = 0;

  friend constexpr bool operator==(const Cell&, const Cell&) = default;
  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

/// Input data that violates a file format or schema.
class InputFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant did not hold.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace recist

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

// Geometric primitives over RECIST annotations. Coordinates are 0-based
// continuous pixels; boxes use the corner convention with width = x2 - x1.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <type_traits>
#include <utility>

#include "recist/types.hpp"

namespace recist {

template <typename Scalar>
struct BBox {
  Scalar x1{0}, y1{0}, x2{0}, y2{0};

  Scalar width() const { return x2 - x1; }
  Scalar height() const { return y2 - y1; }
  Scalar area() const { return std::max(width(), Scalar(0)) * std::max(height(), Scalar(0)); }

  bool contains(const Point2<Scalar>& p) const {
    return p.x() >= x1 && p.x() <= x2 && p.y() >= y1 && p.y() <= y2;
  }

  template <typename Other>
  BBox<Other> cast() const {
    return {Other(x1), Other(y1), Other(x2), Other(y2)};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// The two RECIST diameters of one lesion.
template <typename Scalar>
struct RecistDiameters {
  Point2<Scalar> long_a, long_b;
  Point2<Scalar> short_a, short_b;

  Scalar long_length() const { return (long_b - long_a).norm(); }
  Scalar short_length() const { return (short_b - short_a).norm(); }
};

template <typename Scalar>
struct ExtremePoints {
  Point2<Scalar> top, left, bottom, right, center;

  const Point2<Scalar>& operator[](Role r) const {
    switch (r) {
      case Role::Top: return top;
      case Role::Left: return left;
      case Role::Bottom: return bottom;
      case Role::Right: return right;
      default: return center;
    }
  }
  Point2<Scalar>& operator[](Role r) {
    return const_cast<Point2<Scalar>&>(std::as_const(*this)[r]);
  }

  void update_center() {
    center = Point2<Scalar>((left.x() + right.x()) / 2, (top.y() + bottom.y()) / 2);
  }

  template <typename Other>
  ExtremePoints<Other> cast() const {
    return {top.template cast<Other>(), left.template cast<Other>(),
            bottom.template cast<Other>(), right.template cast<Other>(),
            center.template cast<Other>()};
  }

  bool operator==(const ExtremePoints& o) const {
    return top == o.top && left == o.left && bottom == o.bottom && right == o.right &&
           center == o.center;
  }
};

template <typename Scalar>
struct RecistExtremes {
  ExtremePoints<Scalar> points;
  /// Zero width or zero height; the caller decides whether to keep it.
  bool degenerate = false;
};

namespace detail {

template <typename Scalar>
struct Endpoint {
  Point2<Scalar> p;
  bool on_long;
};

// Picks the endpoint extremal along `axis` (0 = x, 1 = y). Ties prefer the
// long diameter, then the smaller coordinate on the other axis, then input
// order.
template <typename Scalar>
Point2<Scalar> pick_extreme(const std::array<Endpoint<Scalar>, 4>& pts, int axis, bool want_max) {
  const int other = 1 - axis;
  auto better = [&](const Endpoint<Scalar>& a, const Endpoint<Scalar>& b) {
    if (a.p[axis] != b.p[axis]) return want_max ? a.p[axis] > b.p[axis] : a.p[axis] < b.p[axis];
    if (a.on_long != b.on_long) return a.on_long;
    return a.p[other] < b.p[other];
  };
  const Endpoint<Scalar>* best = &pts[0];
  for (const auto& e : pts)
    if (better(e, *best)) best = &e;
  return best->p;
}

}  // namespace detail

template <typename Scalar>
RecistExtremes<Scalar> extremes_from_recist(const RecistDiameters<Scalar>& d) {
  const std::array<detail::Endpoint<Scalar>, 4> pts = {{{d.long_a, true},
                                                        {d.long_b, true},
                                                        {d.short_a, false},
                                                        {d.short_b, false}}};
  for (const auto& e : pts)
    if (!e.p.allFinite()) throw std::invalid_argument("extremes_from_recist: non-finite endpoint");

  RecistExtremes<Scalar> out;
  auto& e = out.points;
  e.top = detail::pick_extreme(pts, 1, false);
  e.bottom = detail::pick_extreme(pts, 1, true);
  e.left = detail::pick_extreme(pts, 0, false);
  e.right = detail::pick_extreme(pts, 0, true);
  e.update_center();
  out.degenerate = e.right.x() == e.left.x() || e.bottom.y() == e.top.y();
  return out;
}

template <typename Scalar>
BBox<Scalar> bbox_from_extremes(const ExtremePoints<Scalar>& e) {
  return {e.left.x(), e.top.y(), e.right.x(), e.bottom.y()};
}

/// Image extent used for optional clamping: [0, width] x [0, height].
template <typename Scalar>
struct ImageBounds {
  Scalar width;
  Scalar height;
};

template <typename Scalar>
BBox<Scalar> pad_bbox(const BBox<Scalar>& b, Scalar pad = Scalar(5),
                      std::optional<std::type_identity_t<ImageBounds<Scalar>>> clamp = std::nullopt) {
  if (pad < 0) throw std::invalid_argument("pad_bbox: negative padding");
  BBox<Scalar> out{b.x1 - pad, b.y1 - pad, b.x2 + pad, b.y2 + pad};
  if (clamp) {
    out.x1 = std::clamp(out.x1, Scalar(0), clamp->width);
    out.x2 = std::clamp(out.x2, Scalar(0), clamp->width);
    out.y1 = std::clamp(out.y1, Scalar(0), clamp->height);
    out.y2 = std::clamp(out.y2, Scalar(0), clamp->height);
  }
  return out;
}

template <typename Scalar>
Scalar iou(const BBox<Scalar>& a, const BBox<Scalar>& b) {
  const Scalar iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const Scalar ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return Scalar(0);
  const Scalar inter = iw * ih;
  const Scalar uni = a.area() + b.area() - inter;
  if (uni <= 0) return Scalar(0);
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

// Horizontal flips map x to width - 1 - x.

template <typename Scalar>
Point2<Scalar> flip_horizontal(const Point2<Scalar>& p, Scalar image_width) {
  return Point2<Scalar>(image_width - 1 - p.x(), p.y());
}

template <typename Scalar>
BBox<Scalar> flip_horizontal(const BBox<Scalar>& b, Scalar image_width) {
  return {image_width - 1 - b.x2, b.y1, image_width - 1 - b.x1, b.y2};
}

/// Left and right swap roles so the result is again a valid ExtremePoints.
template <typename Scalar>
ExtremePoints<Scalar> flip_horizontal(const ExtremePoints<Scalar>& e, Scalar image_width) {
  ExtremePoints<Scalar> out;
  out.top = flip_horizontal(e.top, image_width);
  out.bottom = flip_horizontal(e.bottom, image_width);
  out.left = flip_horizontal(e.right, image_width);
  out.right = flip_horizontal(e.left, image_width);
  out.center = flip_horizontal(e.center, image_width);
  return out;
}

}  // namespace recist

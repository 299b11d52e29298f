#pragma once

#include "graspforge/geometry/types.hpp"

#include <algorithm>
#include <cmath>

namespace graspforge::raster {

inline bool lex_less(const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); }

inline double orient(const Vec2& a, const Vec2& b, const Vec2& q) {
  return (b.x() - a.x()) * (q.y() - a.y()) - (b.y() - a.y()) * (q.x() - a.x());
}

/// Edge function evaluated in a canonical vertex order, so two triangles
/// sharing an edge get exactly opposite values.
inline double edge_fn(const Vec2& a, const Vec2& b, const Vec2& q) {
  return lex_less(a, b) ? orient(a, b, q) : -orient(b, a, q);
}

inline bool top_left(const Vec2& a, const Vec2& b) {
  const double dx = b.x() - a.x(), dy = b.y() - a.y();
  return dy < 0.0 || (dy == 0.0 && dx < 0.0);
}

inline bool covers(double w, const Vec2& a, const Vec2& b) { return w > 0.0 || (w == 0.0 && top_left(a, b)); }

/// Visits the sample points (x0 + i*step, y0 + j*step), 0 <= i < ni,
/// 0 <= j < nj, covered by triangle abc under the top-left rule. A point on
/// an edge shared by two triangles of a consistent mesh is visited exactly
/// once. fn(i, j, wa, wb, wc) receives unnormalized barycentric weights.
/// Returns false (visiting nothing) for triangles of zero projected area.
template <class Fn>
bool rasterize(Vec2 a, Vec2 b, Vec2 c, double x0, double y0, double step, int ni, int nj, Fn&& fn) {
  const double area = orient(a, b, c);
  if (area == 0.0) return false;
  bool swapped = false;
  if (area < 0.0) {
    std::swap(b, c);
    swapped = true;
  }
  const double xmin = std::min({a.x(), b.x(), c.x()}), xmax = std::max({a.x(), b.x(), c.x()});
  const double ymin = std::min({a.y(), b.y(), c.y()}), ymax = std::max({a.y(), b.y(), c.y()});
  const int i0 = std::max(0, static_cast<int>(std::ceil((xmin - x0) / step)));
  const int i1 = std::min(ni - 1, static_cast<int>(std::floor((xmax - x0) / step)));
  const int j0 = std::max(0, static_cast<int>(std::ceil((ymin - y0) / step)));
  const int j1 = std::min(nj - 1, static_cast<int>(std::floor((ymax - y0) / step)));
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const Vec2 q(x0 + i * step, y0 + j * step);
      const double wa = edge_fn(b, c, q), wb = edge_fn(c, a, q), wc = edge_fn(a, b, q);
      if (!covers(wa, b, c) || !covers(wb, c, a) || !covers(wc, a, b)) continue;
      if (swapped) fn(i, j, wa, wc, wb);
      else fn(i, j, wa, wb, wc);
    }
  }
  return true;
}

}  // namespace graspforge::raster

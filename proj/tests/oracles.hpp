#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's own geometry algorithms.

#include "graspforge/geometry/hull.hpp"
#include "graspforge/geometry/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using graspforge::Vec2;
using graspforge::Vec3;

struct Box {
  Vec3 center;
  std::array<Vec3, 3> axes;  // orthonormal
  Vec3 half;

  std::array<Vec3, 8> corners() const {
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i) {
      out[i] = center;
      for (int a = 0; a < 3; ++a) out[i] += ((i >> a) & 1 ? half[a] : -half[a]) * axes[a];
    }
    return out;
  }
};

inline Box random_box(std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), h(0.2, 2.0);
  Eigen::Quaterniond q(u(rng), u(rng), u(rng), u(rng));
  q.normalize();
  const Eigen::Matrix3d r = q.toRotationMatrix();
  return {Vec3(u(rng), u(rng), u(rng)) * spread, {r.col(0), r.col(1), r.col(2)}, Vec3(h(rng), h(rng), h(rng))};
}

inline double project_radius(const Box& b, const Vec3& axis) {
  double r = 0.0;
  for (int i = 0; i < 3; ++i) r += b.half[i] * std::abs(b.axes[i].dot(axis));
  return r;
}

/// Separating-axis test over the 15 candidate axes of two boxes.
inline bool boxes_intersect(const Box& a, const Box& b) {
  std::vector<Vec3> axes;
  for (int i = 0; i < 3; ++i) {
    axes.push_back(a.axes[i]);
    axes.push_back(b.axes[i]);
    for (int j = 0; j < 3; ++j) axes.push_back(a.axes[i].cross(b.axes[j]));
  }
  const Vec3 d = b.center - a.center;
  for (const auto& ax : axes) {
    if (ax.squaredNorm() < 1e-18) continue;
    const Vec3 n = ax.normalized();
    if (std::abs(d.dot(n)) > project_radius(a, n) + project_radius(b, n)) return false;
  }
  return true;
}

inline double point_box_distance(const Vec3& p, const Box& b) {
  double s = 0.0;
  const Vec3 d = p - b.center;
  for (int i = 0; i < 3; ++i) {
    const double c = b.axes[i].dot(d);
    const double excess = std::max(0.0, std::abs(c) - b.half[i]);
    s += excess * excess;
  }
  return std::sqrt(s);
}

/// Closest distance between segments p1q1 and p2q2.
inline double segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= 1e-18 && e <= 1e-18) return r.norm();
  if (a <= 1e-18) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-18) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2), denom = a * e - b * b;
      s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + d1 * s) - (p2 + d2 * t)).norm();
}

/// Box separation: 0 if SAT finds no separating axis, otherwise the minimum
/// over vertex-solid and edge-edge feature pairs.
inline double box_distance(const Box& a, const Box& b) {
  if (boxes_intersect(a, b)) return 0.0;
  const auto ca = a.corners(), cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : ca) best = std::min(best, point_box_distance(p, b));
  for (const auto& p : cb) best = std::min(best, point_box_distance(p, a));
  auto edges = [](const std::array<Vec3, 8>& c) {
    std::vector<std::pair<Vec3, Vec3>> out;
    for (int i = 0; i < 8; ++i)
      for (int bit = 0; bit < 3; ++bit)
        if (!((i >> bit) & 1)) out.emplace_back(c[i], c[i | (1 << bit)]);
    return out;
  };
  for (const auto& [p1, q1] : edges(ca))
    for (const auto& [p2, q2] : edges(cb)) best = std::min(best, segment_distance(p1, q1, p2, q2));
  return best;
}

/// Even-odd point-in-polygon for a simple polygon.
inline bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 &a = poly[i], &b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  }
  return inside;
}

/// Shoelace area of a simple polygon.
inline double polygon_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    s += poly[j].x() * poly[i].y() - poly[i].x() * poly[j].y();
  }
  return 0.5 * std::abs(s);
}

/// Andrew monotone chain 2D hull (counter-clockwise).
inline std::vector<Vec2> hull2d(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i - 1]) <= 0) --k;
    h[k++] = pts[i - 1];
  }
  h.resize(k - 1);
  return h;
}

/// Ray-parity inside test for a closed triangle mesh with a fixed skewed ray
/// direction (independent of the library's axis-aligned crossing code).
inline bool inside_mesh(const graspforge::TriMesh& mesh, const Vec3& p) {
  const Vec3 dir = Vec3(0.5773, 0.3341, 0.7447).normalized();
  int hits = 0;
  for (const auto& f : mesh.faces) {
    const Vec3 &v0 = mesh.vertices[f[0]], &v1 = mesh.vertices[f[1]], &v2 = mesh.vertices[f[2]];
    const Vec3 e1 = v1 - v0, e2 = v2 - v0, h = dir.cross(e2);
    const double det = e1.dot(h);
    if (std::abs(det) < 1e-14) continue;
    const Vec3 s = p - v0;
    const double u = s.dot(h) / det;
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) / det;
    if (v < 0.0 || u + v > 1.0) continue;
    if (e2.dot(q) / det > 0.0) ++hits;
  }
  return hits % 2 == 1;
}

/// Point inside all half-spaces n.x <= d (within tol).
inline bool inside_planes(const std::vector<graspforge::Plane>& planes, const Vec3& p, double tol) {
  for (const auto& pl : planes)
    if (pl.normal.dot(p) - pl.offset > tol) return false;
  return true;
}

}  // namespace oracle

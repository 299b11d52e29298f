#include "graspforge/geometry/gjk.hpp"

#include <algorithm>
#include <cmath>

namespace graspforge {
namespace detail {

namespace {

struct Closest {
  Vec3 point;
  std::array<double, 3> bary;  // weights of the triangle vertices a, b, c
};

// Closest point of a triangle to the origin (Voronoi region walk).
Closest closest_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = -a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {a, {1, 0, 0}};
  const Vec3 bp = -b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {b, {0, 1, 0}};
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return {a + v * ab, {1 - v, v, 0}};
  }
  const Vec3 cp = -c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {c, {0, 0, 1}};
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return {a + w * ac, {1 - w, 0, w}};
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {b + w * (c - b), {0, 1 - w, w}};
  }
  const double denom = va + vb + vc;
  if (!(std::abs(denom) > 0.0)) {
    // Degenerate triangle: fall back to the best edge.
    Closest best{a, {1, 0, 0}};
    auto seg = [&](const Vec3& p, const Vec3& q, int i, int j) {
      const Vec3 pq = q - p;
      const double len2 = pq.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp(-p.dot(pq) / len2, 0.0, 1.0) : 0.0;
      const Vec3 x = p + t * pq;
      if (x.squaredNorm() < best.point.squaredNorm()) {
        best.point = x;
        best.bary = {0, 0, 0};
        best.bary[i] = 1 - t;
        best.bary[j] = t;
      }
    };
    seg(a, b, 0, 1);
    seg(b, c, 1, 2);
    seg(a, c, 0, 2);
    return best;
  }
  const double v = vb / denom, w = vc / denom;
  return {a + ab * v + ac * w, {1 - v - w, v, w}};
}

}  // namespace

Vec3 Simplex::reduce(bool& enclosed) {
  enclosed = false;
  std::array<double, 4> lam{};
  std::array<bool, 4> keep{};
  Vec3 result = Vec3::Zero();
  switch (size) {
    case 1:
      lam[0] = 1.0;
      result = pts[0].w;
      break;
    case 2: {
      const Vec3 a = pts[0].w, ab = pts[1].w - pts[0].w;
      const double len2 = ab.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp(-a.dot(ab) / len2, 0.0, 1.0) : 0.0;
      lam[0] = 1.0 - t;
      lam[1] = t;
      result = a + t * ab;
      break;
    }
    case 3: {
      const Closest c = closest_on_triangle(pts[0].w, pts[1].w, pts[2].w);
      for (int i = 0; i < 3; ++i) lam[i] = c.bary[i];
      result = c.point;
      break;
    }
    case 4: {
      const Vec3 &a = pts[0].w, &b = pts[1].w, &c = pts[2].w, &d = pts[3].w;
      // Signed volumes of the sub-tetrahedra with the origin replacing one vertex.
      const double vol = (b - a).dot((c - a).cross(d - a));
      const double va = b.dot(c.cross(d));   // origin replaces a
      const double vb = -a.dot(c.cross(d));  // (a, o, c, d) = -(a . (c x d))
      const double vc = a.dot(b.cross(d));
      const double vd = -a.dot(b.cross(c));
      if (vol != 0.0) {
        const double la = va / vol, lb = vb / vol, lc = vc / vol, ld = vd / vol;
        if (la >= 0.0 && lb >= 0.0 && lc >= 0.0 && ld >= 0.0) {
          enclosed = true;
          lambda = {la, lb, lc, ld};
          return Vec3::Zero();
        }
      }
      const std::array<std::array<int, 3>, 4> tri = {{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : tri) {
        const Closest c3 = closest_on_triangle(pts[t[0]].w, pts[t[1]].w, pts[t[2]].w);
        const double dist = c3.point.squaredNorm();
        if (dist < best) {
          best = dist;
          result = c3.point;
          lam = {0, 0, 0, 0};
          for (int k = 0; k < 3; ++k) lam[t[k]] = c3.bary[k];
        }
      }
      break;
    }
    default:
      break;
  }
  // Drop vertices that no longer support the closest point.
  int m = 0;
  for (int i = 0; i < size; ++i) keep[i] = lam[i] > 0.0;
  std::array<SupportPoint, 4> kept;
  for (int i = 0; i < size; ++i) {
    if (!keep[i]) continue;
    kept[m] = pts[i];
    lambda[m] = lam[i];
    ++m;
  }
  if (m == 0) {
    kept[0] = pts[0];
    lambda[0] = 1.0;
    m = 1;
  }
  pts = kept;
  size = m;
  return result;
}

}  // namespace detail

Vec3 PointSetSupport::operator()(const Vec3& d) const {
  std::size_t best = 0;
  double best_dot = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double v = points[i].dot(d);
    if (v > best_dot) {
      best_dot = v;
      best = i;
    }
  }
  return points[best];
}

DistanceResult gjk_distance(const ConvexPiece& a, const Pose3& pose_a, const ConvexPiece& b,
                            const Pose3& pose_b) {
  const PosedPieceSupport sa{&a, pose_a};
  const PosedPieceSupport sb{&b, pose_b};
  // Seed the direction from the centroids so swapping arguments mirrors the iteration.
  Vec3 dir = pose_a.apply(a.vertices.front()) - pose_b.apply(b.vertices.front());
  if (dir.squaredNorm() == 0.0) dir = Vec3::UnitX();
  return gjk(sa, sb, dir);
}

}  // namespace graspforge

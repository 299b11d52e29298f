#pragma once

#include "graspforge/geometry/hull.hpp"
#include "graspforge/geometry/pose.hpp"
#include "graspforge/geometry/types.hpp"

#include <array>
#include <span>

namespace graspforge {

struct DistanceResult {
  double distance = 0.0;  // 0 when the shapes intersect or touch
  Vec3 point_a = Vec3::Zero();  // closest point on A
  Vec3 point_b = Vec3::Zero();  // closest point on B
  bool converged = true;  // false when the 128-iteration cap was hit
  int iterations = 0;
};

constexpr int kGjkMaxIterations = 128;

namespace detail {

struct SupportPoint {
  Vec3 w;  // a - b
  Vec3 a;
  Vec3 b;
};

/// Simplex of the Minkowski difference, reduced in place to the smallest
/// face that supports the point closest to the origin.
struct Simplex {
  std::array<SupportPoint, 4> pts;
  std::array<double, 4> lambda{};
  int size = 0;

  /// Returns the closest point; sets `enclosed` when the origin lies inside
  /// a full tetrahedron.
  Vec3 reduce(bool& enclosed);
};

}  // namespace detail

/// GJK distance between two convex sets given by support functions
/// (support(d) returns a point maximizing d . x).
template <class SupportA, class SupportB>
DistanceResult gjk(const SupportA& support_a, const SupportB& support_b,
                   const Vec3& initial_dir = Vec3::UnitX()) {
  DistanceResult out;
  detail::Simplex simplex;
  Vec3 v = support_a(initial_dir) - support_b(-initial_dir);
  double prev = std::numeric_limits<double>::infinity();
  bool enclosed = false;
  for (out.iterations = 0; out.iterations < kGjkMaxIterations; ++out.iterations) {
    detail::SupportPoint p;
    p.a = support_a(-v);
    p.b = support_b(v);
    p.w = p.a - p.b;
    const double vv = v.squaredNorm();
    if (simplex.size > 0 && vv - v.dot(p.w) <= 1e-13 * vv) break;
    bool duplicate = false;
    for (int i = 0; i < simplex.size; ++i) duplicate |= (simplex.pts[i].w == p.w);
    if (duplicate) break;
    simplex.pts[simplex.size++] = p;
    v = simplex.reduce(enclosed);
    const double nv = v.squaredNorm();
    if (enclosed || nv <= 1e-24) {
      enclosed = true;
      break;
    }
    if (nv >= prev) break;
    prev = nv;
  }
  out.converged = out.iterations < kGjkMaxIterations;
  Vec3 pa = Vec3::Zero(), pb = Vec3::Zero();
  for (int i = 0; i < simplex.size; ++i) {
    pa += simplex.lambda[i] * simplex.pts[i].a;
    pb += simplex.lambda[i] * simplex.pts[i].b;
  }
  out.point_a = pa;
  out.point_b = pb;
  out.distance = enclosed ? 0.0 : v.norm();
  return out;
}

/// Support over an explicit point set (already in the query frame).
struct PointSetSupport {
  std::span<const Vec3> points;
  Vec3 operator()(const Vec3& d) const;
};

/// Support of an oriented box.
struct BoxSupport {
  Vec3 center = Vec3::Zero();
  std::array<Vec3, 3> axes{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  Vec3 half = Vec3::Ones();
  Vec3 operator()(const Vec3& d) const {
    Vec3 p = center;
    for (int i = 0; i < 3; ++i) p += (axes[i].dot(d) >= 0.0 ? half[i] : -half[i]) * axes[i];
    return p;
  }
};

/// Support of a piece placed by a pose.
struct PosedPieceSupport {
  const ConvexPiece* piece;
  Pose3 pose;
  Vec3 operator()(const Vec3& d) const { return pose.apply(piece->support(pose.inverse_rotate(d))); }
};

/// Euclidean separation of two posed convex pieces; 0 when intersecting or
/// touching. Symmetric in its arguments.
DistanceResult gjk_distance(const ConvexPiece& a, const Pose3& pose_a, const ConvexPiece& b,
                            const Pose3& pose_b);

}  // namespace graspforge

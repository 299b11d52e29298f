#pragma once

#include "graspforge/geometry/types.hpp"

#include <span>
#include <vector>

namespace graspforge {

struct Plane {
  Vec3 normal = Vec3::UnitZ();  // unit, outward
  double offset = 0.0;          // normal . x = offset on the plane

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

/// Convex polytope stored as its hull vertices plus the triangulated hull.
/// Every vertex lies on the hull; planes[i] belongs to faces[i].
struct ConvexPiece {
  std::vector<Vec3> vertices;
  std::vector<Index3> faces;
  std::vector<Plane> planes;

  double volume() const;
  Vec3 centroid() const;
  Aabb bounds() const;
  /// Half-space test against every hull face.
  bool contains(const Vec3& p, double tol = 1e-6) const;
  Vec3 support(const Vec3& dir) const;
};

struct Pose3;
/// Piece moved by a rigid pose (vertices and planes).
ConvexPiece transformed(const ConvexPiece& piece, const Pose3& pose);

/// Incremental 3D convex hull. Output vertices are a subset of the input.
/// Throws DegenerateInput for fewer than 4 points or (near-)coplanar input.
ConvexPiece convex_hull(std::span<const Vec3> points);

}  // namespace graspforge

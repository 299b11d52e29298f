#pragma once

#include "graspforge/geometry/hull.hpp"
#include "graspforge/geometry/mesh.hpp"
#include "graspforge/geometry/pose.hpp"

#include <optional>

namespace graspforge {

/// Smallest t >= 0 with origin + t*dir on the surface. dir must be unit
/// length within 1e-9 (InvalidRay otherwise).
std::optional<double> raycast(const Vec3& origin, const Vec3& dir, const TriMesh& mesh,
                              const Pose3& pose = {});
std::optional<double> raycast(const Vec3& origin, const Vec3& dir, const ConvexPiece& piece,
                              const Pose3& pose = {});

}  // namespace graspforge

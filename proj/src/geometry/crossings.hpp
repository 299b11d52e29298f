#pragma once

// Internal helpers shared by voxelization and decomposition.

#include "graspforge/geometry/mesh.hpp"

#include <vector>

namespace graspforge::detail {

/// Family of lines parallel to `axis`. Line (i, j) passes through
/// u = u0 + i*spacing, v = v0 + j*spacing where (u, v) are the two other axes
/// in cyclic order.
struct LineGrid {
  int axis = 2;
  double u0 = 0.0;
  double v0 = 0.0;
  double spacing = 1.0;
  int nu = 1;
  int nv = 1;

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nu + i; }
};

/// Sorted surface crossing coordinates (along the axis) for every line. A line
/// through a shared edge or vertex is counted by exactly one triangle of a
/// watertight mesh (top-left rule on canonicalized edge functions).
std::vector<std::vector<double>> line_crossings(const TriMesh& mesh, const LineGrid& grid);

/// Generalized winding number of a closed mesh about p: ~1 inside, ~0 outside.
double winding_number(const TriMesh& mesh, const Vec3& p);

}  // namespace graspforge::detail

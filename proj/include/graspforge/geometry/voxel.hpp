#pragma once

#include "graspforge/geometry/mesh.hpp"
#include "graspforge/geometry/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace graspforge {

/// Regular occupancy grid. Cell (i,j,k) spans origin + [i,i+1)*cell_size, etc.
struct VoxelGrid {
  Vec3 origin = Vec3::Zero();
  double cell_size = 1.0;
  Index3 dims{1, 1, 1};
  std::vector<std::uint8_t> occupancy;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  bool occupied(int i, int j, int k) const { return occupancy[index(i, j, k)] != 0; }
  Vec3 center(int i, int j, int k) const {
    return origin + cell_size * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  std::size_t occupied_count() const;
  std::vector<Index3> occupied_cells() const;
};

/// A voxel is occupied iff its center is inside the mesh, decided by the
/// majority of three axis-parallel parity votes. The grid is centered on the
/// mesh bounds and covers them. Throws OpenMesh when more than 0.5% of the
/// cells get disagreeing votes (a closed mesh never disagrees).
VoxelGrid voxelize(const TriMesh& mesh, double cell_size);

/// (hull volume - occupied volume) / hull volume of a set of cells, where the
/// hull is taken over the cell corners. Throws EmptyShape on an empty set.
double concavity(const VoxelGrid& grid, std::span<const Index3> cells);

}  // namespace graspforge

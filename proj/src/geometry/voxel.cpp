#include "graspforge/geometry/voxel.hpp"

#include "crossings.hpp"
#include "graspforge/error.hpp"
#include "graspforge/geometry/hull.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace graspforge {

std::size_t VoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), std::uint8_t{1}));
}

std::vector<Index3> VoxelGrid::occupied_cells() const {
  std::vector<Index3> out;
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i)
        if (occupied(i, j, k)) out.push_back({i, j, k});
  return out;
}

VoxelGrid voxelize(const TriMesh& mesh, double cell_size) {
  if (!(cell_size > 0.0)) throw Error("DegenerateInput", "cell_size must be positive");
  mesh.validate(true);
  const Aabb box = mesh.bounds();
  VoxelGrid grid;
  grid.cell_size = cell_size;
  for (int a = 0; a < 3; ++a) {
    grid.dims[a] = std::max(1, static_cast<int>(std::ceil(box.extent()[a] / cell_size - 1e-9)));
  }
  const Vec3 span(grid.dims[0] * cell_size, grid.dims[1] * cell_size, grid.dims[2] * cell_size);
  grid.origin = box.center() - 0.5 * span;
  const std::size_t total = static_cast<std::size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  std::vector<std::uint8_t> votes(total, 0);

  for (int ax = 0; ax < 3; ++ax) {
    const int au = (ax + 1) % 3, av = (ax + 2) % 3;
    detail::LineGrid lines;
    lines.axis = ax;
    lines.spacing = cell_size;
    lines.u0 = grid.origin[au] + 0.5 * cell_size;
    lines.v0 = grid.origin[av] + 0.5 * cell_size;
    lines.nu = grid.dims[au];
    lines.nv = grid.dims[av];
    const auto crossings = detail::line_crossings(mesh, lines);
    for (int j = 0; j < lines.nv; ++j) {
      for (int i = 0; i < lines.nu; ++i) {
        const auto& line = crossings[lines.index(i, j)];
        std::size_t passed = 0;
        for (int s = 0; s < grid.dims[ax]; ++s) {
          const double t = grid.origin[ax] + (s + 0.5) * cell_size;
          while (passed < line.size() && line[passed] < t) ++passed;
          if (passed % 2 == 1) {
            Index3 c;
            c[ax] = s;
            c[au] = i;
            c[av] = j;
            ++votes[grid.index(c[0], c[1], c[2])];
          }
        }
      }
    }
  }

  grid.occupancy.assign(total, 0);
  std::size_t disagree = 0;
  for (std::size_t c = 0; c < total; ++c) {
    grid.occupancy[c] = votes[c] >= 2 ? 1 : 0;
    if (votes[c] != 0 && votes[c] != 3) ++disagree;
  }
  if (static_cast<double>(disagree) > 0.005 * static_cast<double>(total)) {
    throw Error("OpenMesh", fmt::format("inside votes disagree on {} of {} cells", disagree, total));
  }
  return grid;
}

double concavity(const VoxelGrid& grid, std::span<const Index3> cells) {
  if (cells.empty()) throw Error("EmptyShape", "concavity of an empty voxel set");
  // Only corners extreme along their x line can be hull vertices.
  std::map<std::pair<int, int>, std::pair<int, int>> extremes;
  for (const auto& c : cells) {
    for (int dz = 0; dz <= 1; ++dz) {
      for (int dy = 0; dy <= 1; ++dy) {
        const std::pair<int, int> key{c[1] + dy, c[2] + dz};
        auto [it, fresh] = extremes.try_emplace(key, c[0], c[0] + 1);
        if (!fresh) {
          it->second.first = std::min(it->second.first, c[0]);
          it->second.second = std::max(it->second.second, c[0] + 1);
        }
      }
    }
  }
  std::vector<Vec3> corners;
  corners.reserve(extremes.size() * 2);
  for (const auto& [key, range] : extremes) {
    for (int x : {range.first, range.second}) {
      corners.push_back(grid.origin + grid.cell_size * Vec3(x, key.first, key.second));
    }
  }
  const double hull = convex_hull(corners).volume();
  const double occupied = static_cast<double>(cells.size()) * std::pow(grid.cell_size, 3);
  return std::clamp((hull - occupied) / hull, 0.0, 1.0);
}

}  // namespace graspforge

#include "crossings.hpp"

#include "graspforge/geometry/raster.hpp"

#include <algorithm>
#include <cmath>

namespace graspforge::detail {

std::vector<std::vector<double>> line_crossings(const TriMesh& mesh, const LineGrid& grid) {
  const int ax = grid.axis, au = (ax + 1) % 3, av = (ax + 2) % 3;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(grid.nu) * grid.nv);
  for (const auto& f : mesh.faces) {
    const Vec3& A = mesh.vertices[f[0]];
    const Vec3& B = mesh.vertices[f[1]];
    const Vec3& C = mesh.vertices[f[2]];
    raster::rasterize(Vec2(A[au], A[av]), Vec2(B[au], B[av]), Vec2(C[au], C[av]), grid.u0, grid.v0,
                      grid.spacing, grid.nu, grid.nv, [&](int i, int j, double wa, double wb, double wc) {
                        const double sum = wa + wb + wc;
                        const double t = sum != 0.0 ? (wa * A[ax] + wb * B[ax] + wc * C[ax]) / sum : A[ax];
                        out[grid.index(i, j)].push_back(t);
                      });
  }
  for (auto& line : out) std::sort(line.begin(), line.end());
  return out;
}

double winding_number(const TriMesh& mesh, const Vec3& p) {
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3 a = mesh.vertices[f[0]] - p, b = mesh.vertices[f[1]] - p, c = mesh.vertices[f[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * M_PI);
}

}  // namespace graspforge::detail

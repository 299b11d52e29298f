#pragma once

#include "graspforge/geometry/pose.hpp"
#include "graspforge/geometry/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace graspforge {

/// Triangle mesh in millimeters. Faces are counter-clockwise seen from outside.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Index3> faces;

  /// Checks index range and finiteness; closed solids additionally need at
  /// least 4 vertices and 4 faces. Throws InvalidMesh.
  void validate(bool closed_solid = true) const;

  /// Signed volume from the divergence theorem (positive for outward faces).
  double volume() const;
  Aabb bounds() const;
  Vec3 face_normal(std::size_t f) const;
  TriMesh transformed(const Pose3& pose) const;
};

TriMesh make_box(const Vec3& half_extents, const Vec3& center = Vec3::Zero());

/// UV sphere with a vertex at each pole.
TriMesh make_uv_sphere(double radius, int rings, int sectors, const Vec3& center = Vec3::Zero());

/// Prism from a simple counter-clockwise polygon in the xy plane, spanning z0..z1.
TriMesh extrude_polygon(std::span<const Vec2> outline, double z0, double z1);

/// ASCII OBJ subset: "v x y z" and "f i j k" lines with 1-based indices.
/// Polygon faces are fan-triangulated; "i/t/n" tokens keep the vertex index.
TriMesh parse_obj(std::istream& in);
TriMesh read_obj(const std::filesystem::path& path);
void write_obj(std::ostream& out, const TriMesh& mesh);
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);

}  // namespace graspforge

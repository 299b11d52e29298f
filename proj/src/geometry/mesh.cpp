#include "graspforge/geometry/mesh.hpp"

#include "graspforge/error.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace graspforge {

void TriMesh::validate(bool closed_solid) const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw Error("InvalidMesh", "non-finite vertex coordinate");
  }
  for (const auto& f : faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= n) throw Error("InvalidMesh", "face index out of range");
    }
  }
  if (closed_solid && (vertices.size() < 4 || faces.size() < 4)) {
    throw Error("InvalidMesh", "a closed solid needs at least 4 vertices and 4 faces");
  }
}

double TriMesh::volume() const {
  double six_v = 0.0;
  for (const auto& f : faces) {
    six_v += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]]));
  }
  return six_v / 6.0;
}

Aabb TriMesh::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.extend(v);
  return box;
}

Vec3 TriMesh::face_normal(std::size_t f) const {
  const auto& t = faces[f];
  return (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).normalized();
}

TriMesh TriMesh::transformed(const Pose3& pose) const {
  TriMesh out = *this;
  for (auto& v : out.vertices) v = pose.apply(v);
  return out;
}

TriMesh make_box(const Vec3& half_extents, const Vec3& center) {
  TriMesh m;
  m.vertices.reserve(8);
  for (int i = 0; i < 8; ++i) {
    const Vec3 s((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    m.vertices.push_back(center + s.cwiseProduct(half_extents));
  }
  m.faces = {{0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}, {0, 1, 5}, {0, 5, 4},
             {2, 6, 7}, {2, 7, 3}, {0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}};
  return m;
}

TriMesh make_uv_sphere(double radius, int rings, int sectors, const Vec3& center) {
  if (rings < 2 || sectors < 3) throw Error("InvalidMesh", "sphere needs rings >= 2, sectors >= 3");
  TriMesh m;
  m.vertices.push_back(center + Vec3(0, 0, radius));
  for (int r = 1; r < rings; ++r) {
    const double phi = M_PI * r / rings;
    for (int s = 0; s < sectors; ++s) {
      const double th = 2.0 * M_PI * s / sectors;
      m.vertices.push_back(center + radius * Vec3(std::sin(phi) * std::cos(th),
                                                  std::sin(phi) * std::sin(th), std::cos(phi)));
    }
  }
  m.vertices.push_back(center + Vec3(0, 0, -radius));
  const int south = static_cast<int>(m.vertices.size()) - 1;
  auto ring = [&](int r, int s) { return 1 + (r - 1) * sectors + (s % sectors); };
  for (int s = 0; s < sectors; ++s) m.faces.push_back({0, ring(1, s), ring(1, s + 1)});
  for (int r = 1; r + 1 < rings; ++r) {
    for (int s = 0; s < sectors; ++s) {
      m.faces.push_back({ring(r, s), ring(r + 1, s), ring(r + 1, s + 1)});
      m.faces.push_back({ring(r, s), ring(r + 1, s + 1), ring(r, s + 1)});
    }
  }
  for (int s = 0; s < sectors; ++s) m.faces.push_back({south, ring(rings - 1, s + 1), ring(rings - 1, s)});
  return m;
}

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Ear clipping of a simple counter-clockwise polygon.
std::vector<Index3> triangulate_polygon(std::span<const Vec2> poly) {
  std::vector<int> idx(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<Index3> tris;
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int a = idx[(i + idx.size() - 1) % idx.size()];
      const int b = idx[i];
      const int c = idx[(i + 1) % idx.size()];
      if (cross2(poly[b] - poly[a], poly[c] - poly[b]) <= 0.0) continue;
      bool contains = false;
      for (int k : idx) {
        if (k == a || k == b || k == c) continue;
        const Vec2& p = poly[k];
        if (cross2(poly[b] - poly[a], p - poly[a]) >= 0.0 &&
            cross2(poly[c] - poly[b], p - poly[b]) >= 0.0 &&
            cross2(poly[a] - poly[c], p - poly[c]) >= 0.0) {
          contains = true;
          break;
        }
      }
      if (contains) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw Error("InvalidMesh", "polygon is not simple and counter-clockwise");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

}  // namespace

TriMesh extrude_polygon(std::span<const Vec2> outline, double z0, double z1) {
  const int n = static_cast<int>(outline.size());
  if (n < 3 || !(z1 > z0)) throw Error("InvalidMesh", "extrusion needs >= 3 points and z1 > z0");
  TriMesh m;
  for (const auto& p : outline) m.vertices.emplace_back(p.x(), p.y(), z0);
  for (const auto& p : outline) m.vertices.emplace_back(p.x(), p.y(), z1);
  for (const auto& t : triangulate_polygon(outline)) {
    m.faces.push_back({t[0], t[2], t[1]});
    m.faces.push_back({t[0] + n, t[1] + n, t[2] + n});
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    m.faces.push_back({i, j, j + n});
    m.faces.push_back({i, j + n, i + n});
  }
  return m;
}

TriMesh parse_obj(std::istream& in) {
  TriMesh m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw Error("InvalidMesh", fmt::format("bad vertex on line {}", line_no));
      m.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> ids;
      std::string tok;
      while (ls >> tok) ids.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
      if (ids.size() < 3) throw Error("InvalidMesh", fmt::format("bad face on line {}", line_no));
      for (std::size_t k = 1; k + 1 < ids.size(); ++k) m.faces.push_back({ids[0], ids[k], ids[k + 1]});
    }
  }
  m.validate(false);
  return m;
}

TriMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("MeshNotFound", path.string());
  return parse_obj(in);
}

void write_obj(std::ostream& out, const TriMesh& mesh) {
  for (const auto& v : mesh.vertices) out << fmt::format("v {:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());
  for (const auto& f : mesh.faces) out << fmt::format("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1);
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  write_obj(out, mesh);
}

}  // namespace graspforge

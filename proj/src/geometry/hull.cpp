#include "graspforge/geometry/hull.hpp"

#include "graspforge/error.hpp"
#include "graspforge/geometry/pose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace graspforge {

double ConvexPiece::volume() const {
  if (vertices.empty()) return 0.0;
  const Vec3 c = vertices.front();
  double six_v = 0.0;
  for (const auto& f : faces) {
    six_v += (vertices[f[0]] - c).dot((vertices[f[1]] - c).cross(vertices[f[2]] - c));
  }
  return six_v / 6.0;
}

Vec3 ConvexPiece::centroid() const {
  if (vertices.empty()) return Vec3::Zero();
  const Vec3 c = vertices.front();
  double total = 0.0;
  Vec3 acc = Vec3::Zero();
  for (const auto& f : faces) {
    const Vec3 a = vertices[f[0]] - c, b = vertices[f[1]] - c, d = vertices[f[2]] - c;
    const double v = a.dot(b.cross(d));
    total += v;
    acc += v * (a + b + d) / 4.0;
  }
  return total > 0.0 ? Vec3(c + acc / total) : c;
}

Aabb ConvexPiece::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.extend(v);
  return box;
}

bool ConvexPiece::contains(const Vec3& p, double tol) const {
  for (const auto& pl : planes) {
    if (pl.signed_distance(p) > tol) return false;
  }
  return !planes.empty();
}

Vec3 ConvexPiece::support(const Vec3& dir) const {
  std::size_t best = 0;
  double best_dot = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const double d = vertices[i].dot(dir);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return vertices[best];
}

ConvexPiece transformed(const ConvexPiece& piece, const Pose3& pose) {
  ConvexPiece out;
  out.faces = piece.faces;
  out.vertices.reserve(piece.vertices.size());
  for (const auto& v : piece.vertices) out.vertices.push_back(pose.apply(v));
  out.planes.reserve(piece.planes.size());
  for (const auto& pl : piece.planes) {
    const Vec3 n = pose.rotate(pl.normal);
    out.planes.push_back({n, pl.offset + n.dot(pose.translation)});
  }
  return out;
}

namespace {

struct HullFace {
  std::array<int, 3> v;
  Vec3 n;
  double d;
  bool alive = true;
};

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

namespace {

ConvexPiece hull_pass(std::span<const Vec3> pts) {
  const int n = static_cast<int>(pts.size());
  if (n < 4) throw Error("DegenerateInput", "convex hull needs at least 4 points");
  Aabb box;
  for (const auto& p : pts) {
    if (!p.allFinite()) throw Error("DegenerateInput", "non-finite point");
    box.extend(p);
  }
  const double scale = std::max(box.extent().maxCoeff(), 1e-300);
  const double eps = 1e-10 * std::max(scale, box.lo.cwiseAbs().maxCoeff() + scale);

  // Initial tetrahedron from extreme points.
  int i0 = 0;
  for (int i = 1; i < n; ++i) {
    if (pts[i].x() < pts[i0].x()) i0 = i;
  }
  int i1 = -1;
  double best = eps;
  for (int i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).norm();
    if (d > best) best = d, i1 = i;
  }
  if (i1 < 0) throw Error("DegenerateInput", "points are coincident");
  const Vec3 axis = (pts[i1] - pts[i0]).normalized();
  int i2 = -1;
  best = eps;
  for (int i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).cross(axis).norm();
    if (d > best) best = d, i2 = i;
  }
  if (i2 < 0) throw Error("DegenerateInput", "points are collinear");
  const Vec3 pn = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  int i3 = -1;
  best = eps;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs((pts[i] - pts[i0]).dot(pn));
    if (d > best) best = d, i3 = i;
  }
  if (i3 < 0) throw Error("DegenerateInput", "points are coplanar");

  std::vector<HullFace> faces;
  std::unordered_map<std::uint64_t, int> edges;
  auto add_face = [&](int a, int b, int c) {
    HullFace f;
    f.v = {a, b, c};
    const Vec3 raw = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = raw.norm();
    f.n = len > 0.0 ? Vec3(raw / len) : Vec3::Zero();
    f.d = f.n.dot(pts[a]);
    const int id = static_cast<int>(faces.size());
    faces.push_back(f);
    edges[edge_key(a, b)] = id;
    edges[edge_key(b, c)] = id;
    edges[edge_key(c, a)] = id;
  };
  const Vec3 inner = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  const std::array<std::array<int, 3>, 4> tet = {{{i0, i1, i2}, {i0, i3, i1}, {i1, i3, i2}, {i2, i3, i0}}};
  const bool flip = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).dot(inner - pts[i0]) > 0.0;
  for (const auto& t : tet) {
    if (flip) add_face(t[0], t[2], t[1]);
    else add_face(t[0], t[1], t[2]);
  }

  std::vector<int> visible;
  std::vector<std::pair<int, int>> horizon;
  std::vector<char> is_visible;
  for (int p = 0; p < n; ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    visible.clear();
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
      if (faces[f].alive && faces[f].n.dot(pts[p]) - faces[f].d > eps) visible.push_back(f);
    }
    if (visible.empty()) continue;
    is_visible.assign(faces.size(), 0);
    for (int f : visible) is_visible[f] = 1;
    horizon.clear();
    for (int f : visible) {
      const auto& v = faces[f].v;
      for (int e = 0; e < 3; ++e) {
        const int a = v[e], b = v[(e + 1) % 3];
        auto it = edges.find(edge_key(b, a));
        if (it == edges.end() || !is_visible[it->second]) horizon.emplace_back(a, b);
      }
    }
    for (int f : visible) {
      faces[f].alive = false;
      const auto& v = faces[f].v;
      for (int e = 0; e < 3; ++e) {
        auto it = edges.find(edge_key(v[e], v[(e + 1) % 3]));
        if (it != edges.end() && it->second == f) edges.erase(it);
      }
    }
    for (const auto& [a, b] : horizon) add_face(a, b, p);
  }

  ConvexPiece out;
  std::vector<int> remap(n, -1);
  for (const auto& f : faces) {
    if (!f.alive) continue;
    Index3 tri;
    for (int k = 0; k < 3; ++k) {
      int& r = remap[f.v[k]];
      if (r < 0) {
        r = static_cast<int>(out.vertices.size());
        out.vertices.push_back(pts[f.v[k]]);
      }
      tri[k] = r;
    }
    out.faces.push_back(tri);
    out.planes.push_back({f.n, f.d});
  }
  return out;
}

}  // namespace

ConvexPiece convex_hull(std::span<const Vec3> pts) {
  ConvexPiece hull = hull_pass(pts);
  // Points on hull edges or inside hull faces survive the incremental pass
  // when they arrive early; keep only true corners (incident face normals
  // spanning 3D) and rebuild.
  std::vector<std::vector<int>> incident(hull.vertices.size());
  for (int f = 0; f < static_cast<int>(hull.faces.size()); ++f) {
    for (int v : hull.faces[f]) incident[v].push_back(f);
  }
  std::vector<Vec3> corners;
  for (std::size_t v = 0; v < hull.vertices.size(); ++v) {
    const auto& fs = incident[v];
    bool corner = false;
    for (std::size_t i = 0; i < fs.size() && !corner; ++i)
      for (std::size_t j = i + 1; j < fs.size() && !corner; ++j)
        for (std::size_t k = j + 1; k < fs.size() && !corner; ++k)
          corner = std::abs(hull.planes[fs[i]].normal.dot(
                       hull.planes[fs[j]].normal.cross(hull.planes[fs[k]].normal))) > 1e-9;
    if (corner) corners.push_back(hull.vertices[v]);
  }
  if (corners.size() == hull.vertices.size() || corners.size() < 4) return hull;
  return hull_pass(corners);
}

}  // namespace graspforge

#include "graspforge/geometry/raycast.hpp"

#include "graspforge/error.hpp"

#include <cmath>

namespace graspforge {

namespace {

void check_dir(const Vec3& dir) {
  if (!dir.allFinite() || std::abs(dir.norm() - 1.0) > 1e-9) {
    throw Error("InvalidRay", "ray direction must be unit length");
  }
}

}  // namespace

std::optional<double> raycast(const Vec3& origin, const Vec3& dir, const TriMesh& mesh,
                              const Pose3& pose) {
  check_dir(dir);
  const Vec3 o = pose.inverse_apply(origin);
  const Vec3 d = pose.inverse_rotate(dir);
  std::optional<double> best;
  for (const auto& f : mesh.faces) {
    // Moller-Trumbore, two-sided.
    const Vec3& v0 = mesh.vertices[f[0]];
    const Vec3 e1 = mesh.vertices[f[1]] - v0;
    const Vec3 e2 = mesh.vertices[f[2]] - v0;
    const Vec3 p = d.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < 1e-15) continue;
    const double inv = 1.0 / det;
    const Vec3 s = o - v0;
    const double u = s.dot(p) * inv;
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 q = s.cross(e1);
    const double v = d.dot(q) * inv;
    if (v < 0.0 || u + v > 1.0) continue;
    const double t = e2.dot(q) * inv;
    if (t >= 0.0 && (!best || t < *best)) best = t;
  }
  return best;
}

std::optional<double> raycast(const Vec3& origin, const Vec3& dir, const ConvexPiece& piece,
                              const Pose3& pose) {
  check_dir(dir);
  const Vec3 o = pose.inverse_apply(origin);
  const Vec3 d = pose.inverse_rotate(dir);
  // Cyrus-Beck clipping against the face planes.
  double t_enter = 0.0;
  double t_exit = std::numeric_limits<double>::infinity();
  bool started_inside = true;
  for (const auto& pl : piece.planes) {
    if (pl.normal.squaredNorm() == 0.0) continue;
    const double dist = pl.signed_distance(o);
    const double rate = pl.normal.dot(d);
    if (dist > 0.0) started_inside = false;
    if (rate == 0.0) {
      if (dist > 0.0) return std::nullopt;
      continue;
    }
    const double t = -dist / rate;
    if (rate < 0.0) t_enter = std::max(t_enter, t);
    else t_exit = std::min(t_exit, t);
    if (t_enter > t_exit) return std::nullopt;
  }
  if (started_inside) {
    // The origin is inside: the first surface point is the exit.
    return std::isfinite(t_exit) ? std::optional<double>(t_exit) : std::nullopt;
  }
  return t_enter;
}

}  // namespace graspforge

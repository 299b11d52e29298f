#include "graspforge/simlab/oracle.hpp"

#include "graspforge/error.hpp"
#include "graspforge/geometry/gjk.hpp"
#include "graspforge/sampler/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace graspforge {

void GripperModel::validate() const {
  if (!(jaw_thickness > 0.0 && jaw_width > 0.0 && finger_length > 0.0 && w_max > 0.0)) {
    throw Error("InvalidArgument", "gripper dimensions must be positive");
  }
  if (!(open_clearance >= 0.0 && lift_height >= 0.0 && entangle_overlap >= 0.0 && contact_tol > close_gap &&
        close_gap > 0.0)) {
    throw Error("InvalidArgument", "gripper tolerances out of range");
  }
}

const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::none: return "none";
    case FailureReason::approach_collision: return "approach_collision";
    case FailureReason::multi_object: return "multi_object";
    case FailureReason::no_force_closure: return "no_force_closure";
    case FailureReason::empty_close: return "empty_close";
  }
  return "none";
}

FailureReason failure_from_string(const std::string& s) {
  for (auto r : {FailureReason::none, FailureReason::approach_collision, FailureReason::multi_object,
                 FailureReason::no_force_closure, FailureReason::empty_close}) {
    if (s == to_string(r)) return r;
  }
  throw Error("InvalidArgument", "unknown failure reason " + s);
}

namespace {

Vec3 closing_axis(const GraspPose& g) { return {std::cos(g.theta), std::sin(g.theta), 0.0}; }

struct Body {
  const ConvexPiece* piece;
  Aabb bounds;
  int owner;  // cable id, or -2 for the bin
};

std::vector<Body> bodies_of(const Scene& scene, int skip_owner = -100) {
  std::vector<Body> out;
  for (const auto& p : scene.bin_pieces) out.push_back({&p, p.bounds(), -2});
  for (const auto& c : scene.cables) {
    if (c.id == skip_owner) continue;
    for (std::size_t i = 0; i < c.pieces.size(); ++i) out.push_back({&c.pieces[i], c.piece_bounds[i], c.id});
  }
  return out;
}

DistanceResult distance(const ConvexPiece& a, const Vec3& offset, const ConvexPiece& b) {
  Pose3 pose;
  pose.translation = offset;
  return gjk(PosedPieceSupport{&a, pose}, PosedPieceSupport{&b, {}}, a.vertices.front() + offset - b.vertices.front());
}

Aabb shifted(const Aabb& b, const Vec3& d) { return {b.lo + d, b.hi + d}; }

// How far `moving` can translate along unit `dir` (up to max_travel) before
// coming within `gap` of an obstacle. Conservative advancement: each step is
// bounded by the gap along the closest pair's separating direction.
double free_travel(const std::vector<ConvexPiece>& moving, const Vec3& dir, double max_travel,
                   const std::vector<Body>& obstacles, double gap) {
  Aabb all;
  for (const auto& p : moving) all.extend(p.bounds());
  Aabb swept = all;
  swept.extend(shifted(all, dir * max_travel));
  std::vector<const Body*> near;
  for (const auto& b : obstacles) {
    if (swept.inflated(gap).overlaps(b.bounds)) near.push_back(&b);
  }
  std::vector<Aabb> piece_bounds;
  for (const auto& p : moving) piece_bounds.push_back(p.bounds());
  double travel = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    double step = max_travel - travel;
    const Vec3 offset = dir * travel;
    for (std::size_t i = 0; i < moving.size() && step > 0.0; ++i) {
      Aabb sw = shifted(piece_bounds[i], offset);
      sw.extend(shifted(piece_bounds[i], dir * max_travel));
      for (const Body* b : near) {
        if (!sw.inflated(gap).overlaps(b->bounds)) continue;
        const auto r = distance(moving[i], offset, *b->piece);
        if (r.distance <= gap) return travel;
        const double approach = (r.point_b - r.point_a).dot(dir) / r.distance;
        if (approach > 1e-12) step = std::min(step, (r.distance - gap) / approach);
      }
    }
    if (step <= 1e-9) return travel;
    travel = std::min(max_travel, travel + step);
    if (travel >= max_travel) return max_travel;
  }
  return travel;
}

// Bodies within tol of `piece` moved by `offset`, with the closest point on each owner.
struct Touch {
  int owner;
  Vec3 point;  // on the obstacle
  double distance;
};

std::vector<Touch> touching(const ConvexPiece& piece, const Vec3& offset, const std::vector<Body>& obstacles,
                            double tol) {
  std::vector<Touch> out;
  const Aabb box = shifted(piece.bounds(), offset).inflated(tol);
  for (const auto& b : obstacles) {
    if (!box.overlaps(b.bounds)) continue;
    const auto r = distance(piece, offset, *b.piece);
    if (r.distance > tol) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const Touch& t) { return t.owner == b.owner; });
    if (it == out.end()) {
      out.push_back({b.owner, r.point_b, r.distance});
    } else if (r.distance < it->distance) {
      it->point = r.point_b;
      it->distance = r.distance;
    }
  }
  return out;
}

}  // namespace

ConvexPiece jaw_box(const GraspPose& g, const GripperModel& gripper, int side, double opening, double top) {
  const Vec3 a = closing_axis(g);
  const Vec3 b(-a.y(), a.x(), 0.0);
  const Vec3 center(g.x, g.y, 0.0);
  const double inner = 0.5 * opening, outer = inner + gripper.jaw_thickness;
  std::vector<Vec3> corners;
  for (double s : {inner, outer}) {
    for (double l : {-0.5 * gripper.jaw_width, 0.5 * gripper.jaw_width}) {
      for (double z : {g.z, top}) corners.push_back(center + side * s * a + l * b + Vec3(0, 0, z));
    }
  }
  return convex_hull(corners);
}

Vec3 tube_normal(const PlacedCable& cable, const Vec3& point, const Vec3& toward_jaw) {
  const auto& line = cable.model->centerline;
  double best = std::numeric_limits<double>::infinity();
  Vec3 tangent = Vec3::UnitX();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec3 p = cable.pose.apply(line[i]), q = cable.pose.apply(line[i + 1]);
    const Vec3 d = q - p;
    const double t = std::clamp((point - p).dot(d) / d.squaredNorm(), 0.0, 1.0);
    const double dist = (point - (p + t * d)).squaredNorm();
    if (dist < best) {
      best = dist;
      tangent = d.normalized();
    }
  }
  const Vec3 n = toward_jaw - toward_jaw.dot(tangent) * tangent;
  const double len = n.norm();
  return len > 1e-12 ? Vec3(n / len) : Vec3(tangent.cross(Vec3::UnitZ()).normalized());
}

GraspOutcome execute_grasp(const Scene& scene, const GraspPose& g, const GripperModel& gripper, double f) {
  gripper.validate();
  if (!(f > 0.0)) throw Error("InvalidArgument", "friction must be positive");
  GraspOutcome out;
  const std::vector<Body> all = bodies_of(scene);
  const double w_open = g.w + gripper.open_clearance;
  double scene_top = scene.bin.wall_height;
  for (const auto& c : scene.cables) scene_top = std::max(scene_top, c.bounds.hi.z());
  const double sweep_top = scene_top + gripper.finger_length + 10.0;

  // 1. Approach.
  for (int side : {-1, 1}) {
    const ConvexPiece swept = jaw_box(g, gripper, side, w_open, sweep_top);
    if (!touching(swept, Vec3::Zero(), all, 1e-6).empty()) {
      out.reason = FailureReason::approach_collision;
      return out;
    }
  }

  // 2. Close.
  const Vec3 a = closing_axis(g);
  const double top = g.z + gripper.finger_length;
  std::vector<std::vector<Touch>> touches(2);
  double travel_sum = 0.0;
  for (int k = 0; k < 2; ++k) {
    const int side = k == 0 ? -1 : 1;
    const Vec3 dir = -side * a;
    const std::vector<ConvexPiece> jaw{jaw_box(g, gripper, side, w_open, top)};
    const double t = free_travel(jaw, dir, w_open, all, gripper.close_gap);
    travel_sum += t;
    if (t < w_open) touches[k] = touching(jaw[0], dir * t, all, gripper.contact_tol);
  }
  out.closed_width = std::max(0.0, w_open - travel_sum);
  std::set<int> ids;
  for (const auto& side : touches) {
    for (const auto& t : side) {
      if (t.owner >= 0) ids.insert(t.owner);
    }
  }
  out.contacted_ids.assign(ids.begin(), ids.end());
  if (ids.empty()) {
    out.reason = FailureReason::empty_close;
    return out;
  }
  if (ids.size() >= 2) {
    out.reason = FailureReason::multi_object;
    return out;
  }
  const int target = *ids.begin();
  const Touch* contact[2] = {nullptr, nullptr};
  for (int k = 0; k < 2; ++k) {
    for (const auto& t : touches[k]) {
      if (t.owner == target) contact[k] = &t;
    }
  }
  if (!contact[0] || !contact[1]) {
    out.reason = FailureReason::no_force_closure;
    return out;
  }

  // 3. Hold: jaw k pushes along -side * a, so g1 = +a at the first contact and g2 = -a at the second.
  const PlacedCable& cable = *scene.find(target);
  const Vec3 n1 = tube_normal(cable, contact[0]->point, -a);
  const Vec3 n2 = tube_normal(cable, contact[1]->point, a);
  const double cone = std::atan(f);
  const double a1 = std::acos(std::clamp(n1.dot(-a), -1.0, 1.0));
  const double a2 = std::acos(std::clamp(n2.dot(a), -1.0, 1.0));
  if (!(a1 < cone && a2 < cone)) {
    out.reason = FailureReason::no_force_closure;
    return out;
  }

  // 4. Lift.
  for (const auto& other : scene.cables) {
    if (other.id == target || !other.bounds.overlaps_xy(cable.bounds)) continue;
    std::vector<Body> blockers;
    for (std::size_t i = 0; i < other.pieces.size(); ++i) blockers.push_back({&other.pieces[i], other.piece_bounds[i], other.id});
    const double t = free_travel(cable.pieces, Vec3::UnitZ(), gripper.lift_height, blockers, gripper.close_gap);
    if (gripper.lift_height - t > gripper.entangle_overlap) ids.insert(other.id);
  }
  if (ids.size() >= 2) {
    out.contacted_ids.assign(ids.begin(), ids.end());
    out.reason = FailureReason::multi_object;
    return out;
  }
  out.label = 1;
  out.reason = FailureReason::none;
  return out;
}

}  // namespace graspforge

#include "graspforge/scene/scene.hpp"

#include "graspforge/error.hpp"
#include "graspforge/geometry/gjk.hpp"
#include "graspforge/io.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace graspforge {

namespace {

constexpr std::uint64_t kSettleStream = 1;

struct BoxDesc {
  Vec3 lo, hi;
};

std::vector<BoxDesc> bin_boxes(const BinSpec& bin) {
  const double hx = 0.5 * bin.inner_x, hy = 0.5 * bin.inner_y, t = bin.wall_thickness;
  return {
      {{-hx - t, -hy - t, -bin.floor_thickness}, {hx + t, hy + t, 0.0}},
      {{hx, -hy - t, 0.0}, {hx + t, hy + t, bin.wall_height}},
      {{-hx - t, -hy - t, 0.0}, {-hx, hy + t, bin.wall_height}},
      {{-hx, hy, 0.0}, {hx, hy + t, bin.wall_height}},
      {{-hx, -hy - t, 0.0}, {hx, -hy, bin.wall_height}},
  };
}

}  // namespace

std::vector<ConvexPiece> bin_pieces(const BinSpec& bin) {
  std::vector<ConvexPiece> out;
  for (const auto& b : bin_boxes(bin)) {
    std::vector<Vec3> corners;
    for (int i = 0; i < 8; ++i) {
      corners.emplace_back(i & 1 ? b.hi.x() : b.lo.x(), i & 2 ? b.hi.y() : b.lo.y(), i & 4 ? b.hi.z() : b.lo.z());
    }
    out.push_back(convex_hull(corners));
  }
  return out;
}

TriMesh bin_mesh(const BinSpec& bin) {
  TriMesh out;
  for (const auto& b : bin_boxes(bin)) {
    const TriMesh box = make_box(0.5 * (b.hi - b.lo), 0.5 * (b.hi + b.lo));
    const int base = static_cast<int>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), box.vertices.begin(), box.vertices.end());
    for (const auto& f : box.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
  return out;
}

PlacedCable PlacedCable::make(int id, CableModelPtr model, const Pose3& pose) {
  PlacedCable c;
  c.id = id;
  c.pose = pose;
  for (const auto& piece : model->decomposition.pieces) {
    c.pieces.push_back(transformed(piece, pose));
    c.piece_bounds.push_back(c.pieces.back().bounds());
    c.bounds.extend(c.piece_bounds.back());
  }
  c.model = std::move(model);
  return c;
}

const PlacedCable* Scene::find(int id) const {
  for (const auto& c : cables) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

Scene Scene::subset(const std::vector<int>& ids) const {
  Scene out;
  out.bin = bin;
  out.seed = seed;
  out.bin_pieces = bin_pieces;
  for (const auto& c : cables) {
    if (std::find(ids.begin(), ids.end(), c.id) != ids.end()) out.cables.push_back(c);
  }
  return out;
}

namespace {

struct Obstacle {
  const ConvexPiece* piece;
  Aabb bounds;
};

// Everything a falling cable can rest on.
std::vector<Obstacle> obstacles_of(const Scene& scene) {
  std::vector<Obstacle> out;
  for (const auto& p : scene.bin_pieces) out.push_back({&p, p.bounds()});
  for (const auto& c : scene.cables) {
    for (std::size_t i = 0; i < c.pieces.size(); ++i) out.push_back({&c.pieces[i], c.piece_bounds[i]});
  }
  return out;
}

void shift_z(PlacedCable& c, double dz) {
  const Vec3 d(0, 0, dz);
  c.pose.translation += d;
  for (auto& piece : c.pieces) {
    for (auto& v : piece.vertices) v += d;
    for (auto& pl : piece.planes) pl.offset += pl.normal.z() * dz;
  }
  for (auto& b : c.piece_bounds) {
    b.lo += d;
    b.hi += d;
  }
  c.bounds.lo += d;
  c.bounds.hi += d;
}

// Conservative advancement straight down: each step moves the cable to the
// separating plane of the closest pair, which it cannot cross without contact.
void drop(PlacedCable& c, const std::vector<Obstacle>& obstacles, double gap) {
  for (int iter = 0; iter < 200; ++iter) {
    double step = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.pieces.size() && step > 0.0; ++i) {
      for (const auto& ob : obstacles) {
        if (!c.piece_bounds[i].overlaps_xy(ob.bounds) || ob.bounds.lo.z() > c.piece_bounds[i].hi.z()) continue;
        const auto r = gjk(PosedPieceSupport{&c.pieces[i], {}}, PosedPieceSupport{ob.piece, {}},
                           c.pieces[i].vertices.front() - ob.piece->vertices.front());
        if (r.distance <= gap) {
          step = 0.0;
          break;
        }
        const Vec3 n = (r.point_a - r.point_b) / r.distance;
        if (n.z() > 1e-12) step = std::min(step, r.distance / n.z());
      }
    }
    const double move = step - gap;
    if (!(move > 1e-7)) return;
    if (!std::isfinite(move)) return;  // nothing below; cannot happen above the floor
    shift_z(c, -move);
  }
}

struct Support {
  double distance = 0.0;   // COM xy to the support hull; 0 when supported
  Vec2 nearest = Vec2::Zero();  // closest hull point
  double pivot_z = 0.0;
};

// Nearest point of the convex hull of pts to p (p itself when inside).
Vec2 nearest_on_hull_2d(const Vec2& p, std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> h;
  if (pts.size() >= 3) {
    h.resize(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
      h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
      while (k >= t && cross(h[k - 2], h[k - 1], pts[i - 1]) <= 0) --k;
      h[k++] = pts[i - 1];
    }
    h.resize(k - 1);
  } else {
    h = pts;
  }
  if (h.size() >= 3) {
    bool inside = true;
    for (std::size_t i = 0; i < h.size(); ++i) inside &= cross(h[i], h[(i + 1) % h.size()], p) >= 0.0;
    if (inside) return p;
  }
  Vec2 best = h[0];
  const std::size_t edges = h.size() == 1 ? 0 : (h.size() == 2 ? 1 : h.size());
  for (std::size_t i = 0; i < edges; ++i) {
    const Vec2 &a = h[i], &b = h[(i + 1) % h.size()];
    const Vec2 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const Vec2 q = a + t * ab;
    if ((p - q).squaredNorm() < (p - best).squaredNorm()) best = q;
  }
  return best;
}

// Contact points are floor-touching vertices plus closest points to every
// obstacle piece within contact_tol.
Support support_of(const PlacedCable& c, const std::vector<Obstacle>& obstacles, double contact_tol) {
  std::vector<Vec2> contacts;
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.pieces.size(); ++i) {
    for (const auto& v : c.pieces[i].vertices) {
      if (v.z() <= contact_tol) {
        contacts.emplace_back(v.x(), v.y());
        lowest = std::min(lowest, v.z());
      }
    }
    for (const auto& ob : obstacles) {
      if (!c.piece_bounds[i].inflated(contact_tol).overlaps(ob.bounds)) continue;
      const auto r = gjk(PosedPieceSupport{&c.pieces[i], {}}, PosedPieceSupport{ob.piece, {}},
                         c.pieces[i].vertices.front() - ob.piece->vertices.front());
      if (r.distance <= contact_tol) {
        contacts.emplace_back(r.point_a.x(), r.point_a.y());
        lowest = std::min(lowest, r.point_a.z());
      }
    }
  }
  const Vec3 com = c.center_of_mass();
  Support s;
  if (contacts.empty()) {
    s.distance = std::numeric_limits<double>::infinity();
    return s;
  }
  const Vec2 p(com.x(), com.y());
  s.nearest = nearest_on_hull_2d(p, contacts);
  s.distance = (p - s.nearest).norm();
  s.pivot_z = lowest;
  return s;
}

bool inside_footprint(const Aabb& b, const BinSpec& bin) {
  const double hx = 0.5 * bin.inner_x, hy = 0.5 * bin.inner_y;
  return b.lo.x() >= -hx && b.hi.x() <= hx && b.lo.y() >= -hy && b.hi.y() <= hy;
}

double top_of(const Scene& scene) {
  double top = 0.0;
  for (const auto& c : scene.cables) top = std::max(top, c.bounds.hi.z());
  return top;
}

// Rotation by q about `pivot`, applied after the current pose.
PlacedCable rotated_about(const PlacedCable& c, const Quat& q, const Vec3& pivot) {
  Pose3 pose;
  pose.rotation = (q * c.pose.rotation).normalized();
  pose.translation = pivot + q * (c.pose.translation - pivot);
  return PlacedCable::make(c.id, c.model, pose);
}

class Settler {
 public:
  Settler(const BinSpec& bin, const SettleOptions& options, const std::vector<Obstacle>& obstacles,
          double start_floor)
      : bin_(bin), options_(options), obstacles_(obstacles), start_floor_(start_floor) {}

  // Lifts a candidate above the pile and drops it; false when it leaves the bin footprint.
  bool redrop(PlacedCable& c) const {
    if (!inside_footprint(c.bounds, bin_)) return false;
    shift_z(c, start_floor_ - c.bounds.lo.z());
    drop(c, obstacles_, options_.rest_gap);
    return true;
  }

  // Quasi-static toppling: while the center of mass overhangs its support,
  // rotate about the nearest support point so the center of mass goes down.
  void topple(PlacedCable& c) const {
    double step = 10.0 * M_PI / 180.0;
    for (int iter = 0; iter < 60 && step > 0.5 * M_PI / 180.0; ++iter) {
      const Support s = support_of(c, obstacles_, options_.contact_tol);
      const Vec3 com = c.center_of_mass();
      const Vec2 out = Vec2(com.x(), com.y()) - s.nearest;
      if (s.distance <= 1e-6 || !std::isfinite(s.distance)) return;
      const Vec3 pivot(s.nearest.x(), s.nearest.y(), s.pivot_z);
      // Axis chosen so the overhanging side moves down.
      const Vec3 axis = Vec3(out.x(), out.y(), 0.0).normalized().cross(Vec3::UnitZ());
      PlacedCable t = rotated_about(c, Quat(Eigen::AngleAxisd(-step, axis)), pivot);
      if (redrop(t) && t.center_of_mass().z() < com.z() - 1e-6) {
        c = std::move(t);
      } else {
        step *= 0.5;
      }
    }
  }

  // Random tilts about the center of mass, each followed by a random slide
  // (xy shift plus small yaw); every move is kept when it lowers the center
  // of mass.
  void tilt(PlacedCable& c, Rng& rng) const {
    const double max_tilt = options_.max_tilt_deg * M_PI / 180.0;
    const double reach = 2.0 * c.model->spec.radius;
    for (int k = 0; k < options_.tilts_per_pass; ++k) {
      const double axis_angle = uniform(rng, 0.0, 2.0 * M_PI);
      const double angle = uniform(rng, -max_tilt, max_tilt);
      const Quat q(Eigen::AngleAxisd(angle, Vec3(std::cos(axis_angle), std::sin(axis_angle), 0.0)));
      try_move(c, rotated_about(c, q, c.center_of_mass()));

      const double dir = uniform(rng, 0.0, 2.0 * M_PI), dist = uniform(rng, 0.0, reach);
      const double yaw = uniform(rng, -max_tilt, max_tilt);
      const Vec3 com = c.center_of_mass();
      PlacedCable slid = rotated_about(c, Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), com);
      Pose3 pose = slid.pose;
      pose.translation += dist * Vec3(std::cos(dir), std::sin(dir), 0.0);
      try_move(c, PlacedCable::make(c.id, c.model, pose));
    }
  }

  void try_move(PlacedCable& c, PlacedCable t) const {
    if (redrop(t) && t.center_of_mass().z() < c.center_of_mass().z() - 1e-6) c = std::move(t);
  }

  bool stable(const PlacedCable& c) const {
    return support_of(c, obstacles_, options_.contact_tol).distance <= c.model->spec.radius;
  }

 private:
  const BinSpec& bin_;
  const SettleOptions& options_;
  const std::vector<Obstacle>& obstacles_;
  double start_floor_;
};

}  // namespace

Scene settle_scene(const BinSpec& bin, const std::vector<CableModelPtr>& cables, std::uint64_t seed,
                   const SettleOptions& options) {
  if (cables.empty() || cables.size() > 30) throw Error("InvalidSpec", "cable count must be in [1, 30]");
  Rng rng(derive_seed(seed, kSettleStream));
  Scene scene;
  scene.bin = bin;
  scene.seed = seed;
  scene.bin_pieces = bin_pieces(bin);
  const double margin = 0.5;
  const double hx = 0.5 * bin.inner_x, hy = 0.5 * bin.inner_y;

  for (std::size_t idx = 0; idx < cables.size(); ++idx) {
    const CableModelPtr& model = cables[idx];
    const auto obstacles = obstacles_of(scene);
    const Settler settler(bin, options, obstacles, top_of(scene) + 1.0);
    bool placed = false;
    for (int attempt = 0; attempt < options.max_attempts && !placed; ++attempt) {
      const double yaw = uniform(rng, 0.0, 2.0 * M_PI);
      const bool flip = uniform_int(rng, 0, 1) == 1;
      Pose3 pose;
      pose.rotation = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
      if (flip) pose.rotation = pose.rotation * Quat(Eigen::AngleAxisd(M_PI, Vec3::UnitX()));
      const Aabb b = PlacedCable::make(static_cast<int>(idx), model, pose).bounds;
      const double x_lo = -hx + margin - b.lo.x(), x_hi = hx - margin - b.hi.x();
      const double y_lo = -hy + margin - b.lo.y(), y_hi = hy - margin - b.hi.y();
      if (x_lo > x_hi || y_lo > y_hi) throw Error("Overfilled", "cable footprint exceeds the bin");
      pose.translation = Vec3(uniform(rng, x_lo, x_hi), uniform(rng, y_lo, y_hi), 0.0);
      PlacedCable c = PlacedCable::make(static_cast<int>(idx), model, pose);
      settler.redrop(c);
      settler.topple(c);
      for (int pass = 0; pass < options.tilt_passes; ++pass) {
        settler.tilt(c, rng);
        settler.topple(c);
      }
      if (c.bounds.hi.z() > bin.wall_height || !settler.stable(c)) continue;
      // Incremental moves leave rounding in the piece vertices; keep the
      // geometry a reload from the pose would produce.
      scene.cables.push_back(PlacedCable::make(c.id, c.model, c.pose));
      placed = true;
    }
    if (!placed) {
      throw Error("Overfilled", fmt::format("cable {} could not be placed after {} attempts", idx,
                                            options.max_attempts));
    }
  }
  return scene;
}

double clearance(const Scene& scene, const PlacedCable& cable) {
  double best = std::numeric_limits<double>::infinity();
  auto check = [&](const ConvexPiece& a, const ConvexPiece& b) {
    best = std::min(best, gjk_distance(a, {}, b, {}).distance);
  };
  for (const auto& a : cable.pieces) {
    for (const auto& b : scene.bin_pieces) check(a, b);
    for (const auto& other : scene.cables) {
      if (other.id == cable.id) continue;
      for (const auto& b : other.pieces) check(a, b);
    }
  }
  return best;
}

namespace {

nlohmann::json spec_json(const CableSpec& s) {
  return {{"segment_count", s.segment_count}, {"segment_length", s.segment_length}, {"radius", s.radius},
          {"bend_min_deg", s.bend_min_deg},   {"bend_max_deg", s.bend_max_deg},     {"tube_sides", s.tube_sides}};
}

CableSpec spec_from_json(const nlohmann::json& j) {
  CableSpec s;
  s.segment_count = j.at("segment_count").get<int>();
  s.segment_length = j.at("segment_length").get<double>();
  s.radius = j.at("radius").get<double>();
  s.bend_min_deg = j.at("bend_min_deg").get<double>();
  s.bend_max_deg = j.at("bend_max_deg").get<double>();
  s.tube_sides = j.at("tube_sides").get<int>();
  return s;
}

}  // namespace

void write_scene(const Scene& scene, const std::filesystem::path& manifest_path) {
  const auto dir = manifest_path.has_parent_path() ? manifest_path.parent_path() : std::filesystem::path(".");
  nlohmann::json j;
  j["seed"] = scene.seed;
  j["bin"] = {{"inner_x", scene.bin.inner_x},
              {"inner_y", scene.bin.inner_y},
              {"wall_height", scene.bin.wall_height},
              {"wall_thickness", scene.bin.wall_thickness},
              {"floor_thickness", scene.bin.floor_thickness}};
  std::map<int, CableModelPtr> models;
  for (const auto& c : scene.cables) models.emplace(c.model->model_id, c.model);
  j["models"] = nlohmann::json::array();
  for (const auto& [id, m] : models) {
    const std::string file = fmt::format("model_{}.obj", id);
    std::ostringstream obj;
    write_obj(obj, m->mesh);
    write_file_atomic(dir / file, obj.str());
    j["models"].push_back({{"model_id", id}, {"seed", m->seed}, {"spec", spec_json(m->spec)}, {"mesh", file}});
  }
  j["cables"] = nlohmann::json::array();
  for (const auto& c : scene.cables) {
    const Quat& q = c.pose.rotation;
    j["cables"].push_back({{"id", c.id},
                           {"model_id", c.model->model_id},
                           {"translation", {c.pose.translation.x(), c.pose.translation.y(), c.pose.translation.z()}},
                           {"rotation", {q.w(), q.x(), q.y(), q.z()}}});
  }
  write_file_atomic(manifest_path, j.dump(2) + "\n");
}

Scene read_scene(const std::filesystem::path& manifest_path, const DecomposeOptions& decompose_options,
                 ModelCache* cache) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("IoError", fmt::format("bad scene manifest {}: {}", manifest_path.string(), e.what()));
  }
  const auto dir = manifest_path.has_parent_path() ? manifest_path.parent_path() : std::filesystem::path(".");
  Scene scene;
  scene.seed = j.at("seed").get<std::uint64_t>();
  const auto& b = j.at("bin");
  scene.bin = {b.at("inner_x").get<double>(), b.at("inner_y").get<double>(), b.at("wall_height").get<double>(),
               b.at("wall_thickness").get<double>(), b.at("floor_thickness").get<double>()};
  scene.bin_pieces = bin_pieces(scene.bin);
  std::map<int, CableModelPtr> models;
  for (const auto& m : j.at("models")) {
    // Models are rebuilt from their seed so the reloaded geometry is bit-identical;
    // the OBJ is only checked for presence.
    const auto mesh_path = dir / m.at("mesh").get<std::string>();
    if (!std::filesystem::exists(mesh_path)) throw Error("MeshNotFound", mesh_path.string());
    const std::string key = fmt::format("{}/{}/{}/{}/{}/{}", m.at("model_id").dump(), m.at("seed").dump(),
                                        m.at("spec").dump(), decompose_options.concavity_tol,
                                        decompose_options.max_pieces, decompose_options.cell_size);
    CableModelPtr model;
    if (cache && cache->count(key)) {
      model = cache->at(key);
    } else {
      model = build_cable_model(spec_from_json(m.at("spec")), m.at("model_id").get<int>(),
                                m.at("seed").get<std::uint64_t>(), decompose_options);
      if (cache) (*cache)[key] = model;
    }
    models[model->model_id] = model;
  }
  for (const auto& c : j.at("cables")) {
    Pose3 pose;
    const auto& t = c.at("translation");
    const auto& q = c.at("rotation");
    pose.translation = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
    pose.rotation = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
    pose.validate();
    auto it = models.find(c.at("model_id").get<int>());
    if (it == models.end()) throw Error("IoError", "scene references an unknown model");
    scene.cables.push_back(PlacedCable::make(c.at("id").get<int>(), it->second, pose));
  }
  return scene;
}

}  // namespace graspforge

#include "graspforge/error.hpp"
#include "graspforge/geometry/gjk.hpp"
#include "graspforge/geometry/voxel.hpp"
#include "graspforge/scene/render.hpp"
#include "graspforge/scene/scene.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace graspforge;

namespace {

template <class F>
std::string error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "";
}

const std::vector<CableModelPtr>& library() {
  static const auto lib = build_cable_library(CableSpec{}, 6, 1234, DecomposeOptions{});
  return lib;
}

std::vector<CableModelPtr> pick(int n) {
  std::vector<CableModelPtr> out;
  for (int i = 0; i < n; ++i) out.push_back(library()[i % library().size()]);
  return out;
}

// Highest surface point of the mesh under (x, y), by brute force over all triangles.
std::optional<double> top_surface(const TriMesh& mesh, double x, double y) {
  std::optional<double> best;
  for (const auto& f : mesh.faces) {
    const Vec3 &a = mesh.vertices[f[0]], &b = mesh.vertices[f[1]], &c = mesh.vertices[f[2]];
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (std::abs(det) < 1e-12) continue;
    const double l1 = ((x - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (y - a.y())) / det;
    const double l2 = ((b.x() - a.x()) * (y - a.y()) - (x - a.x()) * (b.y() - a.y())) / det;
    if (l1 < -1e-9 || l2 < -1e-9 || l1 + l2 > 1 + 1e-9) continue;
    const double z = a.z() + l1 * (b.z() - a.z()) + l2 * (c.z() - a.z());
    if (!best || z > *best) best = z;
  }
  return best;
}

}  // namespace

TEST(Cable, VolumeMatchesPrismOracle) {
  CableSpec spec;
  Rng rng(5);
  const TriMesh mesh = make_cable_mesh(spec, rng);
  mesh.validate();
  // Mitered joints cancel, so the volume is the cross-section area times the centerline length.
  const int n = spec.tube_sides;
  const double area = 0.5 * n * spec.radius * spec.radius * std::sin(2 * M_PI / n);
  EXPECT_NEAR(mesh.volume(), area * spec.segment_count * spec.segment_length, 1e-6 * mesh.volume());
  EXPECT_NEAR(mesh.volume(), M_PI * spec.radius * spec.radius * spec.segment_count * spec.segment_length,
              0.03 * mesh.volume());
}

TEST(Cable, Watertight) {
  Rng rng(6);
  const TriMesh mesh = make_cable_mesh(CableSpec{}, rng);
  EXPECT_NO_THROW(voxelize(mesh, 1.0));
}

TEST(Cable, CenteredAndPlanar) {
  Rng rng(7);
  const CableShape shape = make_cable(CableSpec{}, rng);
  Vec3 mid = Vec3::Zero();
  for (std::size_t i = 0; i + 1 < shape.centerline.size(); ++i) {
    mid += 0.5 * (shape.centerline[i] + shape.centerline[i + 1]);
    EXPECT_NEAR((shape.centerline[i + 1] - shape.centerline[i]).norm(), 18.0, 1e-9);
  }
  EXPECT_LT(mid.norm(), 1e-9);
  for (const auto& p : shape.centerline) EXPECT_EQ(p.z(), 0.0);
}

TEST(Cable, BendsWithinRange) {
  CableSpec spec;
  spec.bend_min_deg = 20.0;
  spec.bend_max_deg = 30.0;
  Rng rng(8);
  const auto pts = make_cable(spec, rng).centerline;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const Vec3 a = (pts[i] - pts[i - 1]).normalized(), b = (pts[i + 1] - pts[i]).normalized();
    const double deg = std::acos(std::clamp(a.dot(b), -1.0, 1.0)) * 180.0 / M_PI;
    EXPECT_GE(deg, 20.0 - 1e-6);
    EXPECT_LE(deg, 30.0 + 1e-6);
  }
}

TEST(Cable, Deterministic) {
  Rng a(11), b(11);
  EXPECT_EQ(make_cable_mesh(CableSpec{}, a).vertices, make_cable_mesh(CableSpec{}, b).vertices);
}

TEST(Cable, InvalidSpec) {
  CableSpec spec;
  spec.bend_max_deg = 95.0;
  Rng rng(1);
  EXPECT_EQ(error_kind([&] { make_cable(spec, rng); }), "InvalidSpec");
  spec = CableSpec{};
  spec.radius = 0.0;
  EXPECT_EQ(error_kind([&] { make_cable(spec, rng); }), "InvalidSpec");
}

TEST(Cable, SelfIntersectingAfterRetries) {
  CableSpec spec;
  spec.segment_count = 150;
  spec.bend_min_deg = 85.0;
  spec.bend_max_deg = 89.0;
  Rng rng(3);
  EXPECT_EQ(error_kind([&] { make_cable(spec, rng); }), "SelfIntersecting");
}

TEST(Cable, LibraryIndependentOfJobs) {
  const auto a = build_cable_library(CableSpec{}, 3, 77, DecomposeOptions{}, 1);
  const auto b = build_cable_library(CableSpec{}, 3, 77, DecomposeOptions{}, 3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i]->mesh.vertices, b[i]->mesh.vertices);
    EXPECT_EQ(a[i]->decomposition.pieces.size(), b[i]->decomposition.pieces.size());
  }
}

TEST(Bin, PiecesEncloseInterior) {
  const BinSpec bin;
  const auto pieces = bin_pieces(bin);
  ASSERT_EQ(pieces.size(), 5u);
  EXPECT_NEAR(pieces[0].bounds().hi.z(), 0.0, 1e-12);
  double volume = 0.0;
  for (const auto& p : pieces) volume += p.volume();
  const double outer = (bin.inner_x + 10) * (bin.inner_y + 10);
  const double expected = outer * 5 + (outer - bin.inner_x * bin.inner_y) * bin.wall_height;
  EXPECT_NEAR(volume, expected, 1e-6 * expected);
  EXPECT_NEAR(bin_mesh(bin).volume(), expected, 1e-6 * expected);
}

TEST(Settle, SingleCableRestsOnFloor) {
  const Scene scene = settle_scene(BinSpec{}, pick(1), 21);
  ASSERT_EQ(scene.cables.size(), 1u);
  const auto& c = scene.cables[0];
  EXPECT_GE(c.bounds.lo.z(), -1e-9);
  EXPECT_LE(c.bounds.lo.z(), 0.1);
  // A flat cable lying on the floor has its top one diameter up.
  EXPECT_NEAR(c.bounds.hi.z(), 2 * c.model->spec.radius, 0.5);
  EXPECT_GT(clearance(scene, c), 0.0);
}

TEST(Settle, PileHasNoInterpenetration) {
  const Scene scene = settle_scene(BinSpec{}, pick(10), 22);
  ASSERT_EQ(scene.cables.size(), 10u);
  const BinSpec bin;
  for (const auto& c : scene.cables) {
    EXPECT_GT(clearance(scene, c), 0.0) << "cable " << c.id;
    EXPECT_LE(c.bounds.hi.z(), bin.wall_height);
    EXPECT_GE(c.bounds.lo.x(), -0.5 * bin.inner_x);
    EXPECT_LE(c.bounds.hi.x(), 0.5 * bin.inner_x);
    EXPECT_GE(c.bounds.lo.y(), -0.5 * bin.inner_y);
    EXPECT_LE(c.bounds.hi.y(), 0.5 * bin.inner_y);
  }
}

TEST(Settle, CablesRestOnSomething) {
  const Scene scene = settle_scene(BinSpec{}, pick(8), 23);
  for (const auto& c : scene.cables) EXPECT_LT(clearance(scene, c), 0.06) << "cable " << c.id;
}

TEST(Settle, Deterministic) {
  const Scene a = settle_scene(BinSpec{}, pick(5), 24);
  const Scene b = settle_scene(BinSpec{}, pick(5), 24);
  ASSERT_EQ(a.cables.size(), b.cables.size());
  for (std::size_t i = 0; i < a.cables.size(); ++i) {
    EXPECT_EQ(a.cables[i].pose.translation, b.cables[i].pose.translation);
    EXPECT_EQ(a.cables[i].pose.rotation.coeffs(), b.cables[i].pose.rotation.coeffs());
  }
}

TEST(Settle, Overfilled) {
  BinSpec tiny;
  tiny.inner_x = 30;
  tiny.inner_y = 30;
  EXPECT_EQ(error_kind([&] { settle_scene(tiny, pick(2), 1); }), "Overfilled");
  EXPECT_EQ(error_kind([&] { settle_scene(BinSpec{}, {}, 1); }), "InvalidSpec");
}

TEST(SceneIo, RoundTrip) {
  const Scene scene = settle_scene(BinSpec{}, pick(3), 25);
  const auto dir = std::filesystem::temp_directory_path() / "graspforge_scene_test";
  std::filesystem::remove_all(dir);
  write_scene(scene, dir / "scene.json");
  EXPECT_TRUE(std::filesystem::exists(dir / "model_0.obj"));
  const Scene back = read_scene(dir / "scene.json", DecomposeOptions{});
  ASSERT_EQ(back.cables.size(), 3u);
  EXPECT_EQ(back.seed, 25u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.cables[i].id, scene.cables[i].id);
    EXPECT_EQ(back.cables[i].pose.translation, scene.cables[i].pose.translation);
    EXPECT_EQ(back.cables[i].pose.rotation.coeffs(), scene.cables[i].pose.rotation.coeffs());
    // Reloaded geometry is bit-identical, so oracle outcomes replay exactly.
    ASSERT_EQ(back.cables[i].pieces.size(), scene.cables[i].pieces.size());
    for (std::size_t k = 0; k < scene.cables[i].pieces.size(); ++k) {
      EXPECT_EQ(back.cables[i].pieces[k].vertices, scene.cables[i].pieces[k].vertices);
    }
  }
  std::filesystem::remove(dir / "model_0.obj");
  EXPECT_EQ(error_kind([&] { read_scene(dir / "scene.json", DecomposeOptions{}); }), "MeshNotFound");
  EXPECT_EQ(error_kind([&] { read_scene(dir / "missing.json", DecomposeOptions{}); }), "IoError");
  std::filesystem::remove_all(dir);
}

TEST(Render, EmptyBin) {
  Scene scene;
  scene.bin_pieces = bin_pieces(scene.bin);
  Camera cam;
  cam.width = 460;  // 230 mm: bin plus a margin outside the walls
  cam.height_px = 340;
  const Rendering r = render_depth(scene, cam);
  const auto at = [&](double x, double y) {
    const Vec2 p = cam.world_to_pixel({x, y});
    return static_cast<std::size_t>(std::floor(p.y())) * cam.width + static_cast<std::size_t>(std::floor(p.x()));
  };
  EXPECT_FLOAT_EQ(r.depth.data[at(0.1, 0.1)], 500.0f);
  EXPECT_EQ(r.ids[at(0.1, 0.1)], -2);
  EXPECT_FLOAT_EQ(r.depth.data[at(102.6, 0.1)], 460.0f);
  EXPECT_EQ(r.ids[at(102.6, 0.1)], -2);
  EXPECT_FLOAT_EQ(r.depth.data[at(112.1, 0.1)], 500.0f);
  EXPECT_EQ(r.ids[at(112.1, 0.1)], -1);
}

TEST(Render, MatchesBruteForceSurface) {
  const Scene scene = settle_scene(BinSpec{}, pick(6), 26);
  Camera cam;
  cam.pitch = 1.0;
  cam.width = 200;
  cam.height_px = 150;
  const Rendering r = render_depth(scene, cam);
  const TriMesh bin = bin_mesh(scene.bin);
  std::vector<TriMesh> meshes;
  for (const auto& c : scene.cables) meshes.push_back(c.world_mesh());
  int checked = 0;
  for (int v = 1; v < cam.height_px; v += 7) {
    for (int u = 1; u < cam.width; u += 7) {
      const Vec2 p = cam.pixel_to_world(u + 0.5, v + 0.5);
      double best = top_surface(bin, p.x(), p.y()).value_or(0.0);
      int id = -2;
      for (std::size_t k = 0; k < meshes.size(); ++k) {
        const auto z = top_surface(meshes[k], p.x(), p.y());
        if (z && *z > best) {
          best = *z;
          id = scene.cables[k].id;
        }
      }
      const std::size_t idx = static_cast<std::size_t>(v) * cam.width + u;
      EXPECT_NEAR(r.depth.data[idx], 500.0 - best, 1e-3) << u << "," << v;
      EXPECT_EQ(r.ids[idx], id) << u << "," << v;
      ++checked;
    }
  }
  EXPECT_GT(checked, 500);
}

TEST(Render, RemovingCablesNeverRaisesSurface) {
  const Scene scene = settle_scene(BinSpec{}, pick(8), 27);
  Camera cam;
  cam.pitch = 1.0;
  cam.width = 200;
  cam.height_px = 150;
  const Rendering full = render_depth(scene, cam);
  const Rendering part = render_depth(scene.subset({0, 2, 4}), cam);
  for (std::size_t k = 0; k < full.depth.data.size(); ++k) {
    EXPECT_GE(part.depth.data[k], full.depth.data[k]);
    if (part.ids[k] >= 0) EXPECT_EQ(full.ids[k] == part.ids[k], full.depth.data[k] == part.depth.data[k]);
  }
}

TEST(Render, DepthBounds) {
  const Scene scene = settle_scene(BinSpec{}, pick(4), 28);
  const Rendering r = render_depth(scene, Camera{});
  r.depth.validate();
  for (float d : r.depth.data) {
    EXPECT_GE(d, 500.0f - 40.0f - 1e-3f);
    EXPECT_LE(d, 500.0f);
  }
}

TEST(Render, CameraPixelMapping) {
  Camera cam;
  const Vec2 p = cam.pixel_to_world(0.5, 0.5);
  EXPECT_NEAR(p.x(), (0.5 - 240) * 0.5, 1e-12);
  EXPECT_NEAR(p.y(), (0.5 - 180) * 0.5, 1e-12);
  EXPECT_LT((cam.world_to_pixel(p) - Vec2(0.5, 0.5)).norm(), 1e-12);
  cam.pitch = 0;
  EXPECT_EQ(error_kind([&] { cam.validate(); }), "InvalidSpec");
}

#pragma once

#include "graspforge/geometry/decompose.hpp"
#include "graspforge/geometry/hull.hpp"
#include "graspforge/geometry/mesh.hpp"
#include "graspforge/geometry/pose.hpp"
#include "graspforge/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace graspforge {

struct CableSpec {
  int segment_count = 6;
  double segment_length = 18.0;  // mm
  double radius = 4.0;           // mm
  double bend_min_deg = 0.0;     // per-joint bend magnitude range
  double bend_max_deg = 40.0;
  int tube_sides = 16;

  /// Throws InvalidSpec.
  void validate() const;
};

struct CableShape {
  TriMesh mesh;
  std::vector<Vec3> centerline;  // joint points, mesh frame
};

/// Tube of polygonal cross-section along a planar polyline (z = 0 plane)
/// whose joints bend by a random angle in the configured range with random
/// sign. Joint rings lie on miter planes, so every segment is a convex
/// prism. The result is centered on the polyline centroid. Polylines whose
/// non-adjacent segments come closer than two radii are resampled; throws
/// SelfIntersecting after 100 tries.
CableShape make_cable(const CableSpec& spec, Rng& rng);
TriMesh make_cable_mesh(const CableSpec& spec, Rng& rng);

/// A cable shape together with its convex decomposition; shared by every
/// scene that drops this cable.
struct CableModel {
  int model_id = 0;
  std::uint64_t seed = 0;
  CableSpec spec;
  TriMesh mesh;
  std::vector<Vec3> centerline;
  DecompositionResult decomposition;
  Vec3 center_of_mass = Vec3::Zero();
};
using CableModelPtr = std::shared_ptr<const CableModel>;

CableModelPtr build_cable_model(const CableSpec& spec, int model_id, std::uint64_t seed,
                                const DecomposeOptions& decompose_options);

/// `count` models with seeds derived from `seed`; built in parallel,
/// identical for any job count.
std::vector<CableModelPtr> build_cable_library(const CableSpec& spec, int count, std::uint64_t seed,
                                               const DecomposeOptions& decompose_options, int jobs = 1);

/// Open box centered on the origin; the floor top is z = 0.
struct BinSpec {
  double inner_x = 200.0;
  double inner_y = 150.0;
  double wall_height = 40.0;
  double wall_thickness = 5.0;
  double floor_thickness = 5.0;
};

/// Floor slab and four walls as convex boxes.
std::vector<ConvexPiece> bin_pieces(const BinSpec& bin);
TriMesh bin_mesh(const BinSpec& bin);

struct PlacedCable {
  int id = 0;
  CableModelPtr model;
  Pose3 pose;
  std::vector<ConvexPiece> pieces;  // world frame
  std::vector<Aabb> piece_bounds;
  Aabb bounds;

  static PlacedCable make(int id, CableModelPtr model, const Pose3& pose);
  Vec3 center_of_mass() const { return pose.apply(model->center_of_mass); }
  TriMesh world_mesh() const { return model->mesh.transformed(pose); }
};

struct Scene {
  BinSpec bin;
  std::uint64_t seed = 0;
  std::vector<ConvexPiece> bin_pieces;
  std::vector<PlacedCable> cables;

  const PlacedCable* find(int id) const;
  /// Copy that keeps only the listed cable ids (bin unchanged).
  Scene subset(const std::vector<int>& ids) const;
};

struct SettleOptions {
  int max_attempts = 50;       // per cable, before Overfilled
  int tilt_passes = 2;
  int tilts_per_pass = 12;
  double max_tilt_deg = 12.0;
  double contact_tol = 0.05;   // mm; pairs closer than this are in contact
  double rest_gap = 1e-3;      // mm left between resting bodies
};

/// Sequential quasi-static placement. Each cable gets a random (x, y, yaw,
/// flip) whose footprint fits the bin and is dropped straight down until it
/// rests on the floor or an earlier cable. While its center of mass
/// overhangs the contact hull it is toppled about the nearest support point.
/// Then `tilt_passes` rounds of `tilts_per_pass` random tilts and slides are
/// tried, each kept when it lowers the center of mass, with a topple after
/// every round. A cable whose center of mass ends up more than one radius
/// outside the hull of its contact points, or whose top rises above the
/// walls, is dropped again from a new random pose. Throws Overfilled after
/// max_attempts failed placements.
Scene settle_scene(const BinSpec& bin, const std::vector<CableModelPtr>& cables, std::uint64_t seed,
                   const SettleOptions& options = {});

/// Minimum GJK distance between a cable and everything else in the scene
/// (other cables and the bin).
double clearance(const Scene& scene, const PlacedCable& cable);

/// Scene manifest: seed, bin, per-cable model reference + pose. Model meshes
/// are written once as model_<id>.obj next to the manifest.
void write_scene(const Scene& scene, const std::filesystem::path& manifest_path);

/// Models rebuilt by read_scene, keyed by model id, seed and spec.
using ModelCache = std::map<std::string, CableModelPtr>;

/// Reloads a manifest; models are regenerated from their recorded seed and
/// decomposed with the given options, reusing entries of `cache` when given.
/// Throws IoError / MeshNotFound.
Scene read_scene(const std::filesystem::path& manifest_path, const DecomposeOptions& decompose_options,
                 ModelCache* cache = nullptr);

}  // namespace graspforge

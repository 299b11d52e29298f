#pragma once

#include "graspforge/depthproc/image.hpp"
#include "graspforge/geometry/types.hpp"
#include "graspforge/rng.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace graspforge {

/// Top-down two-jaw grasp: center (x, y, z) in world mm, closing axis at
/// angle theta in [0, pi) from world +x, jaw opening w.
struct GraspPose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double theta = 0.0;
  double w = 0.0;
};

/// Folds an axis angle into [0, pi).
double fold_theta(double theta);

/// Contact points in continuous image coordinates (pixel centers at +0.5)
/// with their depths; n are outward 2D edge normals and g1 = -g2 points from
/// c1 to c2.
struct ContactPair {
  Vec2 c1 = Vec2::Zero();
  Vec2 c2 = Vec2::Zero();
  double d1 = 0.0;
  double d2 = 0.0;
  Vec2 n1 = Vec2::UnitX();
  Vec2 n2 = -Vec2::UnitX();
  Vec2 g1 = Vec2::UnitX();
  Vec2 g2 = -Vec2::UnitX();

  /// Fills g1, g2 from the contact points.
  static ContactPair make(const Vec2& c1, double d1, const Vec2& n1, const Vec2& c2, double d2, const Vec2& n2);
};

inline constexpr double kConeMargin = 1e-9;  // rad

/// Both contact normals lie strictly inside the friction cone around the
/// closing direction: arccos(n_i . -g_i) < arctan(f) - kConeMargin.
bool force_closure_check(const ContactPair& pair, double f);

/// Pixel distance between the contacts times the pitch.
double estimate_grasp_width(const ContactPair& pair, double pitch);

/// Maps continuous image coordinates to world xy and back; depth is measured
/// down from the camera plane at `camera_height`.
struct ImageFrame {
  Vec2 center = Vec2::Zero();  // world xy of the image center
  double camera_height = 500.0;

  Vec2 to_world(const DepthImage& img, const Vec2& uv) const;
  Vec2 to_image(const DepthImage& img, const Vec2& xy) const;
};

struct SamplerConfig {
  int n = 100;                       // max candidates returned
  double w_max = 30.0;               // mm
  double f = 0.5;                    // friction coefficient
  double depth_pair_tol = 6.0;       // mm
  double min_pair_separation = 2.0;  // mm
  int max_trials = 20000;
  int downsample_stride = 1;
  double spatial_sigma = 1.0;  // px
  double range_sigma = 2.0;    // mm
  double grad_threshold = 1.5; // mm/px
  double normal_radius = 5.0;  // px
  int patch_size = 32;
  double patch_step = 2.0;     // source px per patch px
  double engage_depth = 5.0;   // grasp center below the shallower contact, mm
  double min_height = 1.0;     // lowest allowed grasp center, mm
  ImageFrame frame;
  // Edge points whose world xy falls outside [roi_min, roi_max] are ignored;
  // the default box admits everything.
  Vec2 roi_min = Vec2::Constant(-1e18);
  Vec2 roi_max = Vec2::Constant(1e18);

  /// Throws InvalidArgument.
  void validate() const;
};

struct GraspCandidate {
  GraspPose pose;
  ContactPair contacts;
  Patch patch;
};

/// Orders by lower z, then lower x, then lower y.
bool tie_break_less(const GraspPose& a, const GraspPose& b);

/// Edge-based antipodal sampling: downsample, bilateral filter, edge and
/// normal estimation, region-of-interest cut, then max_trials draws of an edge point and a uniformly
/// chosen edge neighbour within w_max. A pair is kept when it is new, its
/// separation lies in [min_pair_separation, w_max], its depths differ by at
/// most depth_pair_tol and it passes force_closure_check. The draw sequence
/// does not depend on f, so a smaller f keeps a subset of the pairs. The
/// first n kept pairs are turned into grasps with patches cropped from the
/// input image, sorted by tie_break_less. Throws NoCandidates when nothing
/// survives.
std::vector<GraspCandidate> sample_grasps(const DepthImage& img, const SamplerConfig& cfg, Rng& rng);

/// Grasp pose for a contact pair (midpoint, folded axis angle, width, depth).
GraspPose grasp_from_contacts(const DepthImage& img, const ContactPair& pair, const SamplerConfig& cfg);

/// JSON-lines dump {x, y, z, theta, w, c1, c2, n1, n2, patch_file}; patches
/// are written as GFD1 files next to the dump as <stem>_NNNN.gfd.
void write_candidates(const std::filesystem::path& path, const std::vector<GraspCandidate>& candidates);

}  // namespace graspforge

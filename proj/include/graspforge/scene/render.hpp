#pragma once

#include "graspforge/depthproc/image.hpp"
#include "graspforge/scene/scene.hpp"

#include <vector>

namespace graspforge {

/// Orthographic camera looking down -z. Pixel (u, v) has its center at
///   x = center.x + (u + 0.5 - width/2) * pitch,  y = center.y + (v + 0.5 - height/2) * pitch.
struct Camera {
  Vec2 center = Vec2::Zero();
  double height = 500.0;  // above the floor, mm
  double pitch = 0.5;     // mm/px
  int width = 480;
  int height_px = 360;

  Vec2 pixel_to_world(double u, double v) const;  // continuous image coords (centers at +0.5)
  Vec2 world_to_pixel(const Vec2& xy) const;
  void validate() const;
};

struct Rendering {
  DepthImage depth;
  std::vector<int> ids;  // per pixel: cable id, -2 for the bin, -1 for nothing
};

/// First surface hit by a downward ray through every pixel center, computed
/// by z-buffer rasterization of the cable meshes and the bin. Depth is
/// camera height minus surface height; empty pixels read the floor depth.
Rendering render_depth(const Scene& scene, const Camera& camera);

}  // namespace graspforge

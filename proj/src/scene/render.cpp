#include "graspforge/scene/render.hpp"

#include "graspforge/error.hpp"
#include "graspforge/geometry/raster.hpp"

#include <limits>

namespace graspforge {

Vec2 Camera::pixel_to_world(double u, double v) const {
  return {center.x() + (u - 0.5 * width) * pitch, center.y() + (v - 0.5 * height_px) * pitch};
}

Vec2 Camera::world_to_pixel(const Vec2& xy) const {
  return {(xy.x() - center.x()) / pitch + 0.5 * width, (xy.y() - center.y()) / pitch + 0.5 * height_px};
}

void Camera::validate() const {
  if (!(pitch > 0.0) || width < 1 || height_px < 1 || !(height > 0.0)) {
    throw Error("InvalidSpec", "camera needs positive pitch, size and height");
  }
}

namespace {

void splat(const TriMesh& mesh, int id, const Camera& cam, std::vector<double>& zbuf, std::vector<int>& ids) {
  const Vec2 origin = cam.pixel_to_world(0.5, 0.5);
  for (const auto& f : mesh.faces) {
    const Vec3 &a = mesh.vertices[f[0]], &b = mesh.vertices[f[1]], &c = mesh.vertices[f[2]];
    raster::rasterize(a.head<2>(), b.head<2>(), c.head<2>(), origin.x(), origin.y(), cam.pitch, cam.width,
                      cam.height_px, [&](int i, int j, double wa, double wb, double wc) {
                        const double z = (wa * a.z() + wb * b.z() + wc * c.z()) / (wa + wb + wc);
                        const std::size_t k = static_cast<std::size_t>(j) * cam.width + i;
                        if (z > zbuf[k]) {
                          zbuf[k] = z;
                          ids[k] = id;
                        }
                      });
  }
}

}  // namespace

Rendering render_depth(const Scene& scene, const Camera& camera) {
  camera.validate();
  const std::size_t n = static_cast<std::size_t>(camera.width) * camera.height_px;
  std::vector<double> zbuf(n, -std::numeric_limits<double>::infinity());
  Rendering out;
  out.ids.assign(n, -1);
  splat(bin_mesh(scene.bin), -2, camera, zbuf, out.ids);
  for (const auto& c : scene.cables) splat(c.world_mesh(), c.id, camera, zbuf, out.ids);
  out.depth = DepthImage(camera.width, camera.height_px, static_cast<float>(camera.pitch));
  for (std::size_t k = 0; k < n; ++k) {
    const double z = out.ids[k] == -1 ? 0.0 : zbuf[k];
    out.depth.data[k] = static_cast<float>(std::max(0.0, camera.height - z));
  }
  return out;
}

}  // namespace graspforge

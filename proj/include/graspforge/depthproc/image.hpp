#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace graspforge {

/// Orthographic depth map, row-major, depths in mm from the camera plane.
/// Pixel (u, v) covers [u, u+1) x [v, v+1) in image coordinates; u grows
/// with world x and v with world y.
struct DepthImage {
  int width = 0;
  int height = 0;
  float pitch = 1.0f;  // mm per pixel
  std::vector<float> data;

  DepthImage() = default;
  DepthImage(int w, int h, float pitch_mm, float fill = 0.0f)
      : width(w), height(h), pitch(pitch_mm), data(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  float at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  bool inside(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }

  /// Throws InvalidImage unless dims match the data and all depths are finite and >= 0.
  void validate() const;
};

/// Square crop fed to the network; the grasp axis runs along +u.
using Patch = DepthImage;

/// GFD1 encoding: "GFD1", u32 width, u32 height, f32 pitch, f32 depths (little endian).
std::string encode_gfd1(const DepthImage& img);
DepthImage decode_gfd1(const std::string& bytes, std::size_t offset = 0, std::size_t* consumed = nullptr);
void write_gfd1(const std::filesystem::path& path, const DepthImage& img);
DepthImage read_gfd1(const std::filesystem::path& path);

}  // namespace graspforge

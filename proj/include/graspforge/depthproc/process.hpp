#pragma once

#include "graspforge/depthproc/image.hpp"
#include "graspforge/geometry/types.hpp"
#include "graspforge/rng.hpp"

#include <limits>
#include <vector>

namespace graspforge {

struct EdgePoint {
  int u = 0;
  int v = 0;
  double depth = 0.0;
  Vec2 gradient = Vec2::Zero();  // central-difference depth gradient (mm/px), points to the far side
  Vec2 normal = Vec2::Zero();    // unit once estimate_normals has run
};

/// Keeps every stride-th pixel in both directions; pitch scales by stride.
DepthImage downsample(const DepthImage& img, int stride);

/// Bilateral filter over a (2*ceil(3*spatial_sigma)+1)^2 window. Neighbours
/// outside the image are left out of the weighted mean.
DepthImage bilateral_filter(const DepthImage& img, double spatial_sigma, double range_sigma);

/// Pixels whose central-difference gradient magnitude reaches the threshold,
/// is not smaller than the magnitude at either neighbour along the rounded
/// gradient direction, and that lie on the near (smaller depth) side of the
/// discontinuity: the step toward the deeper neighbour is larger than the
/// step from the shallower one. Border pixels are skipped. Row-major order.
std::vector<EdgePoint> detect_edges(const DepthImage& img, double grad_threshold);

/// Least-squares line through the edge points within `radius` px of each
/// point; the normal is perpendicular to it and oriented along the depth
/// gradient (near side toward far side). Points with fewer than 3 neighbours
/// are dropped.
std::vector<EdgePoint> estimate_normals(const std::vector<EdgePoint>& edges, double radius);

/// Rotated square crop. Patch pixel (i, j) samples the source at
///   center + step * ((i + 0.5 - S/2) * (cos t, sin t) + (j + 0.5 - S/2) * (-sin t, cos t))
/// in continuous image coordinates (pixel centers at +0.5) with bilinear
/// interpolation; samples outside the image read `floor_depth` (default: the
/// image maximum). Depths are shifted so the center sample is 0. The patch
/// pitch is step times the source pitch.
Patch crop_rotated(const DepthImage& img, const Vec2& center, double theta, int out_size,
                   double floor_depth = std::numeric_limits<double>::quiet_NaN(), double step = 1.0);

/// Bilinear sample at continuous image coordinates.
double sample_bilinear(const DepthImage& img, const Vec2& p, double outside);

/// Adds N(0, gauss_sigma) to every pixel, then replaces each pixel with
/// probability salt_pepper_frac by 0 or pepper_value (equal odds). Results
/// are clamped at 0. Throws InvalidArgument unless 0 <= frac <= 0.1.
DepthImage add_noise(const DepthImage& img, Rng& rng, double gauss_sigma, double salt_pepper_frac,
                     double pepper_value);

Patch flip_horizontal(const Patch& p);
Patch flip_vertical(const Patch& p);

/// Repeats the single depth channel for consumers expecting 3 channels (CHW).
std::vector<float> replicate_channels(const Patch& p, int channels = 3);

}  // namespace graspforge

#include "graspforge/depthproc/process.hpp"

#include "graspforge/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace graspforge {

DepthImage downsample(const DepthImage& img, int stride) {
  if (stride < 1) throw Error("InvalidArgument", "stride must be >= 1");
  if (stride == 1) return img;
  DepthImage out((img.width + stride - 1) / stride, (img.height + stride - 1) / stride,
                 img.pitch * static_cast<float>(stride));
  for (int v = 0; v < out.height; ++v)
    for (int u = 0; u < out.width; ++u) out.at(u, v) = img.at(u * stride, v * stride);
  return out;
}

DepthImage bilateral_filter(const DepthImage& img, double spatial_sigma, double range_sigma) {
  if (!(spatial_sigma > 0.0 && range_sigma > 0.0)) throw Error("InvalidArgument", "sigmas must be positive");
  const int r = static_cast<int>(std::ceil(3.0 * spatial_sigma));
  std::vector<double> spatial((2 * r + 1) * (2 * r + 1));
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      spatial[(dy + r) * (2 * r + 1) + dx + r] = std::exp(-(dx * dx + dy * dy) / (2.0 * spatial_sigma * spatial_sigma));
  const double inv_range = 1.0 / (2.0 * range_sigma * range_sigma);
  DepthImage out(img.width, img.height, img.pitch);
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const double c = img.at(u, v);
      double sum = 0.0, wsum = 0.0;
      for (int dy = std::max(-r, -v); dy <= std::min(r, img.height - 1 - v); ++dy) {
        const double* ws = &spatial[(dy + r) * (2 * r + 1) + r];
        const float* row = &img.data[static_cast<std::size_t>(v + dy) * img.width];
        for (int dx = std::max(-r, -u); dx <= std::min(r, img.width - 1 - u); ++dx) {
          const double d = row[u + dx];
          const double w = ws[dx] * std::exp(-(d - c) * (d - c) * inv_range);
          sum += w * d;
          wsum += w;
        }
      }
      out.at(u, v) = static_cast<float>(sum / wsum);
    }
  }
  return out;
}

std::vector<EdgePoint> detect_edges(const DepthImage& img, double grad_threshold) {
  if (!(grad_threshold > 0.0)) throw Error("InvalidArgument", "grad_threshold must be positive");
  auto at = [&](int u, int v) {
    return static_cast<double>(img.at(std::clamp(u, 0, img.width - 1), std::clamp(v, 0, img.height - 1)));
  };
  auto magnitude = [&](int u, int v) {
    return std::hypot(0.5 * (at(u + 1, v) - at(u - 1, v)), 0.5 * (at(u, v + 1) - at(u, v - 1)));
  };
  std::vector<EdgePoint> out;
  for (int v = 1; v + 1 < img.height; ++v) {
    for (int u = 1; u + 1 < img.width; ++u) {
      const double gx = 0.5 * (img.at(u + 1, v) - img.at(u - 1, v));
      const double gy = 0.5 * (img.at(u, v + 1) - img.at(u, v - 1));
      const double mag = std::hypot(gx, gy);
      if (mag < grad_threshold) continue;
      const int su = static_cast<int>(std::lround(gx / mag));
      const int sv = static_cast<int>(std::lround(gy / mag));
      // Thin to the local gradient maximum across the edge.
      if (mag < magnitude(u + su, v + sv) || mag < magnitude(u - su, v - sv)) continue;
      const double here = img.at(u, v);
      const double forward = img.at(u + su, v + sv) - here;
      const double backward = here - img.at(u - su, v - sv);
      if (forward <= backward) continue;
      EdgePoint e;
      e.u = u;
      e.v = v;
      e.depth = here;
      e.gradient = Vec2(gx, gy);
      out.push_back(e);
    }
  }
  return out;
}

std::vector<EdgePoint> estimate_normals(const std::vector<EdgePoint>& edges, double radius) {
  if (!(radius >= 2.0)) throw Error("InvalidArgument", "normal radius must be >= 2 px");
  const int cell = static_cast<int>(std::ceil(radius));
  auto key = [](int cx, int cy) { return (static_cast<std::int64_t>(cx) << 32) ^ static_cast<std::uint32_t>(cy); };
  auto floordiv = [](int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  std::unordered_map<std::int64_t, std::vector<int>> buckets;
  for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
    buckets[key(floordiv(edges[i].u, cell), floordiv(edges[i].v, cell))].push_back(i);
  }
  const double r2 = radius * radius;
  std::vector<EdgePoint> out;
  std::vector<int> nbrs;
  for (const auto& e : edges) {
    nbrs.clear();
    const int cx = floordiv(e.u, cell), cy = floordiv(e.v, cell);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        auto it = buckets.find(key(cx + dx, cy + dy));
        if (it == buckets.end()) continue;
        for (int j : it->second) {
          const double du = edges[j].u - e.u, dv = edges[j].v - e.v;
          if (du * du + dv * dv <= r2) nbrs.push_back(j);
        }
      }
    }
    // nbrs includes the point itself.
    if (nbrs.size() < 4) continue;
    std::sort(nbrs.begin(), nbrs.end());
    Vec2 mean = Vec2::Zero();
    for (int j : nbrs) mean += Vec2(edges[j].u, edges[j].v);
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (int j : nbrs) {
      const Vec2 d = Vec2(edges[j].u, edges[j].v) - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const Vec2 dir = eig.eigenvectors().col(1);  // largest eigenvalue: line direction
    Vec2 n(-dir.y(), dir.x());
    n.normalize();
    if (n.dot(e.gradient) < 0.0) n = -n;
    EdgePoint p = e;
    p.normal = n;
    out.push_back(p);
  }
  return out;
}

double sample_bilinear(const DepthImage& img, const Vec2& p, double outside) {
  const double fx = p.x() - 0.5, fy = p.y() - 0.5;
  const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
  const double ax = fx - x0, ay = fy - y0;
  auto px = [&](int u, int v) -> double { return img.inside(u, v) ? img.at(u, v) : outside; };
  return (1 - ay) * ((1 - ax) * px(x0, y0) + ax * px(x0 + 1, y0)) +
         ay * ((1 - ax) * px(x0, y0 + 1) + ax * px(x0 + 1, y0 + 1));
}

Patch crop_rotated(const DepthImage& img, const Vec2& center, double theta, int out_size, double floor_depth,
                   double step) {
  if (out_size < 1) throw Error("InvalidArgument", "patch size must be >= 1");
  if (!(step > 0.0)) throw Error("InvalidArgument", "crop step must be positive");
  if (std::isnan(floor_depth)) floor_depth = *std::max_element(img.data.begin(), img.data.end());
  const Vec2 ax = step * Vec2(std::cos(theta), std::sin(theta));
  const Vec2 ay = step * Vec2(-std::sin(theta), std::cos(theta));
  const double base = sample_bilinear(img, center, floor_depth);
  Patch out(out_size, out_size, static_cast<float>(img.pitch * step));
  const double half = 0.5 * out_size;
  for (int j = 0; j < out_size; ++j) {
    for (int i = 0; i < out_size; ++i) {
      const Vec2 src = center + (i + 0.5 - half) * ax + (j + 0.5 - half) * ay;
      out.at(i, j) = static_cast<float>(sample_bilinear(img, src, floor_depth) - base);
    }
  }
  return out;
}

DepthImage add_noise(const DepthImage& img, Rng& rng, double gauss_sigma, double salt_pepper_frac,
                     double pepper_value) {
  if (!(salt_pepper_frac >= 0.0 && salt_pepper_frac <= 0.1)) {
    throw Error("InvalidArgument", "salt_pepper_frac must lie in [0, 0.1]");
  }
  if (gauss_sigma < 0.0) throw Error("InvalidArgument", "gauss_sigma must be >= 0");
  DepthImage out = img;
  std::normal_distribution<double> gauss(0.0, gauss_sigma > 0.0 ? gauss_sigma : 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& d : out.data) {
    double value = d;
    if (gauss_sigma > 0.0) value += gauss(rng);
    if (salt_pepper_frac > 0.0 && unit(rng) < salt_pepper_frac) value = unit(rng) < 0.5 ? 0.0 : pepper_value;
    d = static_cast<float>(std::max(0.0, value));
  }
  return out;
}

Patch flip_horizontal(const Patch& p) {
  Patch out = p;
  for (int v = 0; v < p.height; ++v)
    for (int u = 0; u < p.width; ++u) out.at(u, v) = p.at(p.width - 1 - u, v);
  return out;
}

Patch flip_vertical(const Patch& p) {
  Patch out = p;
  for (int v = 0; v < p.height; ++v)
    for (int u = 0; u < p.width; ++u) out.at(u, v) = p.at(u, p.height - 1 - v);
  return out;
}

std::vector<float> replicate_channels(const Patch& p, int channels) {
  std::vector<float> out;
  out.reserve(p.data.size() * channels);
  for (int c = 0; c < channels; ++c) out.insert(out.end(), p.data.begin(), p.data.end());
  return out;
}

}  // namespace graspforge

#include "graspforge/sampler/sampler.hpp"

#include "graspforge/depthproc/process.hpp"
#include "graspforge/error.hpp"
#include "graspforge/io.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace graspforge {

double fold_theta(double theta) {
  double t = std::fmod(theta, M_PI);
  if (t < 0.0) t += M_PI;
  if (t >= M_PI) t -= M_PI;
  return t;
}

ContactPair ContactPair::make(const Vec2& c1, double d1, const Vec2& n1, const Vec2& c2, double d2,
                              const Vec2& n2) {
  ContactPair p;
  p.c1 = c1;
  p.c2 = c2;
  p.d1 = d1;
  p.d2 = d2;
  p.n1 = n1;
  p.n2 = n2;
  p.g1 = (c2 - c1).normalized();
  p.g2 = -p.g1;
  return p;
}

bool force_closure_check(const ContactPair& pair, double f) {
  // Pixel-grid normals often sit exactly on the cone boundary; the margin keeps
  // rounding from admitting them.
  const double cone = std::atan(f) - kConeMargin;
  const double a1 = std::acos(std::clamp(pair.n1.dot(-pair.g1), -1.0, 1.0));
  const double a2 = std::acos(std::clamp(pair.n2.dot(-pair.g2), -1.0, 1.0));
  return a1 < cone && a2 < cone;
}

double estimate_grasp_width(const ContactPair& pair, double pitch) { return (pair.c2 - pair.c1).norm() * pitch; }

Vec2 ImageFrame::to_world(const DepthImage& img, const Vec2& uv) const {
  return {center.x() + (uv.x() - 0.5 * img.width) * img.pitch, center.y() + (uv.y() - 0.5 * img.height) * img.pitch};
}

Vec2 ImageFrame::to_image(const DepthImage& img, const Vec2& xy) const {
  return {(xy.x() - center.x()) / img.pitch + 0.5 * img.width, (xy.y() - center.y()) / img.pitch + 0.5 * img.height};
}

void SamplerConfig::validate() const {
  if (n < 1) throw Error("InvalidArgument", "n must be >= 1");
  if (!(w_max > 0.0)) throw Error("InvalidArgument", "w_max must be positive");
  if (!(f > 0.0)) throw Error("InvalidArgument", "friction must be positive");
  if (!(depth_pair_tol >= 0.0) || !(min_pair_separation >= 0.0)) {
    throw Error("InvalidArgument", "pair tolerances must be non-negative");
  }
  if (max_trials < 1 || downsample_stride < 1 || patch_size < 1) {
    throw Error("InvalidArgument", "max_trials, downsample_stride and patch_size must be >= 1");
  }
  if (!(spatial_sigma > 0.0) || !(range_sigma > 0.0)) throw Error("InvalidArgument", "sigmas must be positive");
  if (!(patch_step > 0.0)) throw Error("InvalidArgument", "patch_step must be positive");
}

bool tie_break_less(const GraspPose& a, const GraspPose& b) {
  if (a.z != b.z) return a.z < b.z;
  if (a.x != b.x) return a.x < b.x;
  return a.y < b.y;
}

GraspPose grasp_from_contacts(const DepthImage& img, const ContactPair& pair, const SamplerConfig& cfg) {
  GraspPose g;
  const Vec2 mid = cfg.frame.to_world(img, 0.5 * (pair.c1 + pair.c2));
  g.x = mid.x();
  g.y = mid.y();
  g.z = std::max(cfg.min_height, cfg.frame.camera_height - std::min(pair.d1, pair.d2) - cfg.engage_depth);
  g.theta = fold_theta(std::atan2(pair.g1.y(), pair.g1.x()));
  g.w = estimate_grasp_width(pair, img.pitch);
  return g;
}

namespace {

struct Edge {
  Vec2 c;  // continuous coords in the input image
  double depth;
  Vec2 normal;
};

// Neighbour lists within `radius` (input px), via a uniform grid.
std::vector<std::vector<int>> neighbours(const std::vector<Edge>& edges, double radius) {
  const double cell = std::max(radius, 1.0);
  auto key = [](std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xffffffff); };
  std::unordered_map<std::int64_t, std::vector<int>> grid;
  for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
    grid[key(static_cast<std::int64_t>(std::floor(edges[i].c.x() / cell)),
             static_cast<std::int64_t>(std::floor(edges[i].c.y() / cell)))]
        .push_back(i);
  }
  const double r2 = radius * radius;
  std::vector<std::vector<int>> out(edges.size());
  for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
    const auto cx = static_cast<std::int64_t>(std::floor(edges[i].c.x() / cell));
    const auto cy = static_cast<std::int64_t>(std::floor(edges[i].c.y() / cell));
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        auto it = grid.find(key(cx + dx, cy + dy));
        if (it == grid.end()) continue;
        for (int j : it->second) {
          if (j != i && (edges[j].c - edges[i].c).squaredNorm() <= r2) out[i].push_back(j);
        }
      }
    }
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

}  // namespace

std::vector<GraspCandidate> sample_grasps(const DepthImage& img, const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  img.validate();
  const int s = cfg.downsample_stride;
  const DepthImage filtered = bilateral_filter(downsample(img, s), cfg.spatial_sigma, cfg.range_sigma);
  const auto raw = estimate_normals(detect_edges(filtered, cfg.grad_threshold), cfg.normal_radius);
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const auto& e : raw) {
    const Vec2 c(s * e.u + 0.5, s * e.v + 0.5);
    const Vec2 xy = cfg.frame.to_world(img, c);
    if ((xy.array() < cfg.roi_min.array()).any() || (xy.array() > cfg.roi_max.array()).any()) continue;
    edges.push_back({c, e.depth, e.normal});
  }

  const double max_px = cfg.w_max / img.pitch;
  const double min_px = cfg.min_pair_separation / img.pitch;
  const auto nbrs = neighbours(edges, max_px);
  std::vector<ContactPair> kept;
  std::unordered_set<std::uint64_t> seen;
  if (!edges.empty()) {
    const int count = static_cast<int>(edges.size());
    for (int trial = 0; trial < cfg.max_trials && static_cast<int>(kept.size()) < cfg.n; ++trial) {
      const int i = uniform_int(rng, 0, count - 1);
      if (nbrs[i].empty()) continue;
      const int j = nbrs[i][uniform_int(rng, 0, static_cast<int>(nbrs[i].size()) - 1)];
      const auto lo = static_cast<std::uint64_t>(std::min(i, j)), hi = static_cast<std::uint64_t>(std::max(i, j));
      if (!seen.insert((lo << 32) | hi).second) continue;
      const Edge &a = edges[i], &b = edges[j];
      const double dist = (b.c - a.c).norm();
      if (dist < min_px || dist > max_px) continue;
      if (std::abs(a.depth - b.depth) > cfg.depth_pair_tol) continue;
      const ContactPair pair = ContactPair::make(a.c, a.depth, a.normal, b.c, b.depth, b.normal);
      if (force_closure_check(pair, cfg.f)) kept.push_back(pair);
    }
  }
  if (kept.empty()) throw Error("NoCandidates", fmt::format("no force-closure pair among {} edge points", edges.size()));

  std::vector<GraspCandidate> out;
  out.reserve(kept.size());
  for (const auto& pair : kept) {
    GraspCandidate c;
    c.contacts = pair;
    c.pose = grasp_from_contacts(img, pair, cfg);
    c.patch = crop_rotated(img, 0.5 * (pair.c1 + pair.c2), c.pose.theta, cfg.patch_size, cfg.frame.camera_height,
                           cfg.patch_step);
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const GraspCandidate& a, const GraspCandidate& b) { return tie_break_less(a.pose, b.pose); });
  return out;
}

void write_candidates(const std::filesystem::path& path, const std::vector<GraspCandidate>& candidates) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const std::string stem = path.stem().string();
  std::string lines;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const std::string patch_file = fmt::format("{}_{:04d}.gfd", stem, i);
    write_gfd1(dir / patch_file, c.patch);
    const auto& p = c.contacts;
    nlohmann::json j = {{"x", c.pose.x},
                        {"y", c.pose.y},
                        {"z", c.pose.z},
                        {"theta", c.pose.theta},
                        {"w", c.pose.w},
                        {"c1", {p.c1.x(), p.c1.y(), p.d1}},
                        {"c2", {p.c2.x(), p.c2.y(), p.d2}},
                        {"n1", {p.n1.x(), p.n1.y()}},
                        {"n2", {p.n2.x(), p.n2.y()}},
                        {"patch_file", patch_file}};
    lines += j.dump() + "\n";
  }
  write_file_atomic(path, lines);
}

}  // namespace graspforge

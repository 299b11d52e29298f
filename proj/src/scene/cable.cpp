#include "graspforge/error.hpp"
#include "graspforge/parallel.hpp"
#include "graspforge/scene/scene.hpp"

#include <fmt/format.h>

#include <cmath>

namespace graspforge {

void CableSpec::validate() const {
  if (!(radius > 0.0)) throw Error("InvalidSpec", "cable radius must be positive");
  if (segment_count < 2) throw Error("InvalidSpec", "cable needs at least 2 segments");
  if (tube_sides < 6) throw Error("InvalidSpec", "tube_sides must be >= 6");
  if (!(segment_length > 0.0)) throw Error("InvalidSpec", "segment_length must be positive");
  if (!(bend_min_deg >= 0.0 && bend_max_deg >= bend_min_deg && bend_max_deg < 90.0)) {
    throw Error("InvalidSpec", "bend range must satisfy 0 <= min <= max < 90 degrees");
  }
}

namespace {

double segment_gap(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), b = d1.dot(d2), c = d1.dot(r), f = d2.dot(r);
  const double denom = a * e - b * b;
  double s = denom > 1e-12 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
  double t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1.0) {
    t = 1.0;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  return ((p1 + s * d1) - (p2 + t * d2)).norm();
}

std::vector<Vec3> sample_polyline(const CableSpec& spec, Rng& rng) {
  const double deg = M_PI / 180.0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<Vec3> pts{Vec3::Zero()};
    double heading = 0.0;
    bool ok = true;
    for (int i = 0; i < spec.segment_count; ++i) {
      pts.push_back(pts.back() + spec.segment_length * Vec3(std::cos(heading), std::sin(heading), 0.0));
      if (i + 1 < spec.segment_count) {
        const double bend = uniform(rng, spec.bend_min_deg, spec.bend_max_deg) * deg;
        const double sign = uniform_int(rng, 0, 1) == 0 ? -1.0 : 1.0;
        heading += sign * bend;
        // The miter must stay inside both neighbouring segments.
        ok &= spec.radius * std::tan(0.5 * bend) < 0.5 * spec.segment_length;
      }
    }
    for (int i = 0; ok && i < spec.segment_count; ++i) {
      for (int j = i + 2; ok && j < spec.segment_count; ++j) {
        ok = segment_gap(pts[i], pts[i + 1], pts[j], pts[j + 1]) >= 2.0 * spec.radius;
      }
    }
    if (ok) return pts;
  }
  throw Error("SelfIntersecting", "cable folds into itself after 100 resamples");
}

}  // namespace

CableShape make_cable(const CableSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<Vec3> pts = sample_polyline(spec, rng);
  const int n = spec.segment_count;
  Vec3 centroid = Vec3::Zero();
  for (int i = 0; i < n; ++i) centroid += 0.5 * (pts[i] + pts[i + 1]);
  centroid /= n;
  for (auto& p : pts) p -= centroid;

  std::vector<Vec3> tangent(n);
  for (int i = 0; i < n; ++i) tangent[i] = (pts[i + 1] - pts[i]).normalized();

  const int sides = spec.tube_sides;
  CableShape shape;
  shape.centerline = pts;
  TriMesh& m = shape.mesh;
  for (int k = 0; k <= n; ++k) {
    const Vec3& t = tangent[k == 0 ? 0 : k - 1];
    const Vec3 miter = (k == 0 || k == n) ? t : Vec3((tangent[k - 1] + tangent[k]).normalized());
    const Vec3 up = Vec3::UnitZ();
    const Vec3 side = up.cross(t);
    for (int j = 0; j < sides; ++j) {
      const double phi = 2.0 * M_PI * (j + 0.5) / sides;
      const Vec3 p = pts[k] + spec.radius * (std::cos(phi) * side + std::sin(phi) * up);
      // Slide along the arriving segment onto the miter plane.
      m.vertices.push_back(p - t * (miter.dot(p - pts[k]) / miter.dot(t)));
    }
  }
  auto ring = [&](int k, int j) { return k * sides + (j % sides); };
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < sides; ++j) {
      m.faces.push_back({ring(k, j), ring(k, j + 1), ring(k + 1, j + 1)});
      m.faces.push_back({ring(k, j), ring(k + 1, j + 1), ring(k + 1, j)});
    }
  }
  const int start = static_cast<int>(m.vertices.size());
  m.vertices.push_back(pts.front());
  m.vertices.push_back(pts.back());
  for (int j = 0; j < sides; ++j) {
    m.faces.push_back({start, ring(0, j + 1), ring(0, j)});
    m.faces.push_back({start + 1, ring(n, j), ring(n, j + 1)});
  }
  return shape;
}

TriMesh make_cable_mesh(const CableSpec& spec, Rng& rng) { return make_cable(spec, rng).mesh; }

namespace {

Vec3 volume_centroid(const TriMesh& mesh) {
  double total = 0.0;
  Vec3 acc = Vec3::Zero();
  for (const auto& f : mesh.faces) {
    const Vec3 &a = mesh.vertices[f[0]], &b = mesh.vertices[f[1]], &c = mesh.vertices[f[2]];
    const double v = a.dot(b.cross(c));
    total += v;
    acc += v * (a + b + c) / 4.0;
  }
  return acc / total;
}

}  // namespace

CableModelPtr build_cable_model(const CableSpec& spec, int model_id, std::uint64_t seed,
                                const DecomposeOptions& decompose_options) {
  auto model = std::make_shared<CableModel>();
  model->model_id = model_id;
  model->seed = seed;
  model->spec = spec;
  Rng rng(seed);
  CableShape shape = make_cable(spec, rng);
  model->mesh = std::move(shape.mesh);
  model->centerline = std::move(shape.centerline);
  model->decomposition = decompose(model->mesh, decompose_options);
  model->center_of_mass = volume_centroid(model->mesh);
  return model;
}

std::vector<CableModelPtr> build_cable_library(const CableSpec& spec, int count, std::uint64_t seed,
                                               const DecomposeOptions& decompose_options, int jobs) {
  if (count < 1) throw Error("InvalidSpec", "cable library needs at least one model");
  std::vector<CableModelPtr> out(count);
  parallel_for(static_cast<std::size_t>(count), jobs, [&](std::size_t i) {
    out[i] = build_cable_model(spec, static_cast<int>(i), derive_seed(seed, 0xCAB1E, i), decompose_options);
  });
  return out;
}

}  // namespace graspforge

#include "graspforge/geometry/decompose.hpp"

#include "crossings.hpp"
#include "graspforge/error.hpp"
#include "graspforge/geometry/voxel.hpp"
#include "graspforge/io.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

namespace graspforge {

namespace {

struct ReflexEdge {
  Vec3 a;
  Vec3 mid;
  Vec3 n1;
  Vec3 n2;
};

struct Node {
  std::vector<Plane> cell;
  ConvexPiece hull;
  double occupied = 0.0;
  double waste = 0.0;  // hull volume - occupied volume
  double concavity = 0.0;
  bool splittable = true;
};

class Decomposer {
 public:
  Decomposer(const TriMesh& mesh, const DecomposeOptions& opt) : mesh_(mesh), opt_(opt) {
    box_ = mesh.bounds();
    const double diag = box_.extent().norm();
    eps_ = 1e-9 * std::max(diag, 1.0);
    voxels_ = voxelize(mesh, opt.cell_size);
    for (const auto& c : voxels_.occupied_cells()) centers_.push_back(voxels_.center(c[0], c[1], c[2]));
    build_zlines();
    find_reflex_edges();
  }

  DecompositionResult run() {
    const Aabb root = box_.inflated(0.01 * box_.extent().maxCoeff() + 1e-3);
    std::vector<Plane> cell;
    for (int a = 0; a < 3; ++a) {
      cell.push_back({Vec3::Unit(a), root.hi[a]});
      cell.push_back({-Vec3::Unit(a), -root.lo[a]});
    }
    auto first = make_node(cell);
    if (!first) throw Error("DegenerateInput", "mesh encloses no volume");
    std::vector<Node> nodes{std::move(*first)};

    while (static_cast<int>(nodes.size()) < opt_.max_pieces) {
      int pick = -1;
      for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
        if (!nodes[i].splittable) continue;
        if (pick < 0 || nodes[i].concavity > nodes[pick].concavity) pick = i;
      }
      if (pick < 0 || nodes[pick].concavity <= opt_.concavity_tol) break;
      auto children = best_split(nodes[pick]);
      if (!children) {
        nodes[pick].splittable = false;
        continue;
      }
      nodes[pick] = std::move(children->first);
      nodes.push_back(std::move(children->second));
    }

    DecompositionResult out;
    out.source = mesh_;
    out.concavity_tol = opt_.concavity_tol;
    for (auto& n : nodes) {
      out.budget_exceeded |= n.concavity > opt_.concavity_tol;
      out.pieces.push_back(std::move(n.hull));
      out.concavity.push_back(n.concavity);
      out.cells.push_back(std::move(n.cell));
    }
    return out;
  }

 private:
  void build_zlines() {
    const double h = opt_.cell_size / 4.0;
    zgrid_.axis = 2;
    zgrid_.spacing = h;
    zgrid_.nu = std::max(1, static_cast<int>(std::ceil(box_.extent().x() / h)));
    zgrid_.nv = std::max(1, static_cast<int>(std::ceil(box_.extent().y() / h)));
    zgrid_.u0 = box_.center().x() - 0.5 * zgrid_.nu * h + 0.5 * h;
    zgrid_.v0 = box_.center().y() - 0.5 * zgrid_.nv * h + 0.5 * h;
    zlines_ = detail::line_crossings(mesh_, zgrid_);
  }

  void find_reflex_edges() {
    std::map<std::pair<int, int>, int> owner;
    for (int f = 0; f < static_cast<int>(mesh_.faces.size()); ++f) {
      const auto& t = mesh_.faces[f];
      for (int e = 0; e < 3; ++e) owner[{t[e], t[(e + 1) % 3]}] = f;
    }
    const double min_angle = 0.5 * M_PI / 180.0;
    for (const auto& [edge, f1] : owner) {
      auto twin = owner.find({edge.second, edge.first});
      if (twin == owner.end() || edge.first > edge.second) continue;
      const int f2 = twin->second;
      const Vec3 n1 = mesh_.face_normal(f1), n2 = mesh_.face_normal(f2);
      if (!n1.allFinite() || !n2.allFinite()) continue;
      const auto& t2 = mesh_.faces[f2];
      int opp = t2[0];
      for (int k : t2) {
        if (k != edge.first && k != edge.second) opp = k;
      }
      const Vec3& a = mesh_.vertices[edge.first];
      const Vec3& b = mesh_.vertices[edge.second];
      if (n1.dot(mesh_.vertices[opp] - a) <= eps_) continue;  // convex or flat
      if (std::acos(std::clamp(n1.dot(n2), -1.0, 1.0)) <= min_angle) continue;
      reflex_.push_back({a, 0.5 * (a + b), n1, n2});
    }
  }

  std::vector<Vec3> cell_vertices(const std::vector<Plane>& cell) const {
    std::vector<Vec3> out;
    const int m = static_cast<int>(cell.size());
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        for (int k = j + 1; k < m; ++k) {
          Eigen::Matrix3d A;
          A.row(0) = cell[i].normal.transpose();
          A.row(1) = cell[j].normal.transpose();
          A.row(2) = cell[k].normal.transpose();
          if (std::abs(A.determinant()) < 1e-12) continue;
          const Vec3 p = A.partialPivLu().solve(Vec3(cell[i].offset, cell[j].offset, cell[k].offset));
          bool inside = true;
          for (const auto& pl : cell) inside &= pl.signed_distance(p) <= 1e3 * eps_;
          if (!inside) continue;
          bool dup = false;
          for (const auto& q : out) dup |= (q - p).squaredNorm() <= eps_ * eps_ * 1e6;
          if (!dup) out.push_back(p);
        }
      }
    }
    return out;
  }

  // Clips a mesh triangle to the cell. A polygon lying on a cell plane is
  // kept only when the solid is on the cell side of it.
  void clip_face(int f, const std::vector<Plane>& cell, std::vector<Vec3>& sink) const {
    const auto& t = mesh_.faces[f];
    std::vector<Vec3> poly{mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]]};
    const Vec3 raw = (poly[1] - poly[0]).cross(poly[2] - poly[0]);
    if (raw.squaredNorm() == 0.0) return;
    const Vec3 nf = raw.normalized();
    std::vector<Vec3> next;
    std::vector<double> s;
    for (const auto& pl : cell) {
      s.resize(poly.size());
      bool on_plane = true, any_out = false;
      for (std::size_t i = 0; i < poly.size(); ++i) {
        s[i] = pl.signed_distance(poly[i]);
        if (std::abs(s[i]) > eps_) on_plane = false;
        if (s[i] > eps_) any_out = true;
      }
      if (on_plane) {
        if (nf.dot(pl.normal) <= 0.0) return;
        continue;
      }
      if (!any_out) continue;
      next.clear();
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const std::size_t j = (i + 1) % poly.size();
        const bool in_i = s[i] <= eps_, in_j = s[j] <= eps_;
        if (in_i) next.push_back(poly[i]);
        if (in_i != in_j) {
          const double t_cut = s[i] / (s[i] - s[j]);
          next.push_back(poly[i] + t_cut * (poly[j] - poly[i]));
        }
      }
      poly.swap(next);
      if (poly.size() < 3) return;
    }
    Vec3 area = Vec3::Zero();
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) area += (poly[i] - poly[0]).cross(poly[i + 1] - poly[0]);
    if (area.norm() <= eps_ * eps_) return;
    sink.insert(sink.end(), poly.begin(), poly.end());
  }

  double occupied_volume(const std::vector<Plane>& cell, const std::vector<Vec3>& corners) const {
    Aabb cb;
    for (const auto& c : corners) cb.extend(c);
    const double h = zgrid_.spacing;
    const int i0 = std::max(0, static_cast<int>(std::ceil((cb.lo.x() - zgrid_.u0) / h)));
    const int i1 = std::min(zgrid_.nu - 1, static_cast<int>(std::floor((cb.hi.x() - zgrid_.u0) / h)));
    const int j0 = std::max(0, static_cast<int>(std::ceil((cb.lo.y() - zgrid_.v0) / h)));
    const int j1 = std::min(zgrid_.nv - 1, static_cast<int>(std::floor((cb.hi.y() - zgrid_.v0) / h)));
    double length = 0.0;
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const auto& zs = zlines_[zgrid_.index(i, j)];
        if (zs.size() < 2) continue;
        const double x = zgrid_.u0 + i * h, y = zgrid_.v0 + j * h;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (const auto& pl : cell) {
          const double rest = pl.offset - pl.normal.x() * x - pl.normal.y() * y;
          const double nz = pl.normal.z();
          if (nz > 0.0) hi = std::min(hi, rest / nz);
          else if (nz < 0.0) lo = std::max(lo, rest / nz);
          else if (rest < 0.0) hi = lo - 1.0;
        }
        if (!(hi > lo)) continue;
        for (std::size_t k = 0; k + 1 < zs.size(); k += 2) {
          const double a = std::max(lo, zs[k]), b = std::min(hi, zs[k + 1]);
          if (b > a) length += b - a;
        }
      }
    }
    return length * h * h;
  }

  std::optional<Node> make_node(std::vector<Plane> cell) const {
    const auto corners = cell_vertices(cell);
    if (corners.size() < 4) return std::nullopt;
    std::vector<Vec3> pts;
    for (int f = 0; f < static_cast<int>(mesh_.faces.size()); ++f) clip_face(f, cell, pts);
    for (const auto& c : corners) {
      if (detail::winding_number(mesh_, c) >= 0.5) pts.push_back(c);
    }
    if (pts.size() < 4) return std::nullopt;
    Node node;
    try {
      node.hull = convex_hull(pts);
    } catch (const Error&) {
      return std::nullopt;
    }
    node.occupied = occupied_volume(cell, corners);
    if (!(node.occupied > 0.0)) return std::nullopt;
    const double hv = node.hull.volume();
    node.waste = std::max(0.0, hv - node.occupied);
    node.concavity = hv > 0.0 ? std::clamp(node.waste / hv, 0.0, 1.0) : 0.0;
    node.cell = std::move(cell);
    return node;
  }

  std::vector<Plane> candidates(const Node& node) const {
    std::vector<Plane> out;
    auto add = [&](const Vec3& n, double d) {
      if (!n.allFinite() || n.norm() < 1e-9) return;
      const Vec3 u = n.normalized();
      const double off = d / n.norm();
      for (const auto& p : out) {
        if (p.normal.dot(u) > 1.0 - 1e-9 && std::abs(p.offset - off) <= 1e3 * eps_) return;
        if (p.normal.dot(u) < -1.0 + 1e-9 && std::abs(p.offset + off) <= 1e3 * eps_) return;
      }
      out.push_back({u, off});
    };
    for (const auto& e : reflex_) {
      bool inside = true;
      for (const auto& pl : node.cell) inside &= pl.signed_distance(e.mid) < -eps_;
      if (!inside) continue;
      add(e.n1, e.n1.dot(e.a));
      add(e.n2, e.n2.dot(e.a));
      const Vec3 bis = e.n1 - e.n2;
      add(bis, bis.dot(e.a));
    }
    // Axis-aligned planes through the centroid of the voxels in the cell.
    Vec3 sum = Vec3::Zero(), sq = Vec3::Zero();
    int count = 0;
    for (const auto& c : centers_) {
      bool inside = true;
      for (const auto& pl : node.cell) inside &= pl.signed_distance(c) <= 0.0;
      if (!inside) continue;
      sum += c;
      sq += c.cwiseProduct(c);
      ++count;
    }
    if (count >= 2) {
      const Vec3 mean = sum / count;
      const Vec3 var = sq / count - mean.cwiseProduct(mean);
      std::array<int, 3> axes{0, 1, 2};
      std::stable_sort(axes.begin(), axes.end(), [&](int a, int b) { return var[a] > var[b]; });
      for (int a : axes) add(Vec3::Unit(a), mean[a]);
    }
    return out;
  }

  std::optional<std::pair<Node, Node>> best_split(const Node& node) const {
    std::optional<std::pair<Node, Node>> best;
    double best_waste = node.waste - 1e-9 * std::max(node.hull.volume(), 1.0);
    const double tie = 1e-9 * std::max(node.hull.volume(), 1.0);
    for (const auto& pl : candidates(node)) {
      auto below = node.cell;
      below.push_back(pl);
      auto above = node.cell;
      above.push_back({-pl.normal, -pl.offset});
      auto a = make_node(std::move(below));
      if (!a) continue;
      auto b = make_node(std::move(above));
      if (!b) continue;
      const double total = a->waste + b->waste;
      if (total < best_waste - (best ? tie : 0.0)) {
        best_waste = total;
        best.emplace(std::move(*a), std::move(*b));
      }
    }
    return best;
  }

  const TriMesh& mesh_;
  DecomposeOptions opt_;
  Aabb box_;
  double eps_ = 1e-9;
  VoxelGrid voxels_;
  std::vector<Vec3> centers_;
  detail::LineGrid zgrid_;
  std::vector<std::vector<double>> zlines_;
  std::vector<ReflexEdge> reflex_;
};

}  // namespace

DecompositionResult decompose(const TriMesh& mesh, const DecomposeOptions& options) {
  if (!(options.concavity_tol > 0.0 && options.concavity_tol < 1.0)) {
    throw Error("DegenerateInput", "concavity_tol must lie in (0, 1)");
  }
  if (options.max_pieces < 1) throw Error("DegenerateInput", "max_pieces must be >= 1");
  mesh.validate(true);
  return Decomposer(mesh, options).run();
}

void write_decomposition(const DecompositionResult& result, const std::filesystem::path& dir,
                         const std::string& source_name) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["source"] = source_name;
  manifest["tol"] = result.concavity_tol;
  manifest["budget_exceeded"] = result.budget_exceeded;
  manifest["pieces"] = nlohmann::json::array();
  for (std::size_t i = 0; i < result.pieces.size(); ++i) {
    const auto& piece = result.pieces[i];
    TriMesh m{piece.vertices, piece.faces};
    std::ostringstream obj;
    write_obj(obj, m);
    const std::string file = fmt::format("piece_{:03d}.obj", i);
    write_file_atomic(dir / file, obj.str());
    manifest["pieces"].push_back(
        {{"file", file}, {"vertex_count", piece.vertices.size()}, {"concavity", result.concavity[i]}});
  }
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace graspforge

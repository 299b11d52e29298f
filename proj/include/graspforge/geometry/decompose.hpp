#pragma once

#include "graspforge/geometry/hull.hpp"
#include "graspforge/geometry/mesh.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace graspforge {

struct DecomposeOptions {
  double concavity_tol = 0.05;
  int max_pieces = 32;
  double cell_size = 2.0;  // mm
};

struct DecompositionResult {
  std::vector<ConvexPiece> pieces;
  std::vector<double> concavity;  // per piece
  std::vector<std::vector<Plane>> cells;  // per piece: half-spaces n.x <= offset cutting it from the solid
  TriMesh source;
  double concavity_tol = 0.05;
  bool budget_exceeded = false;  // stopped at max_pieces with a piece above tolerance
};

/// Approximate convex decomposition by hierarchical plane splits.
///
/// Each piece is the intersection of the solid with a convex cell. A piece is
/// represented by the exact hull of that intersection; its concavity is
/// (hull volume - solid volume inside the cell) / hull volume, with the solid
/// volume integrated along vertical lines on a grid of cell_size / 4.
///
/// The piece with the highest concavity is split first. Candidate split
/// planes are the two face planes and the dihedral bisector at every reflex
/// edge inside the piece, followed by axis-aligned planes through the centroid
/// of the piece's voxels (axis of largest occupancy variance first). The
/// candidate leaving the least total hull-minus-solid volume wins; ties go to
/// the earlier candidate. The split order does not depend on concavity_tol,
/// so a smaller tolerance never yields fewer pieces.
///
/// Propagates voxelize() errors (OpenMesh).
DecompositionResult decompose(const TriMesh& mesh, const DecomposeOptions& options = {});

/// Writes piece_NNN.obj files plus manifest.json
/// {source, tol, pieces:[{file, vertex_count, concavity}]} into `dir`.
void write_decomposition(const DecompositionResult& result, const std::filesystem::path& dir,
                         const std::string& source_name);

}  // namespace graspforge

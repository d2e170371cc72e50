#pragma once
// Interlocking block geometry at scale L (a multiple of 6).
//
// Tiles are half-open dilated unit cubes partitioning Z^d; a joint is the
// closed dilated cube of side L/3 centered at the midpoint between two tile
// centers; a block is a tile together with its 2d surrounding joints.  Two
// adjacent blocks intersect exactly in the joint between them, and the
// adjacency graph of fully-contained ("interior") blocks is a box in Z^d.
// All membership tests are exact integer comparisons.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "zsync/grid.hpp"

namespace zsync {

// Direction encoding: dir = 2*axis for +e_axis, 2*axis + 1 for -e_axis.
inline int dir_axis(int dir) { return dir >> 1; }
inline int dir_sign(int dir) { return (dir & 1) ? -1 : +1; }

bool in_tile(const Coord& x, const Coord& a, int L, int d);
bool in_joint(const Coord& x, const Coord& a, int dir, int L, int d);

struct BlockPartition {
  int d = 0;
  int n = 0;
  int scale_L = 0;
  Box lattice_box;  // Lambda_n
  Box block_box;    // the box of interior block coordinates

  std::vector<Coord> interior;  // interior block coordinates, lexicographic

  // Per interior block (same order as `interior`), vertex flat ids sorted
  // ascending.
  std::vector<std::vector<int32_t>> block_verts;
  std::vector<std::vector<int32_t>> core_verts;
  std::vector<std::array<std::vector<int32_t>, 2 * MAX_D>> joint_verts;  // per direction
  std::vector<std::array<std::vector<int32_t>, 2 * MAX_D>> minus_verts;  // block minus joint

  // Canonical owning interior block per lattice vertex (lexicographically
  // smallest block containing it), -1 when uncovered.
  std::vector<int32_t> owner;

  struct Edge {
    int32_t b1, b2;  // indices into `interior`; b2 = b1 + e_axis
    int8_t axis;
  };
  std::vector<Edge> edges;  // adjacency of interior blocks

  int64_t block_count() const { return int64_t(interior.size()); }
  int64_t block_size() const { return block_verts.empty() ? 0 : int64_t(block_verts[0].size()); }
  int64_t joint_size() const {
    return joint_verts.empty() ? 0 : int64_t(joint_verts[0][0].size());
  }

  // Index into `interior` for block coordinate a, or -1.
  int64_t block_index_of(const Coord& a) const;

  // Vertex set of an arbitrary (possibly boundary) block clipped to the box.
  std::vector<int32_t> clipped_block_vertices(const Coord& a) const;

  // Neighbor block index in the given direction, or -1 if not interior.
  int64_t neighbor(int64_t block_idx, int dir) const;
};

BlockPartition build_partition(int n, int d, int scale_L);

struct AlphaReport {
  double ratio;            // |B ∩ B'| / |B| by exact counting
  int64_t joint_count;     // |B ∩ B'|
  int64_t block_count;     // |B|
  double candidate_small;  // 1 / (3^d + d)
  double candidate_large;  // 1 / (3^d + 2d)
};

AlphaReport alpha_ratio(const BlockPartition& part);

// One row per (block, vertex) membership: vertex coords, block coord, and the
// region of the vertex within that block (core / joint in a direction).
void dump_partition_csv(const BlockPartition& part, const std::string& path);

}  // namespace zsync

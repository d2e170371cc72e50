#include "zsync/geometry.hpp"

#include <algorithm>
#include <stdexcept>

#include "zsync/csvio.hpp"

namespace zsync {

bool in_tile(const Coord& x, const Coord& a, int L, int d) {
  const int h = L / 2;
  for (int i = 0; i < d; ++i) {
    int64_t c = int64_t(L) * a[i];
    if (x[i] < c - h || x[i] >= c + h) return false;
  }
  return true;
}

bool in_joint(const Coord& x, const Coord& a, int dir, int L, int d) {
  const int h = L / 2, j = L / 6;
  const int axis = dir_axis(dir), sign = dir_sign(dir);
  for (int i = 0; i < d; ++i) {
    int64_t c = int64_t(L) * a[i];
    if (i == axis) {
      int64_t mid = c + sign * h;  // dilated midpoint between the tile centers
      if (x[i] < mid - j || x[i] > mid + j) return false;
    } else {
      if (x[i] < c - j || x[i] > c + j) return false;
    }
  }
  return true;
}

namespace {

bool in_any_joint(const Coord& x, const Coord& a, int L, int d) {
  for (int dir = 0; dir < 2 * d; ++dir)
    if (in_joint(x, a, dir, L, d)) return true;
  return false;
}

bool in_block(const Coord& x, const Coord& a, int L, int d) {
  return in_tile(x, a, L, d) || in_any_joint(x, a, L, d);
}

// Expand the block's bounding box; extreme coordinates come from the two
// joints along each axis.
void block_bounds(const Coord& a, int L, int d, Coord& lo, Coord& hi) {
  const int ext = L / 2 + L / 6;
  for (int i = 0; i < d; ++i) {
    lo[i] = int32_t(int64_t(L) * a[i] - ext);
    hi[i] = int32_t(int64_t(L) * a[i] + ext);
  }
}

}  // namespace

int64_t BlockPartition::block_index_of(const Coord& a) const {
  if (!block_box.contains(a)) return -1;
  return block_box.index(a);
}

int64_t BlockPartition::neighbor(int64_t block_idx, int dir) const {
  Coord a = interior[size_t(block_idx)];
  a[dir_axis(dir)] += dir_sign(dir);
  return block_index_of(a);
}

std::vector<int32_t> BlockPartition::clipped_block_vertices(const Coord& a) const {
  std::vector<int32_t> out;
  Coord lo, hi;
  block_bounds(a, scale_L, d, lo, hi);
  Coord x = lo;
  while (true) {
    if (lattice_box.contains(x) && in_block(x, a, scale_L, d))
      out.push_back(int32_t(lattice_box.index(x)));
    int axis = d - 1;
    while (axis >= 0 && x[axis] == hi[axis]) x[axis--] = lo[axis];
    if (axis < 0) break;
    ++x[axis];
  }
  std::sort(out.begin(), out.end());
  return out;
}

BlockPartition build_partition(int n, int d, int scale_L) {
  if (scale_L < 6 || scale_L % 6 != 0)
    throw std::invalid_argument("scale_L: renormalization scale must be a positive multiple of 6");
  if (d < 2 || d > MAX_D) throw std::invalid_argument("d: dimension must be in [2, 4]");
  if (2 * n + 1 < 3 * scale_L)
    throw std::invalid_argument("n: box too small for one interior block (need 2n+1 >= 3*scale_L)");

  BlockPartition part;
  part.d = d;
  part.n = n;
  part.scale_L = scale_L;
  part.lattice_box = Box::centered(d, n);

  // Interior block coordinates: the whole block [L*a - 2L/3, L*a + 2L/3]
  // must fit inside [-n, n] on every axis.
  const int ext = scale_L / 2 + scale_L / 6;
  const int amax = (n - ext) / scale_L;  // n - ext >= 0 given the size precondition
  part.block_box.d = d;
  for (int i = 0; i < d; ++i) {
    part.block_box.lo[i] = -amax;
    part.block_box.hi[i] = amax;
  }

  const int64_t nblocks = part.block_box.size();
  part.interior.reserve(size_t(nblocks));
  for (int64_t bi = 0; bi < nblocks; ++bi) part.interior.push_back(part.block_box.coord(bi));

  part.block_verts.resize(size_t(nblocks));
  part.core_verts.resize(size_t(nblocks));
  part.joint_verts.resize(size_t(nblocks));
  part.minus_verts.resize(size_t(nblocks));
  part.owner.assign(size_t(part.lattice_box.size()), -1);

  for (int64_t bi = 0; bi < nblocks; ++bi) {
    const Coord a = part.interior[size_t(bi)];
    Coord lo, hi;
    block_bounds(a, scale_L, d, lo, hi);
    Coord x = lo;
    while (true) {
      bool tile = in_tile(x, a, scale_L, d);
      int in_dir = -1;
      for (int dir = 0; dir < 2 * d && in_dir < 0; ++dir)
        if (in_joint(x, a, dir, scale_L, d)) in_dir = dir;
      if (tile || in_dir >= 0) {
        int32_t flat = int32_t(part.lattice_box.index(x));
        part.block_verts[size_t(bi)].push_back(flat);
        if (in_dir >= 0)
          part.joint_verts[size_t(bi)][size_t(in_dir)].push_back(flat);
        else
          part.core_verts[size_t(bi)].push_back(flat);
      }
      int axis = d - 1;
      while (axis >= 0 && x[axis] == hi[axis]) x[axis--] = lo[axis];
      if (axis < 0) break;
      ++x[axis];
    }
    std::sort(part.block_verts[size_t(bi)].begin(), part.block_verts[size_t(bi)].end());
    std::sort(part.core_verts[size_t(bi)].begin(), part.core_verts[size_t(bi)].end());
    for (int dir = 0; dir < 2 * d; ++dir) {
      auto& jv = part.joint_verts[size_t(bi)][size_t(dir)];
      std::sort(jv.begin(), jv.end());
      auto& mv = part.minus_verts[size_t(bi)][size_t(dir)];
      std::set_difference(part.block_verts[size_t(bi)].begin(),
                          part.block_verts[size_t(bi)].end(), jv.begin(), jv.end(),
                          std::back_inserter(mv));
    }
  }

  // canonical owners: first (lexicographically smallest) interior block wins
  for (int64_t bi = 0; bi < nblocks; ++bi)
    for (int32_t v : part.block_verts[size_t(bi)])
      if (part.owner[size_t(v)] < 0) part.owner[size_t(v)] = int32_t(bi);

  for (int64_t bi = 0; bi < nblocks; ++bi) {
    const Coord a = part.interior[size_t(bi)];
    for (int axis = 0; axis < d; ++axis) {
      Coord b = a;
      ++b[axis];
      int64_t bj = part.block_index_of(b);
      if (bj >= 0)
        part.edges.push_back({int32_t(bi), int32_t(bj), int8_t(axis)});
    }
  }
  return part;
}

AlphaReport alpha_ratio(const BlockPartition& part) {
  if (part.edges.empty())
    throw std::invalid_argument("partition has no interior adjacent pair");
  const auto& e = part.edges.front();
  // B ∩ B' is the joint of B in direction +e_axis.
  AlphaReport rep;
  rep.joint_count = int64_t(part.joint_verts[size_t(e.b1)][size_t(2 * e.axis)].size());
  rep.block_count = int64_t(part.block_verts[size_t(e.b1)].size());
  rep.ratio = double(rep.joint_count) / double(rep.block_count);
  double pow3 = 1.0;
  for (int i = 0; i < part.d; ++i) pow3 *= 3.0;
  rep.candidate_small = 1.0 / (pow3 + part.d);
  rep.candidate_large = 1.0 / (pow3 + 2.0 * part.d);
  return rep;
}

void dump_partition_csv(const BlockPartition& part, const std::string& path) {
  CsvWriter csv(path, {"vertex", "block", "region"});
  auto coord_str = [&](const Coord& c, int d) {
    std::string s;
    for (int i = 0; i < d; ++i) {
      if (i) s += ' ';
      s += std::to_string(c[i]);
    }
    return s;
  };
  for (size_t bi = 0; bi < part.interior.size(); ++bi) {
    const Coord a = part.interior[bi];
    for (int32_t v : part.core_verts[bi])
      csv.row({coord_str(part.lattice_box.coord(v), part.d), coord_str(a, part.d), "core"});
    for (int dir = 0; dir < 2 * part.d; ++dir) {
      std::string tag = std::string("joint") + (dir_sign(dir) > 0 ? "+" : "-") + "e" +
                        std::to_string(dir_axis(dir) + 1);
      for (int32_t v : part.joint_verts[bi][size_t(dir)])
        csv.row({coord_str(part.lattice_box.coord(v), part.d), coord_str(a, part.d), tag});
    }
  }
}

}  // namespace zsync

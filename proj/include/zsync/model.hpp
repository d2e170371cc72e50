#pragma once
// One realization of the synchronization problem on a finite box:
// hidden signs, noisy edge comparisons, and ranged Gaussian pair
// observations.

#include <cstdint>
#include <string>
#include <vector>

#include "zsync/grid.hpp"
#include "zsync/rng.hpp"

namespace zsync {

// Inverse temperature matching the flip channel: (1/2)ln((1-p)/p).
// Domain (0, 1/2]; the endpoint p = 1/2 gives beta = 0 (symmetric channel).
double beta_of(double p);

struct ModelParams {
  int d = 2;          // dimension >= 2
  int n = 10;         // box half-width, Lambda_n = [-n, n]^d
  double p = 0.1;     // flip probability; [0, 1/2], endpoints as continuity limits
  double eta = 0.0;   // Gaussian pair-observation SNR >= 0
  int range_L = 1;    // Gaussian interaction range (|u-v|_inf <= range_L)
  uint64_t seed = 1;  // master seed

  double delta() const { return 1.0 - 2.0 * p; }
  double beta() const { return beta_of(p); }

  // Throws std::invalid_argument naming the offending parameter.
  void validate() const;
};

struct LatticeInstance {
  ModelParams params;
  Box box;  // Lambda_n

  BitVec theta;  // per vertex, +1/-1

  // Edge observation sign for (u, u + e_axis), stored at vertex*d + axis.
  // Valid only when the partner vertex lies in the box.
  BitVec edge_bits;

  // Gaussian pair observations: for each vertex u and each lexicographically
  // positive offset w with |w|_inf <= range_L, the observation on the
  // unordered pair {u, u + w}.  Slots whose partner leaves the box are
  // deterministic pure-noise filler and must not be queried.
  std::vector<Coord> goe_offsets;
  std::vector<float> goe;

  int64_t vertex_count() const { return box.size(); }
  int64_t edge_count() const;  // nearest-neighbor edges inside the box

  int8_t theta_at(int64_t flat) const { return theta.get(flat); }

  // Y for edge (u, u + e_axis); caller guarantees the edge exists.
  int8_t edge_sign(int64_t uflat, int axis) const {
    return edge_bits.get(uflat * params.d + axis);
  }

  float goe_at(int64_t uflat, int64_t offset_idx) const {
    return goe[uflat * int64_t(goe_offsets.size()) + offset_idx];
  }

  // Observation for an unordered in-range pair {u, v}; throws if out of range.
  float goe_pair(int64_t uflat, int64_t vflat) const;

  bool same_bits(const LatticeInstance& o) const {
    return theta == o.theta && edge_bits == o.edge_bits && goe == o.goe;
  }
};

LatticeInstance generate_instance(const ModelParams& params);

// Self-describing binary format: a one-line JSON header followed by packed
// spin words, edge words, and 32-bit floats (little-endian).
void save_instance(const LatticeInstance& inst, const std::string& path);
LatticeInstance load_instance(const std::string& path);

// The lexicographically positive offsets with |w|_inf <= L (one entry per
// unordered pair direction).
std::vector<Coord> positive_offsets(int d, int L);

}  // namespace zsync

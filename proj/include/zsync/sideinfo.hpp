#pragma once
// Per-block heterogeneous pair observations: for every interior block and
// each of its 2d directions, three independent Gaussian observation families
// with SNR split by the parameter t — (block pairs, t*eta/|B|), (joint pairs,
// (1-t)*eta/|J|), (complement pairs, (1-t)*eta/|B\J|).  Families are
// generated directly from the ground truth with fresh keyed noise, which is
// identical in law to physically splitting one dense observation stream.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "zsync/geometry.hpp"
#include "zsync/model.hpp"
#include "zsync/rng.hpp"

namespace zsync {

enum FamilyKind { FAM_BLOCK = 0, FAM_JOINT = 1, FAM_COMPLEMENT = 2 };

struct FamilyObs {
  double snr = 0.0;  // per-pair SNR s; each obs = sqrt(s)*theta_u*theta_v + N(0,1)
  // Unordered pairs as indices into the owning block's sorted vertex list,
  // i < j, enumerated subset-canonically (for j = 1..m-1, for i = 0..j-1).
  std::vector<std::pair<int32_t, int32_t>> pairs;
  std::vector<float> obs;
};

struct BlockSideInfo {
  double t = 0.5;
  // families[block][dir][kind], blocks ordered as BlockPartition::interior
  std::vector<std::array<std::array<FamilyObs, 3>, 2 * MAX_D>> families;
};

// Splits one observation obs = signal_scale*x + Z into two independent copies
// (obs+W)/sqrt(2), (obs-W)/sqrt(2), each with signal scale signal_scale/sqrt(2)
// and unit noise.
std::pair<double, double> split_gaussian(double obs, double signal_scale, Rng& rng);

// Deterministic given inst.params.seed; throws if t is outside [0,1] or the
// observation range is too small for block pairs (range_L < 2*scale_L).
BlockSideInfo build_block_side_info(const LatticeInstance& inst, const BlockPartition& part,
                                    double t, int threads = 1);

}  // namespace zsync

#include "zsync/sideinfo.hpp"

#include <cmath>
#include <stdexcept>

#include "zsync/parallel.hpp"

namespace zsync {

std::pair<double, double> split_gaussian(double obs, double signal_scale, Rng& rng) {
  (void)signal_scale;  // documents the input law; the transform is scale-free
  double w = rng.gauss();
  const double inv_rt2 = 0.7071067811865475244;
  return {(obs + w) * inv_rt2, (obs - w) * inv_rt2};
}

namespace {

// Builds one family on `subset` (indices into the lattice) with the given
// per-pair SNR, storing pairs as indices into the block vertex list.
FamilyObs make_family(const LatticeInstance& inst, const std::vector<int32_t>& block,
                      const std::vector<int32_t>& subset, double snr, Rng rng) {
  FamilyObs fam;
  fam.snr = snr;
  const size_t m = subset.size();
  fam.pairs.reserve(m * (m - 1) / 2);
  fam.obs.reserve(m * (m - 1) / 2);
  // map subset members to block-local indices (both lists sorted ascending)
  std::vector<int32_t> local(m);
  {
    size_t pos = 0;
    for (size_t i = 0; i < m; ++i) {
      while (pos < block.size() && block[pos] < subset[i]) ++pos;
      local[i] = int32_t(pos);  // subset is contained in block
    }
  }
  const double root = std::sqrt(snr);
  for (size_t j = 1; j < m; ++j) {
    int sj = inst.theta_at(subset[j]);
    for (size_t i = 0; i < j; ++i) {
      fam.pairs.emplace_back(local[i], local[j]);
      double y = root * inst.theta_at(subset[i]) * sj + rng.gauss();
      fam.obs.push_back(float(y));
    }
  }
  return fam;
}

}  // namespace

BlockSideInfo build_block_side_info(const LatticeInstance& inst, const BlockPartition& part,
                                    double t, int threads) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t: split parameter must be in [0, 1]");
  if (inst.params.d != part.d || inst.params.n != part.n)
    throw std::invalid_argument("partition does not match the instance box");
  if (inst.params.range_L < 2 * part.scale_L)
    throw std::invalid_argument(
        "range_L: observation range must cover block pairs (range_L >= 2*scale_L)");

  BlockSideInfo side;
  side.t = t;
  side.families.resize(size_t(part.block_count()));
  const double eta = inst.params.eta;
  const uint64_t seed = inst.params.seed;
  const int d = part.d;

  parallel_for(part.block_count(), threads, [&](int64_t bi) {
    const Coord a = part.interior[size_t(bi)];
    const auto& block = part.block_verts[size_t(bi)];
    for (int dir = 0; dir < 2 * d; ++dir) {
      for (int kind = 0; kind < 3; ++kind) {
        const std::vector<int32_t>* subset = nullptr;
        double snr = 0.0;
        switch (kind) {
          case FAM_BLOCK:
            subset = &block;
            snr = t * eta / double(block.size());
            break;
          case FAM_JOINT:
            subset = &part.joint_verts[size_t(bi)][size_t(dir)];
            snr = (1.0 - t) * eta / double(subset->size());
            break;
          default:
            subset = &part.minus_verts[size_t(bi)][size_t(dir)];
            snr = (1.0 - t) * eta / double(subset->size());
            break;
        }
        std::vector<int64_t> key(a.begin(), a.begin() + d);
        key.push_back(dir);
        key.push_back(kind);
        Rng rng(key_hash(seed, TAG_SIDE, key));
        side.families[size_t(bi)][size_t(dir)][size_t(kind)] =
            make_family(inst, block, *subset, snr, rng);
      }
    }
  });
  return side;
}

}  // namespace zsync

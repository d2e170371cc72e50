#pragma once
// Posterior sampling machinery.  A Hamiltonian is a dense symmetric pair
// coupling plus site fields plus an additive constant:
//   H(s) = 1/2 * s'Js + b's + c,     local field  h_x = sum_j J_xj s_j + b_x,
// so flipping site x changes H by exactly -2 s_x h_x.  The constant gathers
// the -SNR/2 and -lambda/2 observation terms: it never affects sampling but
// is part of logZ and the free-energy paths.  Builders assemble the
// one-block / two-block posteriors (edge observations at inverse temperature
// beta plus the split side-information families) and generic region
// posteriors (edge + ranged pair observations + scalar channel).

#include <cstdint>
#include <vector>

#include "zsync/geometry.hpp"
#include "zsync/model.hpp"
#include "zsync/rng.hpp"
#include "zsync/sideinfo.hpp"

namespace zsync {

struct Hamiltonian {
  int nsites = 0;
  std::vector<double> J;       // nsites*nsites, symmetric, zero diagonal
  std::vector<double> b;       // site fields
  double const_offset = 0.0;   // additive constant, included in energy/logZ
  std::vector<int32_t> region; // backing lattice vertices (empty if synthetic)

  void init(int n) {
    nsites = n;
    J.assign(size_t(n) * n, 0.0);
    b.assign(size_t(n), 0.0);
    const_offset = 0.0;
  }
  double Jat(int i, int j) const { return J[size_t(i) * nsites + j]; }
  void add_pair(int i, int j, double coeff) {
    J[size_t(i) * nsites + j] += coeff;
    J[size_t(j) * nsites + i] += coeff;
  }
  double energy(const std::vector<int8_t>& s) const;
  double local_field(const std::vector<int8_t>& s, int x) const;
};

// y_u = sqrt(lambda)*theta_u + z_u for every lattice vertex.
struct ScalarChannel {
  double lambda = 0.0;
  std::vector<float> y;
};
ScalarChannel make_scalar_channel(const LatticeInstance& inst, double lambda);

// Homogeneous Gaussian pair observations on all unordered pairs of a region
// with per-pair SNR snr: Y_ij = sqrt(snr)*theta_i*theta_j + Z_ij.  Used by the
// box-level free-energy estimates; drawn fresh, keyed by the region tag.
struct RegionPairObs {
  double snr = 0.0;
  std::vector<float> obs;  // canonical order: for j in 1..m-1, for i in 0..j-1
};
RegionPairObs make_region_pair_obs(const LatticeInstance& inst, const std::vector<int32_t>& region,
                                   double snr, int64_t obs_key);

// Generic region posterior: nearest-neighbor edge observations within the
// region (requires p > 0), plus optional homogeneous pair observations, plus
// an optional scalar channel.  Pass nullptr to omit a term.
Hamiltonian build_region_hamiltonian(const LatticeInstance& inst, const std::vector<int32_t>& region,
                                     const RegionPairObs* pair_obs, const ScalarChannel* scalar);

// One-block / two-block posteriors: edge observations within the region plus
// all side-information families of the block(s).
Hamiltonian build_block_hamiltonian(const LatticeInstance& inst, const BlockPartition& part,
                                    const BlockSideInfo& side, int64_t block);
Hamiltonian build_two_block_hamiltonian(const LatticeInstance& inst, const BlockPartition& part,
                                        const BlockSideInfo& side, int64_t b1, int64_t b2);

// Systematic-scan heat-bath chain with cached local fields.
struct Chain {
  const Hamiltonian* ham = nullptr;
  std::vector<int8_t> spins;
  std::vector<double> fields;
  Rng rng;
  int64_t sweeps_done = 0;

  Chain(const Hamiltonian& h, Rng r);
  void rebuild_fields();
  void sweep();
};

constexpr int64_t DEFAULT_BURN_IN_SWEEPS = 500;

struct BlockSample {
  std::vector<int32_t> region;  // lattice vertex ids, sorted
  std::vector<int8_t> spins;    // aligned with region
  int64_t sweeps = 0;
};

// Runs a fresh chain for `sweeps` systematic sweeps and returns the final
// state (one approximate posterior sample).
BlockSample run_chain(const Hamiltonian& ham, int64_t sweeps, Rng rng);

BlockSample sample_block_posterior(const LatticeInstance& inst, const BlockPartition& part,
                                   const BlockSideInfo& side, int64_t block, int64_t sweeps,
                                   Rng rng);
BlockSample sample_two_block_posterior(const LatticeInstance& inst, const BlockPartition& part,
                                       const BlockSideInfo& side, int64_t b1, int64_t b2,
                                       int64_t sweeps, Rng rng);

struct ExactPosterior {
  std::vector<double> pair_means;  // nsites*nsites, diagonal = 1
  std::vector<double> site_means;
  double log_z = 0.0;  // ln sum_s 2^-n exp(H(s))
  double pair(int i, int j) const { return pair_means[size_t(i) * site_means.size() + j]; }
};

// Full enumeration over all 2^n states (Gray-code order); requires n <= 22.
ExactPosterior exact_posterior(const Hamiltonian& ham);

}  // namespace zsync

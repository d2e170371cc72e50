#pragma once
// Renormalized synchronization instance on the block lattice: one posterior
// sample per interior block, block spins theta~_B = sign(<theta^B, theta>_B),
// edge variables Y~_{B,B'} = sign(<theta^B, theta^B'>_joint), and the
// empirical effective noise p^ (fraction of edges where Y~ disagrees with
// theta~_B theta~_B').  Ties in every sign are broken to +1.

#include <cstdint>
#include <string>
#include <vector>

#include "zsync/gibbs.hpp"
#include "zsync/stats.hpp"

namespace zsync {

inline int8_t sign_pm(int64_t s) { return s >= 0 ? int8_t(1) : int8_t(-1); }

struct RenormInstance {
  std::vector<BlockSample> block_samples;  // per interior block, partition order
  std::vector<int8_t> tilde_theta;         // per block
  std::vector<int8_t> tilde_Y;             // per partition edge, edges order
  double p_hat = 0.0;
  double delta_hat = 0.0;  // 1 - 2 p_hat
};

// Samples every interior block posterior independently (chain streams keyed by
// (rep, block)) and builds the renormalized variables against ground truth.
RenormInstance renormalize(const LatticeInstance& inst, const BlockPartition& part,
                           const BlockSideInfo& side, int64_t sweeps, int threads = 1,
                           int64_t rep = 0);

// Recomputes tilde_theta / tilde_Y / p_hat / delta_hat from r.block_samples.
// Checks the exact identity sum_edges Y~ theta~ theta~' = |edges| - 2k where k
// is the disagreement count (throws logic_error on violation).
void rebuild_renorm_vars(const LatticeInstance& inst, const BlockPartition& part,
                         RenormInstance& r);

struct OverlapReport {
  std::vector<double> m_block;  // M_B per block: (1/|B|) <theta^B, theta>
  std::vector<double> m_core;   // same restricted to the core
  std::vector<double> w;        // per edge: (1/|J|) <theta^B, theta^B'>_J
  Estimate m2;                  // E[M_B^2] over blocks, bootstrap se
  Estimate m2_var;              // Var(M_B^2)
  Estimate w2;                  // E[W^2] over edges
  Estimate w2_var;              // Var(W^2)
  Estimate wmm;                 // E[W M_B M_B'] over edges
};

OverlapReport overlap_report(const RenormInstance& r, const LatticeInstance& inst,
                             const BlockPartition& part, uint64_t boot_seed = 1);

// One row per block-lattice edge (coords, axis, Y~, agreement, W) and one per
// block (coords, theta~, M_B, M_core).
void dump_renorm_csv(const RenormInstance& r, const OverlapReport& rep,
                     const BlockPartition& part, const std::string& edge_path,
                     const std::string& block_path);

struct EffectiveNoiseRow {
  int scale_L = 0;
  double p_hat = 0.0;  // pooled over reps (per-edge Bernoulli)
  double se = 0.0;
  int64_t edges = 0;          // total edge draws across reps
  int64_t disagreements = 0;  // pooled count
  std::vector<double> per_instance;  // p^ of each repetition
};

// Monte Carlo effective noise per scale: `reps` fresh instances at each L in
// `scales` (all divisible by 6), pooled disagreement counts.  reps must be
// positive; the box/side-info ranges must accommodate every scale.
std::vector<EffectiveNoiseRow> effective_noise_curve(const ModelParams& params,
                                                     const std::vector<int>& scales,
                                                     int64_t reps, int64_t sweeps,
                                                     double t = 0.5, int threads = 1);

}  // namespace zsync

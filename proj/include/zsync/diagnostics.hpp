#pragma once
// Monte Carlo diagnostics on top of the posterior samplers: reconstruction
// risk, replica overlap moments, posterior-consistency checks, overlap
// locking deficits, the pair-correlation matrix spectrum, scalar-channel
// free-energy curves, the variational comparison between lattice and scalar
// free energies, and end-to-end threshold scans of the full pipeline.
//
// Sampling convention: every estimator draws from independent chain *pairs*
// (two chains per pair, keyed streams), records `samples` states per chain
// separated by `gap` sweeps after `burn` burn-in sweeps, and reports standard
// errors combining an outer bootstrap over pairs with inner batch-means per
// pair series.

#include <cstdint>
#include <functional>
#include <vector>

#include "zsync/geometry.hpp"
#include "zsync/gibbs.hpp"
#include "zsync/model.hpp"
#include "zsync/multiscale.hpp"
#include "zsync/renorm.hpp"
#include "zsync/sideinfo.hpp"
#include "zsync/stats.hpp"

namespace zsync {

// ------------------------------------------------------------- replica pairs

struct ReplicaPlan {
  int pairs = 8;        // independent chain pairs
  int samples = 40;     // recorded states per chain
  int64_t burn = DEFAULT_BURN_IN_SWEEPS;
  int64_t gap = 2;      // sweeps between recorded states
  int threads = 1;
};

// All recorded states of every chain pair, written to fixed slots so the
// result is identical for any thread count.
struct ReplicaSamples {
  int64_t nsites = 0;
  int pairs = 0;
  int samples = 0;
  std::vector<int8_t> a;  // [pair][sample][site]
  std::vector<int8_t> b;

  const int8_t* at_a(int t, int s) const {
    return a.data() + (size_t(t) * samples + s) * nsites;
  }
  const int8_t* at_b(int t, int s) const {
    return b.data() + (size_t(t) * samples + s) * nsites;
  }
  int total_states() const { return 2 * pairs * samples; }
};

ReplicaSamples run_replica_pairs(const Hamiltonian& ham, const ReplicaPlan& plan, uint64_t key);

// Mean and combined se of a per-(pair,sample) statistic: batch means within
// each pair series, bootstrap across pairs.
Estimate replica_estimate(const std::vector<std::vector<double>>& series, uint64_t boot_key);

// ----------------------------------------------------------------- regions

// Sorted flat vertex ids of `sub` within the lattice box; throws if sub is
// not contained in it.
std::vector<int32_t> box_region(const Box& lattice_box, const Box& sub);

// Centered cube region of the given odd side.
std::vector<int32_t> centered_region(const Box& lattice_box, int d, int side);

// Grid {0, lo, ..., hi} with `count` total points, geometric between lo and
// hi.  Requires 0 < lo < hi and count >= 3.
std::vector<double> geometric_grid_with_zero(double lo, double hi, int count);

// --------------------------------------------------------------------- risk

// Pair estimator functional: T(u, v) in [-1, 1] on ordered lattice vertex
// pairs (flat ids), T(u, u) = 1 expected but not enforced.
using PairEstimator = std::function<double(int64_t, int64_t)>;

struct RiskEstimate {
  Estimate value;
  int64_t pairs_used = 0;
  bool exact = false;
};

// Mean of T(u,v) * theta_u theta_v over ordered pairs (diagonal included).
// Exact double sum when sample_pairs == 0 and |Lambda|^2 <= 10^6; otherwise
// uniform pair subsampling with `sample_pairs` draws (required for larger
// boxes), se = sd/sqrt(m).
RiskEstimate risk(const LatticeInstance& inst, const PairEstimator& T,
                  int64_t sample_pairs = 0, uint64_t key = 0);

PairEstimator plug_in_truth(const LatticeInstance& inst);

// The pipeline estimator: T(u,v) = T~(B_u,B_v) * s_u s_v where s is the
// per-vertex posterior sample of the owning block (joints resolved by the
// partition's canonical owner) and T~ the multiscale pair estimate; 0 when
// either vertex is uncovered.
PairEstimator pipeline_estimator(const LatticeInstance& inst, const BlockPartition& part,
                                 const RenormInstance& r, const SyncResult& sync);

// Exact full-box risk of the pipeline estimator in O(|Lambda|) via the
// product form of the multiscale pair estimates.
double pipeline_risk_exact(const LatticeInstance& inst, const BlockPartition& part,
                           const RenormInstance& r, const SyncResult& sync);

// -------------------------------------------------------- pair correlations

struct CorrelationEstimate {
  Estimate phi_e;      // (1/|A|^2) sum_xy E<theta_x theta_y>^2
  Estimate phi_v;      // (1/|A|)   sum_x  E<theta_x>^2
  double q_star_sq = 0.0;  // finite-size overlap-squared estimate (= phi_e)
  int replicas = 0;        // independent chain pairs used
};

// Region posterior with edge observations at inst.params.p plus optional
// homogeneous pair observations (per-pair SNR eta/|A|, keyed by obs_key) and
// an optional scalar channel at lambda.  Estimators are two-replica products.
CorrelationEstimate region_correlation(const LatticeInstance& inst,
                                       const std::vector<int32_t>& region, double eta,
                                       double lambda, const ReplicaPlan& plan, uint64_t key,
                                       int64_t obs_key = 0);

// Spec entry point: the instance's own eta, no scalar channel.
inline CorrelationEstimate pair_correlation(const LatticeInstance& inst,
                                            const std::vector<int32_t>& region,
                                            const ReplicaPlan& plan, uint64_t key = 0) {
  return region_correlation(inst, region, inst.params.eta, 0.0, plan, key);
}

// Small-eta extrapolation of phi_e to eta -> 0 (weighted least squares line
// through 2-3 points), reported alongside the raw values.
struct QStarExtrapolation {
  std::vector<double> etas;
  std::vector<Estimate> phi_e;
  Estimate extrapolated;  // intercept at eta = 0
};

QStarExtrapolation q_star_extrapolate(const LatticeInstance& inst,
                                      const std::vector<int32_t>& region,
                                      const std::vector<double>& etas, const ReplicaPlan& plan,
                                      uint64_t key = 0);

// --------------------------------------------------- posterior consistency

// Compares replica-replica overlaps R_{1,2} with replica-truth overlaps
// R_{1,0} under the region posterior: first two moments with z-scores plus a
// two-sample Kolmogorov-Smirnov statistic.  The agreement of the two laws
// holds averaged over the observation disorder, not per instance, so the
// check draws `instances` fresh keyed instances (the outer error unit) and
// pools.  beta_multiplier != 1 rescales the edge couplings to break the
// agreement on purpose.
struct NishimoriReport {
  Estimate r12_mean, r10_mean;
  Estimate r12_sq, r10_sq;
  double mean_z = 0.0;  // |r12_mean - r10_mean| / combined se
  double sq_z = 0.0;
  double ks = 0.0;    // two-sample KS distance over pooled values
  double ks_z = 0.0;  // sqrt(n m / (n + m)) * ks, inflated by autocorrelation
  int n12 = 0, n10 = 0;
  int instances = 0;
};

NishimoriReport nishimori_check(const ModelParams& params, const Box& region_box, int instances,
                                const ReplicaPlan& plan, double beta_multiplier = 1.0,
                                uint64_t key = 0);

// Exact disorder-averaged moments by enumerating all edge flip patterns of
// the region (gauge-reduced to the all-plus ground truth) with exact
// posterior means per pattern.  Edge-observation channel only; requires at
// most 20 internal edges and at most 22 sites.  First moments vanish
// identically by spin-flip symmetry; the discriminating identity is
// r12_sq == r10_sq, exact iff the posterior temperature matches the channel.
struct NishimoriExact {
  double r12 = 0.0, r10 = 0.0;        // E<R_12>, E<R_10>
  double r12_sq = 0.0, r10_sq = 0.0;  // E<R_12^2>, E<R_10^2>
};

NishimoriExact nishimori_exact(const LatticeInstance& inst, const std::vector<int32_t>& region,
                               double beta_multiplier = 1.0);

// ------------------------------------------------------------------ locking

// alpha (R_joint - R_block)^2 + (1 - alpha) (R_rest - R_block)^2 for one
// replica pair; index lists select positions within the sample arrays.
double locking_value(const int8_t* s1, const int8_t* s2, const std::vector<int32_t>& block_ix,
                     const std::vector<int32_t>& joint_ix, const std::vector<int32_t>& rest_ix,
                     double alpha);

// Deficits under the one-block posterior on B and the two-block posterior on
// B u B', for an adjacent pair; both vanish as the scale grows.
struct LockingDeficit {
  Estimate one_block;
  Estimate two_block;
  double alpha = 0.0;  // |B n B'| / |B|
};

LockingDeficit locking_deficit(const LatticeInstance& inst, const BlockPartition& part,
                               const BlockSideInfo& side, int64_t b1, int64_t b2,
                               const ReplicaPlan& plan, uint64_t key = 0);

// ----------------------------------------------------------- susceptibility

// Empirical pair-correlation matrix chi = (1/(m |A|)) sum_i s^i (s^i)' over
// all recorded states of the two-block posterior; spectrum via the m x m
// Gram matrix.  opnorm <= tr(chi^3)^{1/3} <= tr(chi^2)^{1/2} holds exactly
// (power iteration converges from below).
struct SusceptibilityReport {
  int m = 0;
  int64_t nsites = 0;
  double tr2 = 0.0, tr3 = 0.0, opnorm = 0.0;
  double slack_lower = 0.0;  // tr3^{1/3} - opnorm
  double slack_upper = 0.0;  // tr2^{1/2} - tr3^{1/3}
  bool sandwich_ok = false;  // both slacks >= -1e-9
};

SusceptibilityReport susceptibility(const LatticeInstance& inst, const BlockPartition& part,
                                    const BlockSideInfo& side, int64_t b1, int64_t b2,
                                    const ReplicaPlan& plan, uint64_t key = 0);

SusceptibilityReport susceptibility_of_samples(const ReplicaSamples& samples);

// -------------------------------------------------------------- free energy

// Scalar-channel free-energy differences on a region: integrand is half the
// site overlap phi_v at each lambda, integrated by trapezoid from 0.
//   f_diff(lambda) = f(lambda) - f(0)       (grid[0] must be 0)
//   f_chan(lambda) = f_diff(lambda) + lambda/2
// disc_err is a half-resolution Richardson estimate of the discretization
// error of f_diff at each grid point.
struct FreeEnergyCurve {
  std::vector<double> lambda;
  std::vector<Estimate> integrand;  // phi_v / 2
  std::vector<Estimate> f_diff;
  std::vector<Estimate> f_chan;
  std::vector<double> disc_err;
  int replicas = 0;
};

// Draws a fresh instance at `params` and estimates the curve on `region`;
// channel noise is independent across grid points so the trapezoid error
// propagation (which assumes independent integrand errors) is honest.
FreeEnergyCurve free_energy_scalar(const ModelParams& params, const std::vector<int32_t>& region,
                                   const std::vector<double>& lambda_grid,
                                   const ReplicaPlan& plan, uint64_t key = 0);

// --------------------------------------------------------------- variational

// Left side: integral over [0, eta] of (1/4) phi_e under the region posterior
// with homogeneous pair observations.  Right side: max over q_grid of
// f_diff(eta q) - eta q^2 / 4 from the scalar-channel curve.  At matching
// volumes the two sides agree up to finite-size effects.
struct VariationalReport {
  double eta = 0.0;
  Estimate lhs, rhs;
  double q_opt = 0.0;
  double lhs_disc = 0.0, rhs_disc = 0.0;
  std::vector<double> eta_grid;
  std::vector<Estimate> phi_e;
  std::vector<double> q_grid;
  std::vector<Estimate> rhs_values;
};

VariationalReport variational_check(const ModelParams& params, const std::vector<int32_t>& region,
                                    double eta, const std::vector<double>& q_grid,
                                    const ReplicaPlan& plan, uint64_t key = 0);

// ----------------------------------------------------------- threshold scan

struct ThresholdRow {
  double p = 0.0, delta = 0.0;
  Estimate risk_value;  // full pipeline risk, exact per repetition
  Estimate p_hat;       // pooled renormalized-edge disagreement rate
  int reps = 0;
};

struct ThresholdScan {
  std::vector<ThresholdRow> rows;
};

// End-to-end pipeline (instance -> side info -> block posteriors -> multiscale
// synchronization -> vertex pair estimator) at each p in p_grid, `reps`
// repetitions with fresh keyed seeds.
ThresholdScan threshold_scan(const ModelParams& base, const std::vector<double>& p_grid,
                             int scale_L, int reps, int64_t sweeps, int threads = 1,
                             uint64_t key = 0);

// Two-sample Kolmogorov-Smirnov distance (inputs need not be sorted).
double ks_distance(std::vector<double> xs, std::vector<double> ys);

}  // namespace zsync

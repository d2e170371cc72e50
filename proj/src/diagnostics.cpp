#include "zsync/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>

#include "zsync/parallel.hpp"
#include "zsync/rng.hpp"

namespace zsync {

namespace {

double overlap(const int8_t* s1, const int8_t* s2, int64_t n) {
  int64_t acc = 0;
  for (int64_t i = 0; i < n; ++i) acc += int64_t(s1[i]) * s2[i];
  return double(acc) / double(n);
}

double overlap_at(const int8_t* s1, const int8_t* s2, const std::vector<int32_t>& ix) {
  if (ix.empty()) return 0.0;
  int64_t acc = 0;
  for (int32_t i : ix) acc += int64_t(s1[i]) * s2[i];
  return double(acc) / double(ix.size());
}

// Positions of `subset` (sorted lattice ids) within `region` (sorted ids).
std::vector<int32_t> positions_in(const std::vector<int32_t>& region,
                                  const std::vector<int32_t>& subset) {
  std::vector<int32_t> out;
  out.reserve(subset.size());
  for (int32_t v : subset) {
    auto it = std::lower_bound(region.begin(), region.end(), v);
    if (it == region.end() || *it != v)
      throw std::logic_error("positions_in: subset vertex not in region");
    out.push_back(int32_t(it - region.begin()));
  }
  return out;
}

// Trapezoid cumulative value at index j using only every other grid point.
double coarse_cumulative(const std::vector<double>& x, const std::vector<double>& y, size_t j) {
  double total = 0.0;
  size_t k = 0;
  while (k < j) {
    size_t next = std::min(k + 2, j);
    total += 0.5 * (x[next] - x[k]) * (y[k] + y[next]);
    k = next;
  }
  return total;
}

struct PipelineState {
  std::vector<int8_t> spin_of;   // owner-block posterior sample per vertex, 0 uncovered
  std::vector<int32_t> owner;
  std::vector<int8_t> tilde;     // accumulated multiscale sign per block
};

std::shared_ptr<PipelineState> make_pipeline_state(const LatticeInstance& inst,
                                                   const BlockPartition& part,
                                                   const RenormInstance& r,
                                                   const SyncResult& sync) {
  auto st = std::make_shared<PipelineState>();
  int64_t nv = inst.vertex_count();
  st->spin_of.assign(size_t(nv), 0);
  st->owner = part.owner;
  int64_t nb = part.block_count();
  if (int64_t(r.block_samples.size()) != nb)
    throw std::invalid_argument("pipeline risk: sample count does not match partition");
  for (int64_t b = 0; b < nb; ++b) {
    const BlockSample& bs = r.block_samples[size_t(b)];
    for (size_t i = 0; i < bs.region.size(); ++i) {
      int32_t v = bs.region[i];
      if (part.owner[size_t(v)] == b) st->spin_of[size_t(v)] = bs.spins[i];
    }
  }
  // The pair estimate between blocks factorizes through the deepest
  // accumulated sign: ancestors above the meeting level contribute squared
  // (hence trivial) factors.
  st->tilde.assign(size_t(nb), 1);
  if (sync.h.K > 0) {
    const std::vector<int8_t>& wt = sync.state.w_tilde.at(size_t(sync.h.K - 1));
    if (int64_t(wt.size()) != nb)
      throw std::invalid_argument("pipeline risk: synchronization does not match partition");
    st->tilde = wt;
  }
  return st;
}

}  // namespace

// --------------------------------------------------------------- replica pairs

ReplicaSamples run_replica_pairs(const Hamiltonian& ham, const ReplicaPlan& plan, uint64_t key) {
  if (plan.pairs < 1 || plan.samples < 1) throw std::invalid_argument("replica plan: pairs and samples must be positive");
  if (plan.burn < 0 || plan.gap < 1) throw std::invalid_argument("replica plan: burn >= 0 and gap >= 1 required");
  ReplicaSamples out;
  out.nsites = ham.nsites;
  out.pairs = plan.pairs;
  out.samples = plan.samples;
  out.a.assign(size_t(plan.pairs) * plan.samples * ham.nsites, 0);
  out.b.assign(size_t(plan.pairs) * plan.samples * ham.nsites, 0);
  parallel_for(plan.pairs, plan.threads, [&](int64_t t) {
    for (int side = 0; side < 2; ++side) {
      Chain chain(ham, Rng(key_hash(key, TAG_CHAIN, {2 * t + side})));
      for (int64_t i = 0; i < plan.burn; ++i) chain.sweep();
      std::vector<int8_t>& dst = side == 0 ? out.a : out.b;
      for (int s = 0; s < plan.samples; ++s) {
        for (int64_t g = 0; g < plan.gap; ++g) chain.sweep();
        std::memcpy(dst.data() + (size_t(t) * plan.samples + s) * ham.nsites,
                    chain.spins.data(), size_t(ham.nsites));
      }
    }
  });
  return out;
}

Estimate replica_estimate(const std::vector<std::vector<double>>& series, uint64_t boot_key) {
  std::vector<double> values, inner;
  values.reserve(series.size());
  inner.reserve(series.size());
  for (const auto& s : series) {
    values.push_back(mean_of(s));
    int batches = int(std::min<size_t>(20, s.size() / 2));
    inner.push_back(batches >= 2 ? batch_means_se(s, batches) : 0.0);
  }
  return combine_reps(values, inner, boot_key);
}

// -------------------------------------------------------------------- regions

std::vector<int32_t> box_region(const Box& lattice_box, const Box& sub) {
  if (sub.d != lattice_box.d) throw std::invalid_argument("box_region: dimension mismatch");
  std::vector<int32_t> out;
  out.reserve(size_t(sub.size()));
  for (int64_t i = 0; i < sub.size(); ++i) {
    Coord c = sub.coord(i);
    if (!lattice_box.contains(c)) throw std::invalid_argument("box_region: sub box not contained in lattice box");
    out.push_back(int32_t(lattice_box.index(c)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int32_t> centered_region(const Box& lattice_box, int d, int side) {
  if (side < 1 || side % 2 == 0) throw std::invalid_argument("centered_region: side must be odd and positive");
  return box_region(lattice_box, Box::centered(d, (side - 1) / 2));
}

std::vector<double> geometric_grid_with_zero(double lo, double hi, int count) {
  if (!(0.0 < lo && lo < hi) || count < 3)
    throw std::invalid_argument("geometric_grid_with_zero: need 0 < lo < hi and count >= 3");
  std::vector<double> out;
  out.push_back(0.0);
  int n = count - 1;
  for (int k = 0; k < n; ++k)
    out.push_back(lo * std::pow(hi / lo, double(k) / double(n - 1)));
  out.back() = hi;
  return out;
}

// ----------------------------------------------------------------------- risk

RiskEstimate risk(const LatticeInstance& inst, const PairEstimator& T, int64_t sample_pairs,
                  uint64_t key) {
  RiskEstimate out;
  int64_t nv = inst.vertex_count();
  if (sample_pairs == 0) {
    if (nv * nv > 1000000)
      throw std::invalid_argument("risk: box too large for exact summation, pass sample_pairs");
    double acc = 0.0;
    for (int64_t u = 0; u < nv; ++u) {
      double tu = double(inst.theta_at(u));
      for (int64_t v = 0; v < nv; ++v)
        acc += T(u, v) * tu * double(inst.theta_at(v));
    }
    out.value.value = acc / (double(nv) * double(nv));
    out.value.se = 0.0;
    out.pairs_used = nv * nv;
    out.exact = true;
    return out;
  }
  if (sample_pairs < 2) throw std::invalid_argument("risk: sample_pairs must be 0 (exact) or >= 2");
  Rng rng(key_hash(inst.params.seed, TAG_SUBSAMPLE, {int64_t(key)}));
  std::vector<double> draws;
  draws.reserve(size_t(sample_pairs));
  for (int64_t i = 0; i < sample_pairs; ++i) {
    int64_t u = int64_t(rng.below(uint64_t(nv)));
    int64_t v = int64_t(rng.below(uint64_t(nv)));
    draws.push_back(T(u, v) * double(inst.theta_at(u)) * double(inst.theta_at(v)));
  }
  out.value.value = mean_of(draws);
  out.value.se = sem_of(draws);
  out.pairs_used = sample_pairs;
  out.exact = false;
  return out;
}

PairEstimator plug_in_truth(const LatticeInstance& inst) {
  const LatticeInstance* p = &inst;
  return [p](int64_t u, int64_t v) { return double(p->theta_at(u)) * double(p->theta_at(v)); };
}

PairEstimator pipeline_estimator(const LatticeInstance& inst, const BlockPartition& part,
                                 const RenormInstance& r, const SyncResult& sync) {
  auto st = make_pipeline_state(inst, part, r, sync);
  return [st](int64_t u, int64_t v) {
    int32_t bu = st->owner[size_t(u)], bv = st->owner[size_t(v)];
    if (bu < 0 || bv < 0) return 0.0;
    return double(st->tilde[size_t(bu)]) * double(st->tilde[size_t(bv)]) *
           double(st->spin_of[size_t(u)]) * double(st->spin_of[size_t(v)]);
  };
}

double pipeline_risk_exact(const LatticeInstance& inst, const BlockPartition& part,
                           const RenormInstance& r, const SyncResult& sync) {
  auto st = make_pipeline_state(inst, part, r, sync);
  int64_t nv = inst.vertex_count();
  double total = 0.0;
  std::vector<double> block_sum(size_t(part.block_count()), 0.0);
  for (int64_t v = 0; v < nv; ++v) {
    int32_t b = st->owner[size_t(v)];
    if (b >= 0) block_sum[size_t(b)] += double(st->spin_of[size_t(v)]) * double(inst.theta_at(v));
  }
  for (int64_t b = 0; b < part.block_count(); ++b)
    total += double(st->tilde[size_t(b)]) * block_sum[size_t(b)];
  return (total * total) / (double(nv) * double(nv));
}

// ------------------------------------------------------------ pair correlations

CorrelationEstimate region_correlation(const LatticeInstance& inst,
                                       const std::vector<int32_t>& region, double eta,
                                       double lambda, const ReplicaPlan& plan, uint64_t key,
                                       int64_t obs_key) {
  if (eta < 0 || lambda < 0) throw std::invalid_argument("region_correlation: eta and lambda must be >= 0");
  RegionPairObs po;
  ScalarChannel sc;
  if (eta > 0) po = make_region_pair_obs(inst, region, eta / double(region.size()), obs_key);
  if (lambda > 0) {
    // Fresh noise per obs_key so estimates at different channel strengths
    // carry independent errors (the error propagation downstream assumes it).
    sc.lambda = lambda;
    sc.y.resize(size_t(inst.vertex_count()));
    for (int64_t v = 0; v < inst.vertex_count(); ++v) {
      Rng r = keyed_rng(inst.params.seed, TAG_SCALAR, {v, obs_key});
      sc.y[size_t(v)] = float(std::sqrt(lambda) * inst.theta_at(v) + r.gauss());
    }
  }
  Hamiltonian ham = build_region_hamiltonian(inst, region, eta > 0 ? &po : nullptr,
                                             lambda > 0 ? &sc : nullptr);
  ReplicaSamples rs = run_replica_pairs(ham, plan, key);
  std::vector<std::vector<double>> se_series(size_t(plan.pairs)), sv_series(size_t(plan.pairs));
  for (int t = 0; t < plan.pairs; ++t) {
    se_series[size_t(t)].reserve(size_t(plan.samples));
    sv_series[size_t(t)].reserve(size_t(plan.samples));
    for (int s = 0; s < plan.samples; ++s) {
      double r = overlap(rs.at_a(t, s), rs.at_b(t, s), rs.nsites);
      se_series[size_t(t)].push_back(r * r);
      sv_series[size_t(t)].push_back(r);
    }
  }
  CorrelationEstimate out;
  out.phi_e = replica_estimate(se_series, key_hash(key, TAG_BOOTSTRAP, {1}));
  out.phi_v = replica_estimate(sv_series, key_hash(key, TAG_BOOTSTRAP, {2}));
  out.q_star_sq = out.phi_e.value;
  out.replicas = plan.pairs;
  return out;
}

QStarExtrapolation q_star_extrapolate(const LatticeInstance& inst,
                                      const std::vector<int32_t>& region,
                                      const std::vector<double>& etas, const ReplicaPlan& plan,
                                      uint64_t key) {
  if (etas.empty()) throw std::invalid_argument("q_star_extrapolate: need at least one eta");
  QStarExtrapolation out;
  out.etas = etas;
  for (size_t i = 0; i < etas.size(); ++i)
    out.phi_e.push_back(region_correlation(inst, region, etas[i], 0.0, plan,
                                           key_hash(key, TAG_MISC, {int64_t(i)}), int64_t(i))
                            .phi_e);
  if (etas.size() == 1) {
    out.extrapolated = out.phi_e[0];
    return out;
  }
  // Weighted least-squares line phi_e(eta) ~ a + b eta; report a.
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (size_t i = 0; i < etas.size(); ++i) {
    double se = std::max(out.phi_e[i].se, 1e-12);
    double w = 1.0 / (se * se);
    double x = etas[i], y = out.phi_e[i].value;
    sw += w; swx += w * x; swy += w * y; swxx += w * x * x; swxy += w * x * y;
  }
  double det = sw * swxx - swx * swx;
  out.extrapolated.value = (swxx * swy - swx * swxy) / det;
  out.extrapolated.se = std::sqrt(swxx / det);
  return out;
}

// ------------------------------------------------------- posterior consistency

double ks_distance(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  size_t i = 0, j = 0;
  double sup = 0.0;
  while (i < xs.size() && j < ys.size()) {
    // both empirical CDFs must clear the full tie group before comparison
    double v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] == v) ++i;
    while (j < ys.size() && ys[j] == v) ++j;
    sup = std::max(sup, std::fabs(double(i) / xs.size() - double(j) / ys.size()));
  }
  return sup;
}

NishimoriReport nishimori_check(const ModelParams& params, const Box& region_box, int instances,
                                const ReplicaPlan& plan, double beta_multiplier, uint64_t key) {
  if (instances < 2) throw std::invalid_argument("nishimori_check: need at least two instances");
  double eta = params.eta;
  std::vector<std::vector<double>> s12, s12sq, s10, s10sq;
  s12.resize(size_t(instances));
  s12sq.resize(size_t(instances));
  s10.resize(size_t(instances));
  s10sq.resize(size_t(instances));
  std::vector<double> flat12, flat10;
  for (int ins = 0; ins < instances; ++ins) {
    ModelParams mp = params;
    mp.seed = key_hash(params.seed, TAG_REP, {1300, ins, int64_t(key)});
    LatticeInstance inst = generate_instance(mp);
    std::vector<int32_t> region = box_region(inst.box, region_box);
    RegionPairObs po;
    if (eta > 0) po = make_region_pair_obs(inst, region, eta / double(region.size()), ins);
    Hamiltonian ham = build_region_hamiltonian(inst, region, eta > 0 ? &po : nullptr, nullptr);
    if (beta_multiplier != 1.0) {
      Hamiltonian edges = build_region_hamiltonian(inst, region, nullptr, nullptr);
      for (size_t i = 0; i < ham.J.size(); ++i) ham.J[i] += (beta_multiplier - 1.0) * edges.J[i];
    }
    ReplicaSamples rs = run_replica_pairs(ham, plan, key_hash(key, TAG_MISC, {500, ins}));

    std::vector<int8_t> truth(region.size());
    for (size_t i = 0; i < region.size(); ++i) truth[i] = inst.theta_at(region[i]);

    for (int t = 0; t < plan.pairs; ++t) {
      for (int s = 0; s < plan.samples; ++s) {
        double r12 = overlap(rs.at_a(t, s), rs.at_b(t, s), rs.nsites);
        s12[size_t(ins)].push_back(r12);
        s12sq[size_t(ins)].push_back(r12 * r12);
        flat12.push_back(r12);
        double ra = overlap(rs.at_a(t, s), truth.data(), rs.nsites);
        double rb = overlap(rs.at_b(t, s), truth.data(), rs.nsites);
        s10[size_t(ins)].push_back(ra);
        s10sq[size_t(ins)].push_back(ra * ra);
        s10[size_t(ins)].push_back(rb);
        s10sq[size_t(ins)].push_back(rb * rb);
        flat10.push_back(ra);
        flat10.push_back(rb);
      }
    }
  }
  NishimoriReport out;
  out.instances = instances;
  out.r12_mean = replica_estimate(s12, key_hash(key, TAG_BOOTSTRAP, {11}));
  out.r12_sq = replica_estimate(s12sq, key_hash(key, TAG_BOOTSTRAP, {12}));
  out.r10_mean = replica_estimate(s10, key_hash(key, TAG_BOOTSTRAP, {13}));
  out.r10_sq = replica_estimate(s10sq, key_hash(key, TAG_BOOTSTRAP, {14}));
  out.mean_z = std::fabs(out.r12_mean.value - out.r10_mean.value) /
               std::max(quadrature(out.r12_mean.se, out.r10_mean.se), 1e-300);
  out.sq_z = std::fabs(out.r12_sq.value - out.r10_sq.value) /
             std::max(quadrature(out.r12_sq.se, out.r10_sq.se), 1e-300);
  out.n12 = int(flat12.size());
  out.n10 = int(flat10.size());
  out.ks = ks_distance(flat12, flat10);
  out.ks_z = std::sqrt(double(out.n12) * out.n10 / double(out.n12 + out.n10)) * out.ks;
  return out;
}

NishimoriExact nishimori_exact(const LatticeInstance& inst, const std::vector<int32_t>& region,
                               double beta_multiplier) {
  int m = int(region.size());
  if (m < 2 || m > 22) throw std::invalid_argument("nishimori_exact: region must have 2..22 sites");
  // Internal nearest-neighbor edges as position pairs.
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < m; ++i) {
    Coord c = inst.box.coord(region[size_t(i)]);
    for (int axis = 0; axis < inst.params.d; ++axis) {
      Coord nb = c;
      nb[size_t(axis)] += 1;
      if (!inst.box.contains(nb)) continue;
      int32_t v = int32_t(inst.box.index(nb));
      auto it = std::lower_bound(region.begin(), region.end(), v);
      if (it != region.end() && *it == v)
        edges.push_back({i, int(it - region.begin())});
    }
  }
  int ne = int(edges.size());
  if (ne > 20) throw std::invalid_argument("nishimori_exact: too many internal edges (max 20)");
  double p = inst.params.p;
  double beta = beta_multiplier * inst.params.beta();
  NishimoriExact out;
  // Gauge reduction: with the all-plus truth, each flip pattern has
  // probability p^k (1-p)^(ne-k) and observation -1 exactly on flipped edges.
  for (uint64_t mask = 0; mask < (uint64_t(1) << ne); ++mask) {
    int flips = int(__builtin_popcountll(mask));
    double prob = std::pow(p, flips) * std::pow(1.0 - p, ne - flips);
    Hamiltonian ham;
    ham.init(m);
    for (int e = 0; e < ne; ++e) {
      double y = (mask >> e) & 1 ? -1.0 : 1.0;
      ham.add_pair(edges[size_t(e)].first, edges[size_t(e)].second, beta * y);
    }
    ExactPosterior ex = exact_posterior(ham);
    double sum_m = 0, sum_m2 = 0, sum_p = 0, sum_p2 = 0;
    for (int i = 0; i < m; ++i) {
      sum_m += ex.site_means[size_t(i)];
      sum_m2 += ex.site_means[size_t(i)] * ex.site_means[size_t(i)];
      for (int j = 0; j < m; ++j) {
        double pm = ex.pair(i, j);
        sum_p += pm;       // <R_10^2> term: pair mean times theta theta' = pm
        sum_p2 += pm * pm; // <R_12^2> term: product over independent replicas
      }
    }
    out.r10 += prob * sum_m / m;
    out.r12 += prob * sum_m2 / m;
    out.r10_sq += prob * sum_p / (double(m) * m);
    out.r12_sq += prob * sum_p2 / (double(m) * m);
  }
  return out;
}

// --------------------------------------------------------------------- locking

double locking_value(const int8_t* s1, const int8_t* s2, const std::vector<int32_t>& block_ix,
                     const std::vector<int32_t>& joint_ix, const std::vector<int32_t>& rest_ix,
                     double alpha) {
  double rb = overlap_at(s1, s2, block_ix);
  double rj = overlap_at(s1, s2, joint_ix);
  double rr = overlap_at(s1, s2, rest_ix);
  return alpha * (rj - rb) * (rj - rb) + (1.0 - alpha) * (rr - rb) * (rr - rb);
}

LockingDeficit locking_deficit(const LatticeInstance& inst, const BlockPartition& part,
                               const BlockSideInfo& side, int64_t b1, int64_t b2,
                               const ReplicaPlan& plan, uint64_t key) {
  // Orient the pair so b2 = b1 + e_axis.
  int axis = -1;
  for (int a = 0; a < part.d; ++a) {
    if (part.interior[size_t(b2)][size_t(a)] == part.interior[size_t(b1)][size_t(a)] + 1)
      axis = a;
  }
  if (axis < 0) {
    std::swap(b1, b2);
    for (int a = 0; a < part.d; ++a) {
      if (part.interior[size_t(b2)][size_t(a)] == part.interior[size_t(b1)][size_t(a)] + 1)
        axis = a;
    }
  }
  int64_t l1 = 0;
  for (int a = 0; a < part.d; ++a)
    l1 += std::llabs(int64_t(part.interior[size_t(b2)][size_t(a)]) -
                     int64_t(part.interior[size_t(b1)][size_t(a)]));
  if (axis < 0 || l1 != 1) throw std::invalid_argument("locking_deficit: blocks must be adjacent");

  const std::vector<int32_t>& blk = part.block_verts[size_t(b1)];
  const std::vector<int32_t>& joint = part.joint_verts[size_t(b1)][size_t(2 * axis)];
  const std::vector<int32_t>& rest = part.minus_verts[size_t(b1)][size_t(2 * axis)];
  double alpha = double(joint.size()) / double(blk.size());

  LockingDeficit out;
  out.alpha = alpha;

  Hamiltonian one = build_block_hamiltonian(inst, part, side, b1);
  {
    std::vector<int32_t> all(blk.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = int32_t(i);
    std::vector<int32_t> jix = positions_in(one.region, joint);
    std::vector<int32_t> rix = positions_in(one.region, rest);
    ReplicaSamples rs = run_replica_pairs(one, plan, key_hash(key, TAG_MISC, {1}));
    std::vector<std::vector<double>> series(size_t(plan.pairs));
    for (int t = 0; t < plan.pairs; ++t)
      for (int s = 0; s < plan.samples; ++s)
        series[size_t(t)].push_back(
            locking_value(rs.at_a(t, s), rs.at_b(t, s), all, jix, rix, alpha));
    out.one_block = replica_estimate(series, key_hash(key, TAG_BOOTSTRAP, {21}));
  }

  Hamiltonian two = build_two_block_hamiltonian(inst, part, side, b1, b2);
  {
    std::vector<int32_t> bix = positions_in(two.region, blk);
    std::vector<int32_t> jix = positions_in(two.region, joint);
    std::vector<int32_t> rix = positions_in(two.region, rest);
    ReplicaSamples rs = run_replica_pairs(two, plan, key_hash(key, TAG_MISC, {2}));
    std::vector<std::vector<double>> series(size_t(plan.pairs));
    for (int t = 0; t < plan.pairs; ++t)
      for (int s = 0; s < plan.samples; ++s)
        series[size_t(t)].push_back(
            locking_value(rs.at_a(t, s), rs.at_b(t, s), bix, jix, rix, alpha));
    out.two_block = replica_estimate(series, key_hash(key, TAG_BOOTSTRAP, {22}));
  }
  return out;
}

// ---------------------------------------------------------------- susceptibility

SusceptibilityReport susceptibility_of_samples(const ReplicaSamples& samples) {
  int m = samples.total_states();
  int64_t n = samples.nsites;
  if (m < 1 || n < 1) throw std::invalid_argument("susceptibility: empty sample set");
  std::vector<const int8_t*> states;
  states.reserve(size_t(m));
  for (int t = 0; t < samples.pairs; ++t)
    for (int s = 0; s < samples.samples; ++s) states.push_back(samples.at_a(t, s));
  for (int t = 0; t < samples.pairs; ++t)
    for (int s = 0; s < samples.samples; ++s) states.push_back(samples.at_b(t, s));

  // Gram matrix of the states; chi shares its nonzero spectrum up to the
  // 1/(m n) normalization.
  std::vector<double> G(size_t(m) * m, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      int64_t acc = 0;
      for (int64_t x = 0; x < n; ++x) acc += int64_t(states[size_t(i)][x]) * states[size_t(j)][x];
      G[size_t(i) * m + j] = double(acc);
      G[size_t(j) * m + i] = double(acc);
    }
  }
  double c = 1.0 / (double(m) * double(n));
  double tr2 = 0.0;
  for (double g : G) tr2 += g * g;
  tr2 *= c * c;
  // tr(G^3) via H = G^2 then sum H .* G.
  std::vector<double> H(size_t(m) * m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      double gik = G[size_t(i) * m + k];
      if (gik == 0.0) continue;
      const double* grow = &G[size_t(k) * m];
      double* hrow = &H[size_t(i) * m];
      for (int j = 0; j < m; ++j) hrow[j] += gik * grow[j];
    }
  double tr3 = 0.0;
  for (size_t i = 0; i < G.size(); ++i) tr3 += H[i] * G[i];
  tr3 *= c * c * c;

  // Power iteration on G from a fixed pseudo-random start vector.
  Rng rng(key_hash(0x5eedULL, TAG_MISC, {int64_t(m), n}));
  std::vector<double> v(size_t(m), 0.0);
  double norm = 0.0;
  for (int i = 0; i < m; ++i) {
    v[size_t(i)] = rng.gauss();
    norm += v[size_t(i)] * v[size_t(i)];
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  double lam = 0.0;
  std::vector<double> w(size_t(m), 0.0);
  for (int it = 0; it < 2000; ++it) {
    for (int i = 0; i < m; ++i) {
      double acc = 0.0;
      const double* grow = &G[size_t(i) * m];
      for (int j = 0; j < m; ++j) acc += grow[j] * v[size_t(j)];
      w[size_t(i)] = acc;
    }
    double wn = 0.0;
    for (double x : w) wn += x * x;
    wn = std::sqrt(wn);
    if (wn == 0.0) { lam = 0.0; break; }
    double next = wn;  // Rayleigh quotient of the normalized iterate
    for (int i = 0; i < m; ++i) v[size_t(i)] = w[size_t(i)] / wn;
    if (it > 4 && std::fabs(next - lam) <= 1e-13 * std::max(1.0, next)) { lam = next; break; }
    lam = next;
  }

  SusceptibilityReport out;
  out.m = m;
  out.nsites = n;
  out.tr2 = tr2;
  out.tr3 = tr3;
  out.opnorm = c * lam;
  out.slack_lower = std::cbrt(tr3) - out.opnorm;
  out.slack_upper = std::sqrt(tr2) - std::cbrt(tr3);
  out.sandwich_ok = out.slack_lower >= -1e-9 && out.slack_upper >= -1e-9;
  return out;
}

SusceptibilityReport susceptibility(const LatticeInstance& inst, const BlockPartition& part,
                                    const BlockSideInfo& side, int64_t b1, int64_t b2,
                                    const ReplicaPlan& plan, uint64_t key) {
  Hamiltonian two = build_two_block_hamiltonian(inst, part, side, b1, b2);
  return susceptibility_of_samples(run_replica_pairs(two, plan, key));
}

// ------------------------------------------------------------------ free energy

FreeEnergyCurve free_energy_scalar(const ModelParams& params, const std::vector<int32_t>& region,
                                   const std::vector<double>& lambda_grid,
                                   const ReplicaPlan& plan, uint64_t key) {
  if (lambda_grid.size() < 2 || lambda_grid[0] != 0.0)
    throw std::invalid_argument("free_energy_scalar: grid must start at 0 with >= 2 points");
  for (size_t i = 1; i < lambda_grid.size(); ++i)
    if (!(lambda_grid[i] > lambda_grid[i - 1]))
      throw std::invalid_argument("free_energy_scalar: grid must be strictly increasing");
  LatticeInstance inst = generate_instance(params);
  FreeEnergyCurve out;
  out.lambda = lambda_grid;
  out.replicas = plan.pairs;
  std::vector<double> yv, ye;
  for (size_t i = 0; i < lambda_grid.size(); ++i) {
    CorrelationEstimate ce = region_correlation(inst, region, 0.0, lambda_grid[i], plan,
                                                key_hash(key, TAG_MISC, {int64_t(i)}),
                                                int64_t(i));
    Estimate integ{0.5 * ce.phi_v.value, 0.5 * ce.phi_v.se};
    out.integrand.push_back(integ);
    yv.push_back(integ.value);
    ye.push_back(integ.se);
  }
  IntegratedCurve cum = trapezoid_cumulative(out.lambda, yv, ye);
  for (size_t i = 0; i < lambda_grid.size(); ++i) {
    out.f_diff.push_back({cum.value[i], cum.se[i]});
    out.f_chan.push_back({cum.value[i] + 0.5 * lambda_grid[i], cum.se[i]});
    out.disc_err.push_back(std::fabs(cum.value[i] - coarse_cumulative(out.lambda, yv, i)));
  }
  return out;
}

// ------------------------------------------------------------------ variational

VariationalReport variational_check(const ModelParams& params, const std::vector<int32_t>& region,
                                    double eta, const std::vector<double>& q_grid,
                                    const ReplicaPlan& plan, uint64_t key) {
  if (eta < 0) throw std::invalid_argument("variational_check: eta must be >= 0");
  if (q_grid.empty() || q_grid[0] != 0.0)
    throw std::invalid_argument("variational_check: q_grid must start at 0");
  VariationalReport out;
  out.eta = eta;
  out.q_grid = q_grid;
  if (eta == 0.0) {
    out.eta_grid = {0.0};
    out.rhs_values.assign(q_grid.size(), Estimate{});
    return out;  // both sides vanish identically
  }
  LatticeInstance inst = generate_instance(params);

  // Left side: eta-integral of phi_e / 4 on a uniform grid.
  const int ETA_POINTS = 12;
  std::vector<double> yv, ye;
  for (int i = 0; i < ETA_POINTS; ++i) {
    double e = eta * double(i) / double(ETA_POINTS - 1);
    out.eta_grid.push_back(e);
    CorrelationEstimate ce = region_correlation(inst, region, e, 0.0, plan,
                                                key_hash(key, TAG_MISC, {100 + int64_t(i)}),
                                                int64_t(i));
    out.phi_e.push_back(ce.phi_e);
    yv.push_back(0.25 * ce.phi_e.value);
    ye.push_back(0.25 * ce.phi_e.se);
  }
  IntegratedCurve cum = trapezoid_cumulative(out.eta_grid, yv, ye);
  out.lhs = {cum.value.back(), cum.se.back()};
  out.lhs_disc = std::fabs(cum.value.back() -
                           coarse_cumulative(out.eta_grid, yv, out.eta_grid.size() - 1));

  // Right side: scalar curve at the lambda targets eta * q, refined with a
  // geometric fill so the trapezoid integration is accurate near 0.
  double lam_max = eta * q_grid.back();
  std::vector<double> grid;
  for (double q : q_grid) grid.push_back(eta * q);
  if (lam_max > 0) {
    std::vector<double> fill = geometric_grid_with_zero(lam_max / 512.0, lam_max, 14);
    grid.insert(grid.end(), fill.begin(), fill.end());
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [&](double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, lam_max); }),
             grid.end());
  FreeEnergyCurve curve = free_energy_scalar(params, region, grid, plan,
                                             key_hash(key, TAG_MISC, {777}));
  size_t best = 0;
  for (size_t j = 0; j < q_grid.size(); ++j) {
    double target = eta * q_grid[j];
    size_t ix = size_t(std::lower_bound(grid.begin(), grid.end(),
                                        target - 1e-12 * std::max(1.0, lam_max)) -
                       grid.begin());
    Estimate val{curve.f_diff[ix].value - eta * q_grid[j] * q_grid[j] / 4.0, curve.f_diff[ix].se};
    out.rhs_values.push_back(val);
    if (val.value > out.rhs_values[best].value) best = j;
  }
  out.q_opt = q_grid[best];
  out.rhs = out.rhs_values[best];
  {
    double target = eta * q_grid[best];
    size_t ix = size_t(std::lower_bound(grid.begin(), grid.end(),
                                        target - 1e-12 * std::max(1.0, lam_max)) -
                       grid.begin());
    out.rhs_disc = curve.disc_err[ix];
  }
  return out;
}

// --------------------------------------------------------------- threshold scan

ThresholdScan threshold_scan(const ModelParams& base, const std::vector<double>& p_grid,
                             int scale_L, int reps, int64_t sweeps, int threads, uint64_t key) {
  if (reps < 1) throw std::invalid_argument("threshold_scan: reps must be positive");
  if (p_grid.empty()) throw std::invalid_argument("threshold_scan: empty p grid");
  BlockPartition part = build_partition(base.n, base.d, scale_L);
  Hierarchy h = build_hierarchy(part, 1);
  ThresholdScan out;
  for (size_t pi = 0; pi < p_grid.size(); ++pi) {
    ModelParams params = base;
    params.p = p_grid[pi];
    params.validate();
    ThresholdRow row;
    row.p = params.p;
    row.delta = params.delta();
    row.reps = reps;
    std::vector<double> risks, zeros;
    int64_t pooled_k = 0, pooled_m = 0;
    for (int rep = 0; rep < reps; ++rep) {
      params.seed = key_hash(base.seed, TAG_REP, {int64_t(pi), rep, int64_t(key)});
      LatticeInstance inst = generate_instance(params);
      BlockSideInfo side = build_block_side_info(inst, part, 0.5, threads);
      RenormInstance r = renormalize(inst, part, side, sweeps, threads, rep);
      SyncResult sync = synchronize(r, part, h);
      risks.push_back(pipeline_risk_exact(inst, part, r, sync));
      zeros.push_back(0.0);
      int64_t edges = int64_t(part.edges.size());
      pooled_k += llround(r.p_hat * double(edges));
      pooled_m += edges;
    }
    row.risk_value = combine_reps(risks, zeros, key_hash(key, TAG_BOOTSTRAP, {int64_t(pi)}));
    row.p_hat = pooled_bernoulli(pooled_k, pooled_m);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace zsync

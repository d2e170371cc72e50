#include "zsync/renorm.hpp"

#include <stdexcept>

#include "zsync/csvio.hpp"
#include "zsync/parallel.hpp"

namespace zsync {

// Dot product of the two samples' spins over `sub`, a sorted subset of both
// regions.
// Position of sorted subset element v, advancing a running cursor.
static size_t advance_to(const std::vector<int32_t>& region, size_t& i, int32_t v) {
  while (i < region.size() && region[i] != v) ++i;
  if (i == region.size())
    throw std::invalid_argument("block_samples: sample region does not cover its block");
  return i;
}

static int64_t joint_dot(const std::vector<int32_t>& sub, const BlockSample& s1,
                         const BlockSample& s2) {
  int64_t acc = 0;
  size_t i1 = 0, i2 = 0;
  for (int32_t v : sub)
    acc += int64_t(s1.spins[advance_to(s1.region, i1, v)]) *
           int64_t(s2.spins[advance_to(s2.region, i2, v)]);
  return acc;
}

static int64_t truth_dot(const std::vector<int32_t>& sub, const BlockSample& s,
                         const LatticeInstance& inst) {
  int64_t acc = 0;
  size_t i = 0;
  for (int32_t v : sub)
    acc += int64_t(s.spins[advance_to(s.region, i, v)]) * int64_t(inst.theta_at(v));
  return acc;
}

void rebuild_renorm_vars(const LatticeInstance& inst, const BlockPartition& part,
                         RenormInstance& r) {
  const int64_t nb = part.block_count();
  if (int64_t(r.block_samples.size()) != nb)
    throw std::invalid_argument("block_samples: expected one sample per interior block");
  r.tilde_theta.assign(size_t(nb), 1);
  for (int64_t b = 0; b < nb; ++b)
    r.tilde_theta[size_t(b)] = sign_pm(truth_dot(part.block_verts[size_t(b)],
                                                 r.block_samples[size_t(b)], inst));

  const size_t ne = part.edges.size();
  r.tilde_Y.assign(ne, 1);
  int64_t disagree = 0, ysum = 0;
  for (size_t e = 0; e < ne; ++e) {
    const auto& ed = part.edges[e];
    const auto& joint = part.joint_verts[size_t(ed.b1)][2 * ed.axis];
    int8_t y = sign_pm(joint_dot(joint, r.block_samples[size_t(ed.b1)],
                                 r.block_samples[size_t(ed.b2)]));
    r.tilde_Y[e] = y;
    int prod = int(y) * r.tilde_theta[size_t(ed.b1)] * r.tilde_theta[size_t(ed.b2)];
    ysum += prod;
    if (prod < 0) ++disagree;
  }
  if (ne == 0) {
    r.p_hat = 0.0;
    r.delta_hat = 1.0;
    return;
  }
  // sum of Y~ theta~ theta~' over edges must equal |edges| - 2k exactly
  if (ysum != int64_t(ne) - 2 * disagree)
    throw std::logic_error("renormalized edge identity violated");
  r.p_hat = double(disagree) / double(ne);
  r.delta_hat = 1.0 - 2.0 * r.p_hat;
}

RenormInstance renormalize(const LatticeInstance& inst, const BlockPartition& part,
                           const BlockSideInfo& side, int64_t sweeps, int threads,
                           int64_t rep) {
  RenormInstance r;
  const int64_t nb = part.block_count();
  r.block_samples.resize(size_t(nb));
  parallel_for(nb, threads, [&](int64_t b) {
    Rng rng(key_hash(inst.params.seed, TAG_CHAIN, {rep, b}));
    r.block_samples[size_t(b)] = sample_block_posterior(inst, part, side, b, sweeps, rng);
  });
  rebuild_renorm_vars(inst, part, r);
  return r;
}

OverlapReport overlap_report(const RenormInstance& r, const LatticeInstance& inst,
                             const BlockPartition& part, uint64_t boot_seed) {
  const int64_t nb = part.block_count();
  OverlapReport rep;
  rep.m_block.resize(size_t(nb));
  rep.m_core.resize(size_t(nb));
  for (int64_t b = 0; b < nb; ++b) {
    const auto& s = r.block_samples[size_t(b)];
    rep.m_block[size_t(b)] = double(truth_dot(part.block_verts[size_t(b)], s, inst)) /
                             double(part.block_verts[size_t(b)].size());
    rep.m_core[size_t(b)] = double(truth_dot(part.core_verts[size_t(b)], s, inst)) /
                            double(part.core_verts[size_t(b)].size());
  }
  const size_t ne = part.edges.size();
  rep.w.resize(ne);
  std::vector<double> w2(ne), wmm(ne);
  for (size_t e = 0; e < ne; ++e) {
    const auto& ed = part.edges[e];
    const auto& joint = part.joint_verts[size_t(ed.b1)][2 * ed.axis];
    double wv = double(joint_dot(joint, r.block_samples[size_t(ed.b1)],
                                 r.block_samples[size_t(ed.b2)])) /
                double(joint.size());
    rep.w[e] = wv;
    w2[e] = wv * wv;
    wmm[e] = wv * rep.m_block[size_t(ed.b1)] * rep.m_block[size_t(ed.b2)];
  }
  std::vector<double> m2(size_t(nb), 0.0);
  for (int64_t b = 0; b < nb; ++b) m2[size_t(b)] = rep.m_block[size_t(b)] * rep.m_block[size_t(b)];

  auto var_stat = [](const std::vector<double>& xs) { return var_of(xs); };
  rep.m2 = {mean_of(m2), bootstrap_se(m2, boot_seed)};
  rep.m2_var = {var_of(m2), bootstrap_stat_se(m2, var_stat, boot_seed + 1)};
  rep.w2 = {mean_of(w2), bootstrap_se(w2, boot_seed + 2)};
  rep.w2_var = {var_of(w2), bootstrap_stat_se(w2, var_stat, boot_seed + 3)};
  rep.wmm = {mean_of(wmm), bootstrap_se(wmm, boot_seed + 4)};
  return rep;
}

void dump_renorm_csv(const RenormInstance& r, const OverlapReport& rep,
                     const BlockPartition& part, const std::string& edge_path,
                     const std::string& block_path) {
  const int d = part.d;
  std::vector<std::string> hdr;
  for (int i = 0; i < d; ++i) hdr.push_back("a1_" + std::to_string(i));
  for (int i = 0; i < d; ++i) hdr.push_back("a2_" + std::to_string(i));
  hdr.insert(hdr.end(), {"axis", "tilde_Y", "agreement", "w"});
  CsvWriter edges(edge_path, hdr);
  for (size_t e = 0; e < part.edges.size(); ++e) {
    const auto& ed = part.edges[e];
    std::vector<std::string> row;
    for (int i = 0; i < d; ++i) row.push_back(std::to_string(part.interior[size_t(ed.b1)][i]));
    for (int i = 0; i < d; ++i) row.push_back(std::to_string(part.interior[size_t(ed.b2)][i]));
    int agree = int(r.tilde_Y[e]) * r.tilde_theta[size_t(ed.b1)] * r.tilde_theta[size_t(ed.b2)];
    row.push_back(std::to_string(int(ed.axis)));
    row.push_back(std::to_string(int(r.tilde_Y[e])));
    row.push_back(std::to_string(agree));
    row.push_back(fmt_double(rep.w[e]));
    edges.row(row);
  }

  std::vector<std::string> bhdr;
  for (int i = 0; i < d; ++i) bhdr.push_back("a_" + std::to_string(i));
  bhdr.insert(bhdr.end(), {"tilde_theta", "m_block", "m_core"});
  CsvWriter blocks(block_path, bhdr);
  for (int64_t b = 0; b < part.block_count(); ++b) {
    std::vector<std::string> row;
    for (int i = 0; i < d; ++i) row.push_back(std::to_string(part.interior[size_t(b)][i]));
    row.push_back(std::to_string(int(r.tilde_theta[size_t(b)])));
    row.push_back(fmt_double(rep.m_block[size_t(b)]));
    row.push_back(fmt_double(rep.m_core[size_t(b)]));
    blocks.row(row);
  }
}

std::vector<EffectiveNoiseRow> effective_noise_curve(const ModelParams& params,
                                                     const std::vector<int>& scales,
                                                     int64_t reps, int64_t sweeps,
                                                     double t, int threads) {
  if (reps <= 0) throw std::invalid_argument("reps: must be positive");
  std::vector<EffectiveNoiseRow> table;
  for (size_t si = 0; si < scales.size(); ++si) {
    int L = scales[si];
    BlockPartition part = build_partition(params.n, params.d, L);
    EffectiveNoiseRow row;
    row.scale_L = L;
    for (int64_t rep = 0; rep < reps; ++rep) {
      ModelParams q = params;
      q.seed = key_hash(params.seed, TAG_REP, {int64_t(L), rep});
      LatticeInstance inst = generate_instance(q);
      BlockSideInfo side = build_block_side_info(inst, part, t, threads);
      RenormInstance r = renormalize(inst, part, side, sweeps, threads);
      int64_t ne = int64_t(part.edges.size());
      int64_t k = 0;
      for (size_t e = 0; e < part.edges.size(); ++e) {
        const auto& ed = part.edges[e];
        if (int(r.tilde_Y[e]) * r.tilde_theta[size_t(ed.b1)] * r.tilde_theta[size_t(ed.b2)] < 0)
          ++k;
      }
      row.edges += ne;
      row.disagreements += k;
      row.per_instance.push_back(r.p_hat);
    }
    Estimate e = pooled_bernoulli(row.disagreements, row.edges);
    row.p_hat = e.value;
    row.se = e.se;
    table.push_back(std::move(row));
  }
  return table;
}

}  // namespace zsync

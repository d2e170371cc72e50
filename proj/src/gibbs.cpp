#include "zsync/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zsync {

double Hamiltonian::energy(const std::vector<int8_t>& s) const {
  double e = const_offset;
  for (int i = 0; i < nsites; ++i) {
    double h = 0.0;
    const double* row = J.data() + size_t(i) * nsites;
    for (int j = 0; j < i; ++j) h += row[j] * s[size_t(j)];
    e += s[size_t(i)] * (h + b[size_t(i)]);
  }
  return e;
}

double Hamiltonian::local_field(const std::vector<int8_t>& s, int x) const {
  if (x < 0 || x >= nsites) throw std::out_of_range("x: site outside the region");
  double h = b[size_t(x)];
  const double* row = J.data() + size_t(x) * nsites;
  for (int j = 0; j < nsites; ++j) h += row[j] * s[size_t(j)];
  return h;
}

ScalarChannel make_scalar_channel(const LatticeInstance& inst, double lambda) {
  if (lambda < 0) throw std::invalid_argument("lambda: scalar-channel SNR must be >= 0");
  ScalarChannel ch;
  ch.lambda = lambda;
  const double root = std::sqrt(lambda);
  ch.y.resize(size_t(inst.vertex_count()));
  for (int64_t v = 0; v < inst.vertex_count(); ++v) {
    Rng rng = keyed_rng(inst.params.seed, TAG_SCALAR, {v});
    ch.y[size_t(v)] = float(root * inst.theta_at(v) + rng.gauss());
  }
  return ch;
}

RegionPairObs make_region_pair_obs(const LatticeInstance& inst, const std::vector<int32_t>& region,
                                   double snr, int64_t obs_key) {
  if (snr < 0) throw std::invalid_argument("snr: pair-observation SNR must be >= 0");
  RegionPairObs po;
  po.snr = snr;
  const size_t m = region.size();
  po.obs.reserve(m * (m - 1) / 2);
  const double root = std::sqrt(snr);
  Rng rng = keyed_rng(inst.params.seed, TAG_REGION_GOE, {obs_key});
  for (size_t j = 1; j < m; ++j) {
    int sj = inst.theta_at(region[j]);
    for (size_t i = 0; i < j; ++i)
      po.obs.push_back(float(root * inst.theta_at(region[i]) * sj + rng.gauss()));
  }
  return po;
}

namespace {

// Adds beta * Y_uv couplings for every nearest-neighbor pair inside the region.
void add_lattice_term(Hamiltonian& ham, const LatticeInstance& inst,
                      const std::vector<int32_t>& region) {
  const double beta = beta_of(inst.params.p);
  const Box& bx = inst.box;
  const int d = inst.params.d;
  for (size_t i = 0; i < region.size(); ++i) {
    Coord c = bx.coord(region[i]);
    for (int ax = 0; ax < d; ++ax) {
      Coord c2 = c;
      ++c2[ax];
      if (!bx.contains(c2)) continue;
      int64_t v = bx.index(c2);
      auto it = std::lower_bound(region.begin(), region.end(), int32_t(v));
      if (it == region.end() || *it != int32_t(v)) continue;
      int j = int(it - region.begin());
      ham.add_pair(int(i), j, beta * inst.edge_sign(region[i], ax));
    }
  }
}

void add_family(Hamiltonian& ham, const FamilyObs& fam, const std::vector<int>& to_region) {
  if (fam.snr == 0.0) {
    // zero coupling; only the (zero) constant would change
    return;
  }
  const double root = std::sqrt(fam.snr);
  for (size_t k = 0; k < fam.pairs.size(); ++k) {
    int i = to_region[size_t(fam.pairs[k].first)];
    int j = to_region[size_t(fam.pairs[k].second)];
    ham.add_pair(i, j, root * fam.obs[k]);
  }
  ham.const_offset -= 0.5 * fam.snr * double(fam.pairs.size());
}

}  // namespace

Hamiltonian build_region_hamiltonian(const LatticeInstance& inst, const std::vector<int32_t>& region,
                                     const RegionPairObs* pair_obs, const ScalarChannel* scalar) {
  if (region.empty()) throw std::invalid_argument("region: empty vertex set");
  if (!std::is_sorted(region.begin(), region.end()))
    throw std::invalid_argument("region: vertex list must be sorted");
  Hamiltonian ham;
  ham.init(int(region.size()));
  ham.region = region;
  add_lattice_term(ham, inst, region);
  if (pair_obs) {
    if (pair_obs->obs.size() != region.size() * (region.size() - 1) / 2)
      throw std::invalid_argument("pair observations do not match the region size");
    const double root = std::sqrt(pair_obs->snr);
    size_t k = 0;
    for (size_t j = 1; j < region.size(); ++j)
      for (size_t i = 0; i < j; ++i, ++k) ham.add_pair(int(i), int(j), root * pair_obs->obs[k]);
    ham.const_offset -= 0.5 * pair_obs->snr * double(pair_obs->obs.size());
  }
  if (scalar) {
    const double root = std::sqrt(scalar->lambda);
    for (size_t i = 0; i < region.size(); ++i) {
      ham.b[i] += root * scalar->y[size_t(region[i])];
      ham.const_offset -= 0.5 * scalar->lambda;
    }
  }
  return ham;
}

Hamiltonian build_block_hamiltonian(const LatticeInstance& inst, const BlockPartition& part,
                                    const BlockSideInfo& side, int64_t block) {
  if (block < 0 || block >= part.block_count())
    throw std::invalid_argument("block: not an interior block");
  const auto& region = part.block_verts[size_t(block)];
  Hamiltonian ham;
  ham.init(int(region.size()));
  ham.region = region;
  add_lattice_term(ham, inst, region);
  // block-local indices are region indices here
  std::vector<int> ident(region.size());
  for (size_t i = 0; i < ident.size(); ++i) ident[i] = int(i);
  for (int dir = 0; dir < 2 * part.d; ++dir)
    for (int kind = 0; kind < 3; ++kind)
      add_family(ham, side.families[size_t(block)][size_t(dir)][size_t(kind)], ident);
  return ham;
}

Hamiltonian build_two_block_hamiltonian(const LatticeInstance& inst, const BlockPartition& part,
                                        const BlockSideInfo& side, int64_t b1, int64_t b2) {
  if (b1 < 0 || b1 >= part.block_count() || b2 < 0 || b2 >= part.block_count() || b1 == b2)
    throw std::invalid_argument("block pair: need two distinct interior blocks");
  const auto& v1 = part.block_verts[size_t(b1)];
  const auto& v2 = part.block_verts[size_t(b2)];
  std::vector<int32_t> region;
  region.reserve(v1.size() + v2.size());
  std::set_union(v1.begin(), v1.end(), v2.begin(), v2.end(), std::back_inserter(region));
  Hamiltonian ham;
  ham.init(int(region.size()));
  ham.region = region;
  add_lattice_term(ham, inst, region);
  auto map_block = [&](const std::vector<int32_t>& verts) {
    std::vector<int> to_region(verts.size());
    size_t pos = 0;
    for (size_t i = 0; i < verts.size(); ++i) {
      while (region[pos] < verts[i]) ++pos;
      to_region[i] = int(pos);
    }
    return to_region;
  };
  std::vector<int> m1 = map_block(v1), m2 = map_block(v2);
  for (int dir = 0; dir < 2 * part.d; ++dir) {
    for (int kind = 0; kind < 3; ++kind) {
      add_family(ham, side.families[size_t(b1)][size_t(dir)][size_t(kind)], m1);
      add_family(ham, side.families[size_t(b2)][size_t(dir)][size_t(kind)], m2);
    }
  }
  return ham;
}

Chain::Chain(const Hamiltonian& h, Rng r) : ham(&h), rng(r) {
  spins.resize(size_t(h.nsites));
  for (auto& s : spins) s = rng.sign();
  rebuild_fields();
}

void Chain::rebuild_fields() {
  fields.assign(size_t(ham->nsites), 0.0);
  for (int x = 0; x < ham->nsites; ++x) {
    double h = ham->b[size_t(x)];
    const double* row = ham->J.data() + size_t(x) * ham->nsites;
    for (int j = 0; j < ham->nsites; ++j) h += row[j] * spins[size_t(j)];
    fields[size_t(x)] = h;
  }
}

void Chain::sweep() {
  const int n = ham->nsites;
  for (int x = 0; x < n; ++x) {
    // heat bath: P(s_x = +1) = 1 / (1 + exp(-2 h_x))
    double p_plus = 1.0 / (1.0 + std::exp(-2.0 * fields[size_t(x)]));
    int8_t snew = (rng.uniform() < p_plus) ? int8_t(1) : int8_t(-1);
    int8_t sold = spins[size_t(x)];
    if (snew != sold) {
      spins[size_t(x)] = snew;
      const double* row = ham->J.data() + size_t(x) * n;
      const double delta = 2.0 * snew;  // snew - sold
      for (int j = 0; j < n; ++j) fields[size_t(j)] += row[j] * delta;
    }
  }
  ++sweeps_done;
}

BlockSample run_chain(const Hamiltonian& ham, int64_t sweeps, Rng rng) {
  if (sweeps < 1) throw std::invalid_argument("sweeps: need at least one sweep");
  Chain chain(ham, rng);
  for (int64_t s = 0; s < sweeps; ++s) chain.sweep();
  BlockSample out;
  out.region = ham.region;
  out.spins = chain.spins;
  out.sweeps = sweeps;
  return out;
}

BlockSample sample_block_posterior(const LatticeInstance& inst, const BlockPartition& part,
                                   const BlockSideInfo& side, int64_t block, int64_t sweeps,
                                   Rng rng) {
  Hamiltonian ham = build_block_hamiltonian(inst, part, side, block);
  return run_chain(ham, sweeps, rng);
}

BlockSample sample_two_block_posterior(const LatticeInstance& inst, const BlockPartition& part,
                                       const BlockSideInfo& side, int64_t b1, int64_t b2,
                                       int64_t sweeps, Rng rng) {
  Hamiltonian ham = build_two_block_hamiltonian(inst, part, side, b1, b2);
  return run_chain(ham, sweeps, rng);
}

ExactPosterior exact_posterior(const Hamiltonian& ham) {
  const int n = ham.nsites;
  if (n < 1 || n > 22) throw std::invalid_argument("region too large for enumeration (> 22 sites)");
  const uint64_t states = 1ULL << n;

  std::vector<int8_t> s(size_t(n), int8_t(-1));
  std::vector<double> fields(size_t(n), 0.0);
  auto reset = [&]() {
    std::fill(s.begin(), s.end(), int8_t(-1));
    for (int x = 0; x < n; ++x) {
      double h = ham.b[size_t(x)];
      const double* row = ham.J.data() + size_t(x) * n;
      for (int j = 0; j < n; ++j) h += row[j] * s[size_t(j)];
      fields[size_t(x)] = h;
    }
  };
  auto flip = [&](int x, double& e) {
    e += -2.0 * s[size_t(x)] * fields[size_t(x)];
    s[size_t(x)] = int8_t(-s[size_t(x)]);
    const double* row = ham.J.data() + size_t(x) * n;
    const double delta = 2.0 * s[size_t(x)];
    for (int j = 0; j < n; ++j) fields[size_t(j)] += row[j] * delta;
  };

  // pass 1: maximum energy over all states, Gray-code order
  reset();
  double e = ham.energy(s);
  double emax = e;
  for (uint64_t i = 1; i < states; ++i) {
    flip(int(__builtin_ctzll(i)), e);
    emax = std::max(emax, e);
  }

  // pass 2: accumulate weights and moments
  ExactPosterior out;
  out.site_means.assign(size_t(n), 0.0);
  out.pair_means.assign(size_t(n) * n, 0.0);
  reset();
  e = ham.energy(s);
  double z = 0.0;
  auto accumulate = [&]() {
    double w = std::exp(e - emax);
    z += w;
    for (int x = 0; x < n; ++x) {
      double ws = w * s[size_t(x)];
      out.site_means[size_t(x)] += ws;
      double* row = out.pair_means.data() + size_t(x) * n;
      for (int y = 0; y < x; ++y) row[y] += ws * s[size_t(y)];
    }
  };
  accumulate();
  for (uint64_t i = 1; i < states; ++i) {
    flip(int(__builtin_ctzll(i)), e);
    accumulate();
  }
  for (int x = 0; x < n; ++x) {
    out.site_means[size_t(x)] /= z;
    for (int y = 0; y < x; ++y) {
      double v = out.pair_means[size_t(x) * n + y] / z;
      out.pair_means[size_t(x) * n + y] = v;
      out.pair_means[size_t(y) * n + x] = v;
    }
    out.pair_means[size_t(x) * n + x] = 1.0;
  }
  out.log_z = std::log(z) + emax - double(n) * 0.6931471805599453094;
  return out;
}

}  // namespace zsync

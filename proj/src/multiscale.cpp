#include "zsync/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zsync/csvio.hpp"

namespace zsync {

static int64_t fdiv(int64_t a, int64_t b) {  // floor division, b > 0
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

static double ipow(double x, int64_t e) {
  double r = 1.0;
  for (int64_t i = 0; i < e; ++i) r *= x;
  return r;
}

// --------------------------------------------------------------- block graph

BlockGraph to_block_graph(const RenormInstance& r, const BlockPartition& part) {
  BlockGraph g;
  g.d = part.d;
  g.box = part.block_box;
  g.theta.assign(size_t(g.box.size()), 0);
  g.edge.assign(size_t(g.box.size()) * size_t(g.d), 0);
  for (int64_t b = 0; b < part.block_count(); ++b)
    g.theta[size_t(g.box.index(part.interior[size_t(b)]))] = r.tilde_theta[size_t(b)];
  for (size_t e = 0; e < part.edges.size(); ++e) {
    const auto& ed = part.edges[e];
    int64_t v = g.box.index(part.interior[size_t(ed.b1)]);
    g.edge[size_t(v) * size_t(g.d) + size_t(ed.axis)] = r.tilde_Y[e];
  }
  g.delta_hat = r.delta_hat;
  return g;
}

BlockGraph make_synthetic_block_graph(int d, int side, double p_flip, uint64_t seed) {
  if (d < 2 || d > MAX_D) throw std::invalid_argument("d: must be in [2, 4]");
  if (side < 1 || side % 2 == 0) throw std::invalid_argument("side: must be odd and positive");
  if (p_flip < 0.0 || p_flip > 1.0) throw std::invalid_argument("p_flip: must be in [0, 1]");
  BlockGraph g;
  g.d = d;
  g.box = Box::centered(d, (side - 1) / 2);
  const int64_t nv = g.box.size();
  g.theta.resize(size_t(nv));
  g.edge.assign(size_t(nv) * size_t(d), 0);
  for (int64_t v = 0; v < nv; ++v) {
    Rng rng = keyed_rng(seed, TAG_SYNTH, {0, v});
    g.theta[size_t(v)] = rng.sign();
  }
  for (int64_t v = 0; v < nv; ++v) {
    Coord c = g.box.coord(v);
    for (int axis = 0; axis < d; ++axis) {
      Coord c2 = c;
      c2[size_t(axis)] += 1;
      if (!g.box.contains(c2)) continue;
      Rng rng = keyed_rng(seed, TAG_SYNTH, {1, v * d + axis});
      int8_t y = int8_t(g.theta[size_t(v)] * g.theta[size_t(g.box.index(c2))]);
      if (rng.uniform() < p_flip) y = int8_t(-y);
      g.edge[size_t(v) * size_t(d) + size_t(axis)] = y;
    }
  }
  g.delta_hat = 1.0 - 2.0 * p_flip;
  return g;
}

// ---------------------------------------------------------- scale conditions

ScaleReport check_scale_conditions(int kappa, int d) {
  if (kappa < 1) throw std::invalid_argument("kappa: must be >= 1");
  if (d < 2) throw std::invalid_argument("d: must be >= 2");
  ScaleReport rep;
  const double base = 2.0 * double(kappa);
  const double r = ipow(1.0 / base, d - 1);  // (2 kappa)^{-(d-1)} <= 1/2

  // First condition: polynomial times geometric.  The term ratio
  // ((k+1)/k)^{2d} (l_{k+1}/l_k)^{2d} r drops below 1 long before k = 1000
  // (r <= 1/2 and both polynomial factors tend to 1), so the supremum over
  // k <= 1000 is the supremum over all k.
  double sup = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    double term = std::pow(double(k), 2.0 * d) * std::pow(double(scale_side(kappa, k)), 2.0 * d) *
                  std::pow(base, -double(d - 1) * double(k + 5));
    sup = std::max(sup, term);
  }
  rep.a1 = sup;

  // Second condition: sum_k 1/l_k^{d-1}.  Remainder after K terms is bounded
  // by (2 kappa)^{-(d-1)} * K^{1-2(d-1)} / (2(d-1)-1) via an integral
  // comparison; K is chosen so the scaled tail is below 5e-7.
  const double c2 = 1.0 + ipow(3.0, d - 1);
  auto a2_tail_bound = [&](double K) {
    return c2 * r * std::pow(K, 1.0 - 2.0 * double(d - 1)) / (2.0 * double(d - 1) - 1.0);
  };
  int64_t K2 = 1000;
  while (a2_tail_bound(double(K2)) >= 5e-7 && K2 < (int64_t(1) << 24)) K2 *= 2;
  double s2 = 0.0;
  for (int64_t k = K2 - 1; k >= 0; --k) s2 += 1.0 / ipow(double(scale_side(kappa, k)), d - 1);
  rep.a2 = c2 * s2;
  rep.a2_tail = a2_tail_bound(double(K2));

  // Third condition: sum_k k^{2d} rho^{k+6} with rho = (2 kappa)^{-(d-1)}.
  // After K = 10000 terms the ratio of consecutive terms is at most
  // rho * ((K+1)/K)^{2d} < 1, giving a geometric remainder bound.
  const double c3 = 1.0 + ipow(3.0, d);
  const int64_t K3 = 10000;
  double s3 = 0.0;
  double last = 0.0;
  for (int64_t k = 0; k < K3; ++k) {
    last = std::pow(double(k), 2.0 * d) * std::pow(base, -double(d - 1) * double(k + 6));
    s3 += last;
  }
  double q3 = r * std::pow(double(K3 + 1) / double(K3), 2.0 * d);
  rep.a3 = c3 * s3;
  rep.a3_tail = c3 * last * q3 / (1.0 - q3);

  rep.pass1 = rep.a1 <= 0.5;
  rep.pass2 = rep.a2 + rep.a2_tail <= 1.0 / 20.0;
  rep.pass3 = rep.a3 + rep.a3_tail <= 1.0 / 42.0;
  rep.all_pass = rep.pass1 && rep.pass2 && rep.pass3;
  return rep;
}

// ------------------------------------------------------------------ hierarchy

Coord Hierarchy::parent_coord(int k, const Coord& c) const {
  const int64_t L = ell(k);
  const int64_t half = (L - 1) / 2;
  Coord q{};
  for (int i = 0; i < d; ++i) q[size_t(i)] = int32_t(fdiv(c[size_t(i)] + half, L));
  return q;
}

Coord Hierarchy::ancestor(const Coord& c, int k) const {
  const int64_t S = cell_side[size_t(k)];
  const int64_t half = (S - 1) / 2;
  Coord q{};
  for (int i = 0; i < d; ++i) q[size_t(i)] = int32_t(fdiv(c[size_t(i)] + half, S));
  return q;
}

Hierarchy build_hierarchy(const Box& block_box, int kappa) {
  if (kappa < 1) throw std::invalid_argument("kappa: must be >= 1");
  if (block_box.d < 2 || block_box.d > MAX_D)
    throw std::invalid_argument("box: dimension must be in [2, 4]");
  for (int i = 0; i < block_box.d; ++i)
    if (block_box.side(i) < 1) throw std::invalid_argument("box: empty");
  Hierarchy h;
  h.d = block_box.d;
  h.kappa = kappa;
  h.level_box.push_back(block_box);
  h.cell_side.push_back(1);
  int k = 0;
  auto single = [&](const Box& b) {
    for (int i = 0; i < b.d; ++i)
      if (b.side(i) != 1) return false;
    return true;
  };
  while (!single(h.level_box.back())) {
    const Box& cur = h.level_box.back();
    Box nxt;
    nxt.d = h.d;
    nxt.lo = h.parent_coord(k, cur.lo);
    nxt.hi = h.parent_coord(k, cur.hi);
    h.level_box.push_back(nxt);
    h.cell_side.push_back(h.cell_side.back() * h.ell(k));
    ++k;
  }
  h.K = k;
  return h;
}

// ---------------------------------------------------------------- Xi subsets

XiSet boundary_xi(const Hierarchy& h, int k, const Coord& c1, const Coord& c2) {
  const int d = h.d;
  if (k < 0 || k > h.K) throw std::invalid_argument("k: level out of range");
  int axis = -1, dirsign = 0;
  for (int i = 0; i < d; ++i) {
    int64_t diff = int64_t(c2[size_t(i)]) - int64_t(c1[size_t(i)]);
    if (diff == 0) continue;
    if ((diff != 1 && diff != -1) || axis != -1)
      throw std::invalid_argument("cells: inputs must be adjacent level-k cells");
    axis = i;
    dirsign = int(diff);
  }
  if (axis == -1) throw std::invalid_argument("cells: inputs must be adjacent level-k cells");

  const Box& blk = h.level_box[0];
  const int64_t S = h.cell_side[size_t(k)];
  const int64_t half = (S - 1) / 2;
  const int64_t face1 = int64_t(c1[size_t(axis)]) * S + (dirsign > 0 ? half : -half);

  XiSet xi;
  xi.axis = axis;
  if (face1 < blk.lo[size_t(axis)] || face1 > blk.hi[size_t(axis)]) return xi;
  Coord lo{}, hi{};
  for (int i = 0; i < d; ++i) {
    if (i == axis) {
      lo[size_t(i)] = hi[size_t(i)] = int32_t(face1);
      continue;
    }
    lo[size_t(i)] = std::max(blk.lo[size_t(i)], int32_t(int64_t(c1[size_t(i)]) * S - half));
    hi[size_t(i)] = std::min(blk.hi[size_t(i)], int32_t(int64_t(c1[size_t(i)]) * S + half));
    if (lo[size_t(i)] > hi[size_t(i)]) return xi;
  }
  Coord c = lo;
  while (true) {
    Coord b2 = c;
    b2[size_t(axis)] += dirsign;
    if (blk.contains(b2)) {
      xi.boundary_count++;
      int64_t parity = 0;
      for (int i = 0; i < d; ++i) parity += c[size_t(i)];
      if (((parity % 2) + 2) % 2 == 1)
        xi.lower.push_back(blk.index(dirsign > 0 ? c : b2));
    }
    int i = d - 1;
    for (; i >= 0; --i) {
      if (i == axis) continue;
      if (c[size_t(i)] < hi[size_t(i)]) {
        c[size_t(i)]++;
        break;
      }
      c[size_t(i)] = lo[size_t(i)];
    }
    if (i < 0) break;
  }
  return xi;
}

// -------------------------------------------------------- level construction

void level_sync_vars(MultiscaleState& state, const BlockGraph& g, const Hierarchy& h, int k) {
  const int d = h.d;
  if (k < 0 || k >= h.K) throw std::invalid_argument("k: level out of range");
  if (int(state.y.size()) != k)
    throw std::invalid_argument("state: levels must be built in order");
  const Box& box = h.level_box[size_t(k)];
  std::vector<int8_t> y(size_t(box.size()) * size_t(d), 0);

  if (k == 0) {
    for (int64_t v = 0; v < box.size(); ++v)
      for (int axis = 0; axis < d; ++axis)
        if (g.has_edge(v, axis)) y[size_t(v) * size_t(d) + size_t(axis)] = g.edge_at(v, axis);
  } else {
    const Box& blk = h.level_box[0];
    const std::vector<int8_t>& wt = state.w_tilde[size_t(k - 1)];
    for (int64_t v = 0; v < box.size(); ++v) {
      Coord c = box.coord(v);
      for (int axis = 0; axis < d; ++axis) {
        Coord c2 = c;
        c2[size_t(axis)] += 1;
        if (!box.contains(c2)) continue;
        if (!(h.parent_coord(k, c) == h.parent_coord(k, c2))) continue;
        XiSet xi = boundary_xi(h, k, c, c2);
        int64_t sum = 0;
        for (int64_t lower : xi.lower) {
          Coord bc = blk.coord(lower);
          bc[size_t(axis)] += 1;
          int64_t upper = blk.index(bc);
          sum += int64_t(g.edge_at(lower, axis)) * int64_t(wt[size_t(lower)]) *
                 int64_t(wt[size_t(upper)]);
        }
        y[size_t(v) * size_t(d) + size_t(axis)] = sign_pm(sum);
      }
    }
  }
  state.y.push_back(std::move(y));
}

void quartets_and_block_vars(MultiscaleState& state, const BlockGraph& g, const Hierarchy& h,
                             int k) {
  (void)g;
  const int d = h.d;
  if (k < 0 || k >= h.K) throw std::invalid_argument("k: level out of range");
  if (int(state.y.size()) != k + 1 || int(state.w.size()) != k)
    throw std::invalid_argument("state: levels must be built in order");
  const Box& box = h.level_box[size_t(k)];
  const Box& pbox = h.level_box[size_t(k + 1)];
  const std::vector<int8_t>& y = state.y[size_t(k)];
  std::vector<int8_t> w(size_t(box.size()), 1);
  std::vector<uint8_t> in_I(size_t(box.size()), 0);
  LevelDiag diag;

  auto yat = [&](const Coord& c, int axis) {
    return y[size_t(box.index(c)) * size_t(d) + size_t(axis)];
  };

  const int64_t Lk = h.ell(k);
  const int64_t hk = (Lk - 1) / 2;
  for (int64_t pi = 0; pi < pbox.size(); ++pi) {
    Coord P = pbox.coord(pi);
    Box cbox;  // children of P clipped to the level box
    cbox.d = d;
    for (int i = 0; i < d; ++i) {
      cbox.lo[size_t(i)] =
          std::max(box.lo[size_t(i)], int32_t(int64_t(P[size_t(i)]) * Lk - hk));
      cbox.hi[size_t(i)] =
          std::min(box.hi[size_t(i)], int32_t(int64_t(P[size_t(i)]) * Lk + hk));
    }
    const int64_t nc = cbox.size();

    // quartet pass: flag children belonging to an incoherent unit square
    std::vector<uint8_t> flagged(size_t(nc), 0);
    for (int64_t ci = 0; ci < nc; ++ci) {
      Coord c = cbox.coord(ci);
      for (int i = 0; i < d; ++i) {
        Coord cexi = c;
        cexi[size_t(i)] += 1;
        if (!cbox.contains(cexi)) continue;
        diag.edges++;  // within-parent level-k pair (c, c+e_i)
        for (int j = i + 1; j < d; ++j) {
          Coord cexj = c, cexij = cexi;
          cexj[size_t(j)] += 1;
          cexij[size_t(j)] += 1;
          if (!cbox.contains(cexj) || !cbox.contains(cexij)) continue;
          diag.quartets++;
          int prod = int(yat(c, i)) * int(yat(c, j)) * int(yat(cexi, j)) * int(yat(cexj, i));
          if (prod == -1) {
            diag.incoherent++;
            flagged[size_t(ci)] = 1;
            flagged[size_t(cbox.index(cexi))] = 1;
            flagged[size_t(cbox.index(cexj))] = 1;
            flagged[size_t(cbox.index(cexij))] = 1;
          }
        }
      }
    }

    // largest connected component of unflagged children (ties: the component
    // holding the lexicographically smallest cell)
    std::vector<int32_t> comp(size_t(nc), -1);
    int32_t ncomp = 0;
    std::vector<int64_t> comp_size;
    std::vector<Coord> comp_lexmin;
    std::vector<int64_t> queue;
    for (int64_t s = 0; s < nc; ++s) {
      if (flagged[size_t(s)] || comp[size_t(s)] >= 0) continue;
      int32_t id = ncomp++;
      comp_size.push_back(0);
      comp_lexmin.push_back(cbox.coord(s));
      queue.clear();
      queue.push_back(s);
      comp[size_t(s)] = id;
      for (size_t qi = 0; qi < queue.size(); ++qi) {
        Coord c = cbox.coord(queue[qi]);
        comp_size[size_t(id)]++;
        if (lex_less(c, comp_lexmin[size_t(id)], d)) comp_lexmin[size_t(id)] = c;
        for (int axis = 0; axis < d; ++axis)
          for (int sgn = +1; sgn >= -1; sgn -= 2) {
            Coord nb = c;
            nb[size_t(axis)] += sgn;
            if (!cbox.contains(nb)) continue;
            int64_t ni = cbox.index(nb);
            if (flagged[size_t(ni)] || comp[size_t(ni)] >= 0) continue;
            comp[size_t(ni)] = id;
            queue.push_back(ni);
          }
      }
    }
    int32_t best = -1;
    for (int32_t id = 0; id < ncomp; ++id) {
      if (best < 0 || comp_size[size_t(id)] > comp_size[size_t(best)] ||
          (comp_size[size_t(id)] == comp_size[size_t(best)] &&
           lex_less(comp_lexmin[size_t(id)], comp_lexmin[size_t(best)], d)))
        best = id;
    }
    diag.agreeable_sizes.push_back(best < 0 ? 0 : comp_size[size_t(best)]);
    if (best < 0) continue;  // every child flagged: all variables stay +1

    for (int64_t ci = 0; ci < nc; ++ci)
      if (comp[size_t(ci)] == best) in_I[size_t(box.index(cbox.coord(ci)))] = 1;

    // breadth-first propagation from the lexicographically smallest member
    std::vector<int8_t> wp(size_t(nc), 0);
    int64_t root = cbox.index(comp_lexmin[size_t(best)]);
    wp[size_t(root)] = 1;
    queue.clear();
    queue.push_back(root);
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      Coord c = cbox.coord(queue[qi]);
      int8_t wc = wp[size_t(cbox.index(c))];
      for (int axis = 0; axis < d; ++axis)
        for (int sgn = +1; sgn >= -1; sgn -= 2) {
          Coord nb = c;
          nb[size_t(axis)] += sgn;
          if (!cbox.contains(nb)) continue;
          int64_t ni = cbox.index(nb);
          if (comp[size_t(ni)] != best || wp[size_t(ni)] != 0) continue;
          int8_t ye = sgn > 0 ? yat(c, axis) : yat(nb, axis);
          wp[size_t(ni)] = int8_t(ye * wc);
          queue.push_back(ni);
        }
    }

    // verify every in-component edge; any violation resets the whole parent
    bool ok = true;
    for (int64_t ci = 0; ci < nc && ok; ++ci) {
      if (comp[size_t(ci)] != best) continue;
      Coord c = cbox.coord(ci);
      for (int axis = 0; axis < d && ok; ++axis) {
        Coord nb = c;
        nb[size_t(axis)] += 1;
        if (!cbox.contains(nb)) continue;
        int64_t ni = cbox.index(nb);
        if (comp[size_t(ni)] != best) continue;
        if (int(yat(c, axis)) != int(wp[size_t(ci)]) * int(wp[size_t(ni)])) ok = false;
      }
    }
    if (!ok) {
      diag.tree_violations++;
      continue;  // w stays +1 on every child of this parent
    }
    for (int64_t ci = 0; ci < nc; ++ci)
      if (comp[size_t(ci)] == best) w[size_t(box.index(cbox.coord(ci)))] = wp[size_t(ci)];
  }

  state.w.push_back(std::move(w));
  state.in_I.push_back(std::move(in_I));
  state.diag.push_back(std::move(diag));

  // extend the running products down to level-0 cells
  const Box& blk = h.level_box[0];
  std::vector<int8_t> wt(size_t(blk.size()), 1);
  const std::vector<int8_t>& wk = state.w[size_t(k)];
  for (int64_t b = 0; b < blk.size(); ++b) {
    int8_t prev = k > 0 ? state.w_tilde[size_t(k - 1)][size_t(b)] : int8_t(1);
    Coord anc = h.ancestor(blk.coord(b), k);
    wt[size_t(b)] = int8_t(prev * wk[size_t(box.index(anc))]);
  }
  state.w_tilde.push_back(std::move(wt));
}

int8_t SyncResult::tilde_T(int64_t b1, int64_t b2) const {
  if (b1 == b2) return 1;
  const Box& blk = h.level_box[0];
  Coord c1 = blk.coord(b1), c2 = blk.coord(b2);
  int lam = 1;
  while (lam <= h.K && !(h.ancestor(c1, lam) == h.ancestor(c2, lam))) ++lam;
  if (lam > h.K) throw std::logic_error("pair has no common ancestor");
  const auto& wt = state.w_tilde[size_t(lam - 1)];
  return int8_t(wt[size_t(b1)] * wt[size_t(b2)]);
}

SyncResult synchronize(const BlockGraph& g, const Hierarchy& h) {
  if (g.d != h.d || !(g.box.lo == h.level_box[0].lo) || !(g.box.hi == h.level_box[0].hi))
    throw std::invalid_argument("graph: box does not match the hierarchy base");
  SyncResult res;
  res.h = h;
  for (int k = 0; k < h.K; ++k) {
    level_sync_vars(res.state, g, h, k);
    quartets_and_block_vars(res.state, g, h, k);
  }
  return res;
}

// -------------------------------------------------------------------- audit

AuditReport honest_good_audit(const MultiscaleState& st, const BlockGraph& g, const Hierarchy& h) {
  AuditReport rep;
  const int d = h.d;
  const Box& blk = h.level_box[0];
  std::vector<std::vector<uint8_t>> good(size_t(h.K) + 1);
  good[0].assign(size_t(blk.size()), 1);

  // honesty of within-parent level-k edges, k = 0..K-1; stored per (cell, axis)
  std::vector<std::vector<uint8_t>> honest(size_t(h.K));
  for (int k = 0; k < h.K; ++k) {
    const Box& box = h.level_box[size_t(k)];
    honest[size_t(k)].assign(size_t(box.size()) * size_t(d), 1);
    AuditLevel lvl;
    lvl.k = k;
    for (int64_t v = 0; v < box.size(); ++v) {
      Coord c = box.coord(v);
      for (int axis = 0; axis < d; ++axis) {
        Coord c2 = c;
        c2[size_t(axis)] += 1;
        if (!box.contains(c2)) continue;
        if (!(h.parent_coord(k, c) == h.parent_coord(k, c2))) continue;
        XiSet xi = boundary_xi(h, k, c, c2);
        int64_t sum = 0;
        for (int64_t lower : xi.lower) {
          Coord bc = blk.coord(lower);
          bc[size_t(axis)] += 1;
          sum += int64_t(g.edge_at(lower, axis)) * int64_t(g.theta[size_t(lower)]) *
                 int64_t(g.theta[size_t(blk.index(bc))]);
        }
        bool hon = double(sum) >= 0.9 * g.delta_hat * double(xi.lower.size());
        honest[size_t(k)][size_t(v) * size_t(d) + size_t(axis)] = hon ? 1 : 0;
        lvl.edges++;
        if (hon) lvl.honest++;
        if (!hon) rep.all_honest = false;
      }
    }
    rep.levels.push_back(lvl);
  }
  AuditLevel top;
  top.k = h.K;
  rep.levels.push_back(top);

  // goodness recursion bottom-up
  for (int k = 1; k <= h.K; ++k) {
    const Box& box = h.level_box[size_t(k)];
    const Box& cboxlvl = h.level_box[size_t(k - 1)];
    good[size_t(k)].assign(size_t(box.size()), 1);
    const int64_t Lk = h.ell(k - 1);
    const int64_t hk = (Lk - 1) / 2;
    for (int64_t v = 0; v < box.size(); ++v) {
      Coord P = box.coord(v);
      Box cbox;
      cbox.d = d;
      for (int i = 0; i < d; ++i) {
        cbox.lo[size_t(i)] =
            std::max(cboxlvl.lo[size_t(i)], int32_t(int64_t(P[size_t(i)]) * Lk - hk));
        cbox.hi[size_t(i)] =
            std::min(cboxlvl.hi[size_t(i)], int32_t(int64_t(P[size_t(i)]) * Lk + hk));
      }
      bool ok = true;
      int64_t bad_children = 0;
      for (int64_t ci = 0; ci < cbox.size(); ++ci) {
        Coord c = cbox.coord(ci);
        int64_t cv = cboxlvl.index(c);
        if (!good[size_t(k - 1)][size_t(cv)]) bad_children++;
        for (int axis = 0; axis < d; ++axis) {
          Coord nb = c;
          nb[size_t(axis)] += 1;
          if (!cbox.contains(nb)) continue;
          if (!honest[size_t(k - 1)][size_t(cv) * size_t(d) + size_t(axis)]) ok = false;
        }
      }
      if (bad_children > 1) ok = false;
      good[size_t(k)][size_t(v)] = ok ? 1 : 0;
      if (!ok) rep.all_good = false;
    }
  }

  for (int k = 0; k <= h.K; ++k) {
    AuditLevel& lvl = rep.levels[size_t(k)];
    lvl.blocks = h.level_box[size_t(k)].size();
    for (uint8_t gd : good[size_t(k)]) lvl.good += gd;
    lvl.bad_bound =
        std::pow(double(k), 2.0 * d) * std::pow(2.0 * double(h.kappa), -double(d - 1) * (k + 6));
    if (k < h.K && size_t(k) < st.diag.size()) {
      const LevelDiag& dg = st.diag[size_t(k)];
      lvl.incoherent_rate =
          dg.quartets > 0 ? double(dg.incoherent) / double(dg.quartets) : 0.0;
      double tot = 0.0;
      for (int64_t s : dg.agreeable_sizes) tot += double(s);
      lvl.mean_agreeable =
          dg.agreeable_sizes.empty() ? 0.0 : tot / double(dg.agreeable_sizes.size());
    }
  }
  return rep;
}

void dump_multiscale_csv(const SyncResult& res, const AuditReport& audit, const std::string& path) {
  CsvWriter out(path, {"level", "blocks", "good_blocks", "edges", "honest_edges", "quartets",
                       "incoherent_quartets", "tree_violations", "min_agreeable",
                       "mean_agreeable", "bad_bound"});
  for (size_t k = 0; k < audit.levels.size(); ++k) {
    const AuditLevel& lvl = audit.levels[k];
    int64_t quartets = 0, incoherent = 0, violations = 0, min_agree = 0;
    double mean_agree = 0.0;
    if (k < res.state.diag.size()) {
      const LevelDiag& dg = res.state.diag[k];
      quartets = dg.quartets;
      incoherent = dg.incoherent;
      violations = dg.tree_violations;
      if (!dg.agreeable_sizes.empty()) {
        min_agree = *std::min_element(dg.agreeable_sizes.begin(), dg.agreeable_sizes.end());
        double tot = 0.0;
        for (int64_t s : dg.agreeable_sizes) tot += double(s);
        mean_agree = tot / double(dg.agreeable_sizes.size());
      }
    }
    out.row({std::to_string(lvl.k), std::to_string(lvl.blocks), std::to_string(lvl.good),
             std::to_string(lvl.edges), std::to_string(lvl.honest), std::to_string(quartets),
             std::to_string(incoherent), std::to_string(violations), std::to_string(min_agree),
             fmt_double(mean_agree), fmt_double(lvl.bad_bound)});
  }
}

}  // namespace zsync

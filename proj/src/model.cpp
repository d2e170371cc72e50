#include "zsync/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace zsync {

double beta_of(double p) {
  if (!(p > 0.0) || !(p <= 0.5))
    throw std::invalid_argument("p: beta_of requires 0 < p <= 1/2");
  return 0.5 * std::log((1.0 - p) / p);
}

void ModelParams::validate() const {
  if (d < 2 || d > MAX_D) throw std::invalid_argument("d: dimension must be in [2, 4]");
  if (n < 1) throw std::invalid_argument("n: box half-width must be >= 1");
  if (!(p >= 0.0) || !(p <= 0.5))
    throw std::invalid_argument("p: flip probability must lie in [0, 1/2]");
  if (!(eta >= 0.0)) throw std::invalid_argument("eta: SNR must be >= 0");
  if (range_L < 1) throw std::invalid_argument("range_L: interaction range must be >= 1");
}

std::vector<Coord> positive_offsets(int d, int L) {
  std::vector<Coord> out;
  Coord w{};
  for (int i = 0; i < d; ++i) w[i] = -L;
  while (true) {
    // lexicographically positive: first nonzero component is > 0
    for (int i = 0; i < d; ++i) {
      if (w[i] > 0) {
        out.push_back(w);
        break;
      }
      if (w[i] != 0) break;
    }
    int axis = d - 1;
    while (axis >= 0 && w[axis] == L) w[axis--] = -L;
    if (axis < 0) break;
    ++w[axis];
  }
  return out;
}

int64_t LatticeInstance::edge_count() const {
  int64_t total = 0;
  for (int axis = 0; axis < params.d; ++axis) {
    int64_t cnt = 1;
    for (int i = 0; i < params.d; ++i)
      cnt *= (i == axis) ? (box.side(i) - 1) : box.side(i);
    total += cnt;
  }
  return total;
}

float LatticeInstance::goe_pair(int64_t uflat, int64_t vflat) const {
  Coord u = box.coord(uflat), v = box.coord(vflat);
  Coord w{};
  for (int i = 0; i < params.d; ++i) w[i] = v[i] - u[i];
  // orient the offset lexicographically positive
  bool positive = false;
  for (int i = 0; i < params.d; ++i) {
    if (w[i] != 0) {
      positive = w[i] > 0;
      break;
    }
  }
  int64_t base = positive ? uflat : vflat;
  if (!positive)
    for (int i = 0; i < params.d; ++i) w[i] = -w[i];
  for (int64_t k = 0; k < int64_t(goe_offsets.size()); ++k) {
    bool match = true;
    for (int i = 0; i < params.d; ++i)
      if (goe_offsets[k][i] != w[i]) match = false;
    if (match) return goe_at(base, k);
  }
  throw std::out_of_range("goe_pair: pair not within interaction range");
}

LatticeInstance generate_instance(const ModelParams& params) {
  params.validate();
  LatticeInstance inst;
  inst.params = params;
  inst.box = Box::centered(params.d, params.n);
  const int64_t nv = inst.box.size();
  const int d = params.d;

  inst.theta = BitVec(nv);
  for (int64_t i = 0; i < nv; ++i) {
    Rng rng = keyed_rng(params.seed, TAG_THETA, {i});
    inst.theta.set(i, rng.sign());
  }

  inst.edge_bits = BitVec(nv * d);
  for (int64_t i = 0; i < nv; ++i) {
    Coord c = inst.box.coord(i);
    for (int axis = 0; axis < d; ++axis) {
      if (c[axis] + 1 > inst.box.hi[axis]) continue;
      Coord c2 = c;
      ++c2[axis];
      int8_t prod = int8_t(inst.theta.get(i) * inst.theta.get(inst.box.index(c2)));
      Rng rng = keyed_rng(params.seed, TAG_EDGE, {i, axis});
      bool flip = rng.uniform() < params.p;
      inst.edge_bits.set(i * d + axis, flip ? int8_t(-prod) : prod);
    }
  }

  inst.goe_offsets = positive_offsets(d, params.range_L);
  const int64_t noff = int64_t(inst.goe_offsets.size());
  inst.goe.assign(size_t(nv * noff), 0.0f);
  const double coeff = std::sqrt(params.eta / std::pow(double(params.range_L), d));
  for (int64_t i = 0; i < nv; ++i) {
    Coord c = inst.box.coord(i);
    for (int64_t k = 0; k < noff; ++k) {
      Rng rng = keyed_rng(params.seed, TAG_GOE, {i, k});
      double z = rng.gauss();
      Coord c2 = c;
      bool in = true;
      for (int a = 0; a < d; ++a) {
        c2[a] += inst.goe_offsets[k][a];
        if (c2[a] < inst.box.lo[a] || c2[a] > inst.box.hi[a]) in = false;
      }
      double signal =
          in ? coeff * inst.theta.get(i) * inst.theta.get(inst.box.index(c2)) : 0.0;
      inst.goe[size_t(i * noff + k)] = float(signal + z);
    }
  }
  return inst;
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            std::streamsize(v.size() * sizeof(T)));
}

template <typename T>
void read_raw(std::ifstream& in, std::vector<T>& v, size_t count) {
  v.resize(count);
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(count * sizeof(T)));
  if (!in) throw std::runtime_error("instance file truncated");
}

}  // namespace

void save_instance(const LatticeInstance& inst, const std::string& path) {
  nlohmann::json hdr;
  hdr["format"] = "zsync-instance";
  hdr["version"] = 1;
  hdr["params"] = {{"d", inst.params.d},      {"n", inst.params.n},
                   {"p", inst.params.p},      {"eta", inst.params.eta},
                   {"range_L", inst.params.range_L}, {"seed", inst.params.seed}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open instance file for writing: " + path);
  out << hdr.dump() << '\n';
  write_raw(out, inst.theta.words);
  write_raw(out, inst.edge_bits.words);
  write_raw(out, inst.goe);
  if (!out) throw std::runtime_error("failed writing instance file: " + path);
}

LatticeInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("missing instance header");
  nlohmann::json hdr = nlohmann::json::parse(line);
  if (hdr.value("format", "") != std::string("zsync-instance"))
    throw std::runtime_error("not a zsync instance file");
  ModelParams p;
  p.d = hdr["params"]["d"].get<int>();
  p.n = hdr["params"]["n"].get<int>();
  p.p = hdr["params"]["p"].get<double>();
  p.eta = hdr["params"]["eta"].get<double>();
  p.range_L = hdr["params"]["range_L"].get<int>();
  p.seed = hdr["params"]["seed"].get<uint64_t>();
  p.validate();

  LatticeInstance inst;
  inst.params = p;
  inst.box = Box::centered(p.d, p.n);
  int64_t nv = inst.box.size();
  inst.theta.n = nv;
  read_raw(in, inst.theta.words, size_t((nv + 63) / 64));
  inst.edge_bits.n = nv * p.d;
  read_raw(in, inst.edge_bits.words, size_t((nv * p.d + 63) / 64));
  inst.goe_offsets = positive_offsets(p.d, p.range_L);
  read_raw(in, inst.goe, size_t(nv * int64_t(inst.goe_offsets.size())));
  return inst;
}

}  // namespace zsync

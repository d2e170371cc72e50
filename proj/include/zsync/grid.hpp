#pragma once
// Integer boxes and coordinate <-> flat-index conversion.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace zsync {

constexpr int MAX_D = 4;

using Coord = std::array<int32_t, MAX_D>;  // only the first d entries are used

inline Coord make_coord(int d, std::initializer_list<int32_t> xs) {
  Coord c{};
  int i = 0;
  for (auto x : xs) {
    if (i >= d) break;
    c[i++] = x;
  }
  return c;
}

// Axis-aligned box: per-axis closed ranges [lo[i], hi[i]].
struct Box {
  int d = 0;
  Coord lo{};
  Coord hi{};

  static Box centered(int d, int n) {  // [-n, n]^d
    Box b;
    b.d = d;
    for (int i = 0; i < d; ++i) {
      b.lo[i] = -n;
      b.hi[i] = n;
    }
    return b;
  }

  static Box sized(int d, const Coord& sizes) {  // [0, sizes[i]-1]
    Box b;
    b.d = d;
    for (int i = 0; i < d; ++i) {
      b.lo[i] = 0;
      b.hi[i] = sizes[i] - 1;
    }
    return b;
  }

  int32_t side(int i) const { return hi[i] - lo[i] + 1; }

  int64_t size() const {
    int64_t s = 1;
    for (int i = 0; i < d; ++i) s *= side(i);
    return s;
  }

  bool contains(const Coord& c) const {
    for (int i = 0; i < d; ++i)
      if (c[i] < lo[i] || c[i] > hi[i]) return false;
    return true;
  }

  // Row-major flat index; axis 0 is the slowest.
  int64_t index(const Coord& c) const {
    int64_t idx = 0;
    for (int i = 0; i < d; ++i) idx = idx * side(i) + (c[i] - lo[i]);
    return idx;
  }

  Coord coord(int64_t idx) const {
    Coord c{};
    for (int i = d - 1; i >= 0; --i) {
      int32_t s = side(i);
      c[i] = lo[i] + int32_t(idx % s);
      idx /= s;
    }
    return c;
  }
};

inline bool lex_less(const Coord& a, const Coord& b, int d) {
  for (int i = 0; i < d; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

inline int64_t linf_dist(const Coord& a, const Coord& b, int d) {
  int64_t m = 0;
  for (int i = 0; i < d; ++i) {
    int64_t v = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
    if (v > m) m = v;
  }
  return m;
}

inline int64_t l1_dist(const Coord& a, const Coord& b, int d) {
  int64_t m = 0;
  for (int i = 0; i < d; ++i) m += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return m;
}

// Sign vector stored one bit per entry (bit set <=> +1).
struct BitVec {
  std::vector<uint64_t> words;
  int64_t n = 0;

  BitVec() = default;
  explicit BitVec(int64_t count) : words((count + 63) / 64, 0), n(count) {}

  int8_t get(int64_t i) const { return (words[i >> 6] >> (i & 63)) & 1 ? int8_t(1) : int8_t(-1); }

  void set(int64_t i, int8_t v) {
    uint64_t mask = 1ULL << (i & 63);
    if (v > 0)
      words[i >> 6] |= mask;
    else
      words[i >> 6] &= ~mask;
  }

  bool operator==(const BitVec& o) const { return n == o.n && words == o.words; }
};

}  // namespace zsync

#pragma once
// Small statistics helpers: means, batch means, bootstrap, trapezoidal
// integration with error propagation, least-squares exponent fits.
//
// Error-bar convention used throughout the library: an estimate's standard
// error combines an outer resampling spread (bootstrap over repetitions /
// chains / instances) and an inner Monte Carlo term (batch means over a
// chain) in quadrature.  The two terms overlap, so the combination is
// deliberately conservative; every "within k sigma" gate in the tests uses
// this convention.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "zsync/rng.hpp"

namespace zsync {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / double(xs.size());
}

inline double var_of(const std::vector<double>& xs) {  // unbiased
  size_t n = xs.size();
  if (n < 2) return 0.0;
  double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / double(n - 1);
}

inline double sd_of(const std::vector<double>& xs) { return std::sqrt(var_of(xs)); }

// Standard error of the mean of i.i.d.-ish values.
inline double sem_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  return sd_of(xs) / std::sqrt(double(xs.size()));
}

// Batch-means standard error for a (possibly autocorrelated) time series.
inline double batch_means_se(const std::vector<double>& series, int batches = 20) {
  int64_t n = int64_t(series.size());
  if (n < 2 * batches) batches = std::max<int>(2, int(n / 2));
  if (n < 4) return 0.0;
  std::vector<double> bm;
  bm.reserve(batches);
  int64_t per = n / batches;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (int64_t i = b * per; i < (b + 1) * per; ++i) s += series[i];
    bm.push_back(s / double(per));
  }
  return sem_of(bm);
}

// Bootstrap standard error of the mean (resamples entries with replacement).
inline double bootstrap_se(const std::vector<double>& xs, uint64_t seed, int resamples = 200) {
  size_t n = xs.size();
  if (n < 2) return 0.0;
  Rng rng = keyed_rng(seed, TAG_BOOTSTRAP, {int64_t(n), resamples});
  std::vector<double> means;
  means.reserve(resamples);
  for (int r = 0; r < resamples; ++r) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += xs[rng.below(n)];
    means.push_back(s / double(n));
  }
  // Spread of the bootstrap means around their own mean.
  return sd_of(means);
}

// Bootstrap standard error of an arbitrary statistic (resamples entries with
// replacement, applies `stat` to each resample).
template <class F>
double bootstrap_stat_se(const std::vector<double>& xs, F stat, uint64_t seed,
                         int resamples = 200) {
  size_t n = xs.size();
  if (n < 2) return 0.0;
  Rng rng = keyed_rng(seed, TAG_BOOTSTRAP, {int64_t(n), resamples, 2});
  std::vector<double> vals;
  vals.reserve(resamples);
  std::vector<double> re(n);
  for (int r = 0; r < resamples; ++r) {
    for (size_t i = 0; i < n; ++i) re[i] = xs[rng.below(n)];
    vals.push_back(stat(re));
  }
  return sd_of(vals);
}

inline double quadrature(double a, double b) { return std::sqrt(a * a + b * b); }

// Combined estimate for repeated measurements: value = mean over repetitions,
// se = bootstrap over repetitions (+) mean inner se, in quadrature.
inline Estimate combine_reps(const std::vector<double>& values,
                             const std::vector<double>& inner_ses, uint64_t seed) {
  Estimate e;
  e.value = mean_of(values);
  double outer = values.size() >= 2 ? bootstrap_se(values, seed) : 0.0;
  double inner = 0.0;
  if (!inner_ses.empty()) {
    // ses of independent repetitions average down by 1/sqrt(reps)
    double s2 = 0.0;
    for (double s : inner_ses) s2 += s * s;
    inner = std::sqrt(s2) / double(inner_ses.size());
  }
  e.se = quadrature(outer, inner);
  return e;
}

// Cumulative trapezoidal integral of y over x, with per-point standard errors
// propagated assuming independent y errors.  Returns value and se at every
// grid point (first entry = 0).
struct IntegratedCurve {
  std::vector<double> value;
  std::vector<double> se;
};

inline IntegratedCurve trapezoid_cumulative(const std::vector<double>& x,
                                            const std::vector<double>& y,
                                            const std::vector<double>& y_se) {
  size_t n = x.size();
  IntegratedCurve out;
  out.value.assign(n, 0.0);
  out.se.assign(n, 0.0);
  // weight of y_i in the integral up to x_j: half the width of the panels
  // touching i (restricted to [x_0, x_j])
  for (size_t j = 1; j < n; ++j) {
    out.value[j] = out.value[j - 1] + 0.5 * (x[j] - x[j - 1]) * (y[j] + y[j - 1]);
    double v = 0.0;
    for (size_t i = 0; i <= j; ++i) {
      double w = 0.0;
      if (i > 0) w += 0.5 * (x[i] - x[i - 1]);
      if (i < j) w += 0.5 * (x[i + 1] - x[i]);
      v += w * w * y_se[i] * y_se[i];
    }
    out.se[j] = std::sqrt(v);
  }
  return out;
}

// Same integral using every other grid point (half resolution); used as a
// Richardson-style discretization check.
inline double trapezoid_half_resolution(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  double total = 0.0;
  size_t last = 0;
  for (size_t i = 2; i < x.size(); i += 2) {
    total += 0.5 * (x[i] - x[last]) * (y[i] + y[last]);
    last = i;
  }
  if (last != x.size() - 1 && x.size() >= 2) {
    size_t i = x.size() - 1;
    total += 0.5 * (x[i] - x[last]) * (y[i] + y[last]);
  }
  return total;
}

// Least-squares slope of log(y) against log(x) (power-law exponent).
inline double fit_log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double denom = double(n) * sxx - sx * sx;
  return denom == 0.0 ? 0.0 : (double(n) * sxy - sx * sy) / denom;
}

// Pooled Bernoulli estimate: k successes out of m trials.
inline Estimate pooled_bernoulli(int64_t k, int64_t m) {
  Estimate e;
  if (m <= 0) return e;
  e.value = double(k) / double(m);
  e.se = std::sqrt(std::max(e.value * (1.0 - e.value), 1.0 / double(m)) / double(m));
  return e;
}

}  // namespace zsync

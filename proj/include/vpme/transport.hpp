#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

#include "vpme/errors.hpp"
#include "vpme/grid.hpp"
#include "vpme/lap.hpp"
#include "vpme/particles.hpp"

namespace vpme {

// Hard cap on exact-matching problem size (dense cost matrix).
inline constexpr std::size_t kAssignmentCap = 4000;

// Weighted point cloud in R^dim whose first n_periodic coordinates live on
// the unit torus; masses are nonnegative and sum to one.
struct DiscreteMeasure {
  int dim = 0;
  int n_periodic = 0;
  std::vector<double> points;  // row-major, size() * dim
  std::vector<double> masses;

  std::size_t size() const { return masses.size(); }
  const double* point(std::size_t i) const { return points.data() + i * dim; }
};

inline double torus_delta(double d) {
  d = std::abs(d);
  d -= std::floor(d);  // coordinates may sit anywhere on the covering line
  return std::min(d, 1.0 - d);
}

inline double measure_dist_sq(const DiscreteMeasure& m, std::size_t i,
                              const DiscreteMeasure& g, std::size_t j) {
  const double* a = m.point(i);
  const double* b = g.point(j);
  double s = 0.0;
  for (int c = 0; c < m.dim; ++c) {
    const double d = (c < m.n_periodic) ? torus_delta(a[c] - b[c]) : a[c] - b[c];
    s += d * d;
  }
  return s;
}

// Phase-space measure of a particle ensemble: coordinates (x, v), with the
// position block periodic.
template <int Dim>
DiscreteMeasure measure_from_ensemble(const ParticleEnsemble<Dim>& ens) {
  DiscreteMeasure m;
  m.dim = 2 * Dim;
  m.n_periodic = Dim;
  m.points.resize(ens.size() * 2 * Dim);
  m.masses.resize(ens.size());
  const double mass = ens.total_mass();
  if (!(mass > 0.0)) throw OutOfRangeError("ensemble has no mass");
  for (std::size_t p = 0; p < ens.size(); ++p) {
    for (int a = 0; a < Dim; ++a) {
      m.points[p * 2 * Dim + a] = ens.positions[p][a];
      m.points[p * 2 * Dim + Dim + a] = ens.velocities[p][a];
    }
    m.masses[p] = ens.weights[p] / mass;
  }
  return m;
}

// Cell-center measure of a nonnegative density field. Tiny negative values
// from spectral ringing are clamped; genuinely negative fields are refused.
template <int Dim>
DiscreteMeasure measure_from_density(const ScalarField<Dim>& rho) {
  if (!rho.finite()) throw NonFiniteError("density contains NaN/Inf");
  const double floor_tol = -1e-9 * std::max(rho.linf(), 1.0);
  DiscreteMeasure m;
  m.dim = Dim;
  m.n_periodic = Dim;
  m.points.resize(rho.grid.size() * Dim);
  m.masses.resize(rho.grid.size());
  double total = 0.0;
  for (std::size_t i = 0; i < rho.grid.size(); ++i) {
    double v = rho.values[i];
    if (v < 0.0) {
      if (v < floor_tol)
        throw OutOfRangeError("density has a negative cell");
      v = 0.0;
    }
    m.masses[i] = v;
    total += v;
    const auto x = rho.grid.point(rho.grid.unflatten(i));
    for (int a = 0; a < Dim; ++a) m.points[i * Dim + a] = x[a];
  }
  if (!(total > 0.0)) throw OutOfRangeError("density has no mass");
  for (auto& w : m.masses) w /= total;
  return m;
}

// Deterministic systematic resampling to M equal-mass points: selects the
// atoms containing the mass quantiles (j + offset)/M in storage order.
inline DiscreteMeasure systematic_resample(const DiscreteMeasure& m,
                                           std::size_t M, double offset) {
  if (M == 0) throw OutOfRangeError("resample size must be positive");
  if (!(offset > 0.0 && offset < 1.0))
    throw OutOfRangeError("resample offset must lie in (0,1)");
  std::vector<double> cum(m.size());
  double run = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    run += m.masses[i];
    cum[i] = run;
  }
  DiscreteMeasure out;
  out.dim = m.dim;
  out.n_periodic = m.n_periodic;
  out.points.resize(M * m.dim);
  out.masses.assign(M, 1.0 / static_cast<double>(M));
  std::size_t i = 0;
  for (std::size_t j = 0; j < M; ++j) {
    const double q = (static_cast<double>(j) + offset) /
                     static_cast<double>(M) * run;
    while (i + 1 < m.size() && cum[i] < q) ++i;
    for (int a = 0; a < m.dim; ++a)
      out.points[j * m.dim + a] = m.point(i)[a];
  }
  return out;
}

// Exact quadratic transport distance between two equal-size uniform clouds
// via optimal assignment on the squared (periodic-aware) distance matrix.
inline double w2_exact(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim != b.dim || a.n_periodic != b.n_periodic)
    throw DimensionError("measures live in different spaces");
  if (a.size() != b.size())
    throw SizeMismatchError("exact matching needs equal point counts");
  const std::size_t M = a.size();
  if (M > kAssignmentCap)
    throw TooLargeError("exact matching supports at most 4000 points");
  const double um = 1.0 / static_cast<double>(M);
  for (std::size_t i = 0; i < M; ++i)
    if (std::abs(a.masses[i] - um) > 1e-9 * um ||
        std::abs(b.masses[i] - um) > 1e-9 * um)
      throw SizeMismatchError("exact matching needs uniform masses");
  std::vector<double> cost(M * M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      cost[i * M + j] = measure_dist_sq(a, i, b, j);
  std::vector<int> rowsol;
  const double total = solve_assignment(static_cast<int>(M), cost, rowsol);
  return std::sqrt(std::max(0.0, total) * um);
}

namespace detail {

// Exact transport cost between weighted atoms on the line: walk the two
// quantile functions in lockstep and integrate |Q_a - Q_b|^p dm.
inline double line_transport(const std::vector<double>& xs_a,
                             const std::vector<double>& ms_a,
                             const std::vector<double>& xs_b,
                             const std::vector<double>& ms_b, int p) {
  struct Atom {
    double x, m;
  };
  auto pack = [](const std::vector<double>& xs, const std::vector<double>& ms) {
    if (xs.size() != ms.size() || xs.empty())
      throw SizeMismatchError("weighted sample arrays mismatch");
    double total = 0.0;
    for (double m : ms) {
      if (!(m >= 0.0)) throw OutOfRangeError("negative mass");
      total += m;
    }
    if (!(total > 0.0)) throw OutOfRangeError("sample has no mass");
    std::vector<Atom> atoms(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(xs[i])) throw NonFiniteError("non-finite sample");
      atoms[i] = {xs[i], ms[i] / total};
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& l, const Atom& r) { return l.x < r.x; });
    return atoms;
  };
  auto A = pack(xs_a, ms_a);
  auto B = pack(xs_b, ms_b);
  std::size_t i = 0, j = 0;
  double ra = A[0].m, rb = B[0].m, acc = 0.0;
  while (i < A.size() && j < B.size()) {
    const double m = std::min(ra, rb);
    const double d = std::abs(A[i].x - B[j].x);
    acc += m * (p == 2 ? d * d : d);
    ra -= m;
    rb -= m;
    if (ra <= 1e-18 && i + 1 < A.size()) ra = A[++i].m;
    else if (ra <= 1e-18) ++i;
    if (rb <= 1e-18 && j + 1 < B.size()) rb = B[++j].m;
    else if (rb <= 1e-18) ++j;
  }
  return acc;
}

}  // namespace detail

// Quadratic and first-order transport distances between weighted samples on
// the real line (used for velocity marginals).
inline double w2_1d(const std::vector<double>& xs_a,
                    const std::vector<double>& ms_a,
                    const std::vector<double>& xs_b,
                    const std::vector<double>& ms_b) {
  return std::sqrt(detail::line_transport(xs_a, ms_a, xs_b, ms_b, 2));
}

inline double w1_1d(const std::vector<double>& xs_a,
                    const std::vector<double>& ms_a,
                    const std::vector<double>& xs_b,
                    const std::vector<double>& ms_b) {
  return detail::line_transport(xs_a, ms_a, xs_b, ms_b, 1);
}

struct TransportEstimate {
  double value = 0.0;  // estimated distance
  double floor = 0.0;  // resampling noise floor (self-distance of input A)
};

// Transport distance between two density fields: both are resampled to M
// equal-mass cell-center points and matched exactly. The floor compares two
// resamplings of the first field against each other.
template <int Dim>
TransportEstimate grid_w2(const ScalarField<Dim>& rho_a,
                          const ScalarField<Dim>& rho_b, std::size_t M) {
  require_same_grid(rho_a, rho_b);
  const auto ma = measure_from_density(rho_a);
  const auto mb = measure_from_density(rho_b);
  TransportEstimate est;
  est.value = w2_exact(systematic_resample(ma, M, 0.5),
                       systematic_resample(mb, M, 0.5));
  est.floor = w2_exact(systematic_resample(ma, M, 0.25),
                       systematic_resample(ma, M, 0.75));
  return est;
}

// Phase-space transport distance between two ensembles, subsampling each
// cloud to at most `cap` points by index stride when necessary.
template <int Dim>
TransportEstimate ensemble_w2(const ParticleEnsemble<Dim>& ens_a,
                              const ParticleEnsemble<Dim>& ens_b,
                              std::size_t cap = 2000) {
  if (cap == 0 || cap > kAssignmentCap)
    throw OutOfRangeError("subsample cap must lie in [1, 4000]");
  const auto ma = measure_from_ensemble(ens_a);
  const auto mb = measure_from_ensemble(ens_b);
  auto shrink = [&](const DiscreteMeasure& m, double offset) {
    return m.size() <= cap && offset == 0.5
               ? m
               : systematic_resample(m, std::min(cap, m.size()), offset);
  };
  TransportEstimate est;
  est.value = w2_exact(shrink(ma, 0.5), shrink(mb, 0.5));
  if (ma.size() <= cap) {
    est.floor = 0.0;  // no subsampling, the comparison is exact
  } else {
    est.floor = w2_exact(systematic_resample(ma, cap, 0.25),
                         systematic_resample(ma, cap, 0.75));
  }
  return est;
}

// Transport cost of the index coupling between two equal-size ensembles with
// aligned weights: particle p pairs with particle p, and the weighted mean
// squared phase-space displacement (periodic in x, Euclidean in v) is
// square-rooted. For runs evolved in lockstep from a common draw the index
// pairing realizes the coupling the runs share, so this is a deterministic,
// resampling-free upper bound on W2 over the full ensemble — and it is the
// exact W2 when the displacement is a rigid translation (e.g. a uniform
// velocity shift). The stability experiments fit their decay exponent to this
// quantity because it carries no subsampling noise that could confound the
// fitted slope.
template <int Dim>
double coupled_w2(const ParticleEnsemble<Dim>& ens_a,
                  const ParticleEnsemble<Dim>& ens_b) {
  if (ens_a.size() != ens_b.size())
    throw SizeMismatchError("index coupling needs equal particle counts");
  const auto ma = measure_from_ensemble(ens_a);
  const auto mb = measure_from_ensemble(ens_b);
  double s = 0.0;
  for (std::size_t p = 0; p < ma.size(); ++p) {
    if (std::abs(ma.masses[p] - mb.masses[p]) > 1e-12)
      throw SizeMismatchError("index coupling needs aligned weights");
    s += ma.masses[p] * measure_dist_sq(ma, p, mb, p);
  }
  return std::sqrt(s);
}

// First-order transport distance between the first velocity components of
// two ensembles (their velocity marginals on the line).
template <int Dim>
double w1_velocity_marginal(const ParticleEnsemble<Dim>& ens_a,
                            const ParticleEnsemble<Dim>& ens_b) {
  std::vector<double> va(ens_a.size()), vb(ens_b.size());
  for (std::size_t p = 0; p < ens_a.size(); ++p)
    va[p] = ens_a.velocities[p][0];
  for (std::size_t p = 0; p < ens_b.size(); ++p)
    vb[p] = ens_b.velocities[p][0];
  return w1_1d(va, ens_a.weights, vb, ens_b.weights);
}

// ---------------------------------------------------------------------------
// Stability-rate extraction
// ---------------------------------------------------------------------------

struct StabilityFit {
  double C = 0.0;         // decay exponent of the double-log functional
  double residual = 0.0;  // RMS residual of the straight-line fit
  bool floor_dominated = false;
};

// Fits L(t) = -log( w2(t)^2 / (16 d e) ) to A * exp(-C t) by least squares
// on log L. Each distance must satisfy w2^2 < 16 d e so the functional is
// positive. When a resampling floor is supplied and the series is mostly at
// or below twice that floor, the fit is flagged as floor-dominated.
inline StabilityFit fit_stability_constant(
    const std::vector<double>& times, const std::vector<double>& w2s, int dim,
    std::optional<double> floor = std::nullopt) {
  if (times.size() != w2s.size() || times.size() < 2)
    throw SizeMismatchError("stability fit needs >= 2 aligned samples");
  const double cap = 16.0 * static_cast<double>(dim) * std::numbers::e;
  std::vector<double> ys(times.size());
  for (std::size_t k = 0; k < w2s.size(); ++k) {
    const double w = w2s[k];
    if (!(w > 0.0) || !std::isfinite(w))
      throw OutOfRangeError("stability fit needs positive finite distances");
    if (w * w >= cap)
      throw OutOfRangeError("distance too large for the log functional");
    ys[k] = std::log(-std::log(w * w / cap));
  }
  const double n = static_cast<double>(times.size());
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    st += times[k];
    sy += ys[k];
    stt += times[k] * times[k];
    sty += times[k] * ys[k];
  }
  const double denom = n * stt - st * st;
  if (!(std::abs(denom) > 0.0))
    throw OutOfRangeError("stability fit needs distinct times");
  const double slope = (n * sty - st * sy) / denom;
  const double intercept = (sy - slope * st) / n;
  StabilityFit fit;
  fit.C = -slope;
  double ss = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double r = ys[k] - (intercept + slope * times[k]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  if (floor && *floor > 0.0) {
    std::vector<double> sorted(w2s);
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    fit.floor_dominated = median <= 2.0 * (*floor);
  }
  return fit;
}

// Time at which the fitted decay first beats the trivial bound: solves
// A exp(-C t) = a with A = -log(w0^2/(16 d e)) and a = 1 + log 16, clamped
// to zero in the degenerate cases (no decay, or already below the bound).
inline double implied_onset_time(double C, double w0, int dim) {
  const double cap = 16.0 * static_cast<double>(dim) * std::numbers::e;
  if (!(w0 > 0.0) || w0 * w0 >= cap || !(C > 0.0)) return 0.0;
  const double A = -std::log(w0 * w0 / cap);
  const double a = 1.0 + std::log(16.0);
  if (A <= a) return 0.0;
  return std::log(A / a) / C;
}

}  // namespace vpme

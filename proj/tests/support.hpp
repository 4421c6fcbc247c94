#pragma once

// Shared fixtures for the unit and acceptance suites: synthetic density
// families, independent reference solvers, and small utilities. Everything
// here is deliberately simple and slow; it exists to cross-check the
// library, not to be fast.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "vpme/grid.hpp"
#include "vpme/spectral.hpp"

namespace testsup {

using vpme::ScalarField;
using vpme::TorusGrid;
using vpme::Vec;

// Strictly positive broadband density with unit mean: filtered white noise
// with an algebraic spectral tail (1 + |k|^2)^(-s/2), rescaled into
// [1 - amp, 1 + amp]. The tail keeps every resolved mode well above
// round-off, which matters for spectral-ratio diagnostics.
template <int Dim>
ScalarField<Dim> random_smooth_density(const TorusGrid<Dim>& g,
                                       std::mt19937_64& rng, double decay = 4.0,
                                       double amp = 0.9) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ScalarField<Dim> noise(g);
  for (auto& v : noise.values) v = gauss(rng);
  ScalarField<Dim> f = vpme::apply_multiplier(noise, [&](const auto& k) {
    double ksq = 0.0;
    for (int a = 0; a < Dim; ++a) ksq += double(k[a]) * double(k[a]);
    return std::pow(1.0 + ksq, -0.5 * decay);
  });
  const double mean = f.mean();
  double mx = 0.0;
  for (double& v : f.values) {
    v -= mean;
    mx = std::max(mx, std::abs(v));
  }
  ScalarField<Dim> rho(g);
  const double scale = mx > 0 ? amp / mx : 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    rho.values[i] = 1.0 + scale * f.values[i];
  return rho;
}

// Smooth bump supported on |x - c| < width (per-axis torus distance),
// zero outside; not normalized.
template <int Dim>
ScalarField<Dim> bump_density(const TorusGrid<Dim>& g, const Vec<Dim>& center,
                              double width) {
  ScalarField<Dim> f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.point(g.unflatten(i));
    double rsq = 0.0;
    for (int a = 0; a < Dim; ++a) {
      double d = std::abs(x[a] - center[a]);
      d = std::min(d, 1.0 - d);
      rsq += d * d;
    }
    const double t = rsq / (width * width);
    f.values[i] = t < 1.0 ? std::exp(-1.0 / (1.0 - t)) : 0.0;
  }
  return f;
}

// Exact circular shift by whole cells along one axis.
template <int Dim>
ScalarField<Dim> shift_cells(const ScalarField<Dim>& f, int axis, int cells) {
  ScalarField<Dim> out(f.grid);
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    auto idx = f.grid.unflatten(i);
    idx[axis] = f.grid.wrap(idx[axis] - cells);
    out.values[i] = f.values[f.grid.flatten(idx)];
  }
  return out;
}

// Plain conjugate gradient on a user-supplied SPD operator; reference-grade.
inline std::vector<double> cg_solve(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply,
    const std::vector<double>& b, int iters, double tol) {
  const std::size_t n = b.size();
  std::vector<double> x(n, 0.0), r = b, p = b;
  auto dot = [](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * c[i];
    return s;
  };
  double rr = dot(r, r);
  const double b2 = std::sqrt(rr);
  for (int it = 0; it < iters && std::sqrt(rr) > tol * b2; ++it) {
    const auto ap = apply(p);
    const double alpha = rr / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr2 = dot(r, r);
    const double beta = rr2 / rr;
    rr = rr2;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  return x;
}

// Second-order finite-difference solution of lap(u) = f with zero mean,
// independent of the spectral path (stencil operator + CG + projection).
template <int Dim>
ScalarField<Dim> fd_poisson(const ScalarField<Dim>& f) {
  const auto& g = f.grid;
  const int n = g.n();
  const double inv_h2 = double(n) * double(n);
  auto project = [&](std::vector<double> v) {
    double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    for (double& x : v) x -= m;
    return v;
  };
  // solve (-lap_fd) u = -f on the zero-mean subspace, where -lap_fd is SPD
  auto apply = [&](const std::vector<double>& u) {
    std::vector<double> out(u.size(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto idx = g.unflatten(i);
      double acc = 2.0 * Dim * u[i];
      for (int a = 0; a < Dim; ++a) {
        auto lo = idx, hi = idx;
        lo[a] = g.wrap(idx[a] - 1);
        hi[a] = g.wrap(idx[a] + 1);
        acc -= u[g.flatten(lo)] + u[g.flatten(hi)];
      }
      out[i] = acc * inv_h2;
    }
    return project(out);
  };
  std::vector<double> rhs(f.values);
  for (double& v : rhs) v = -v;
  rhs = project(rhs);
  auto u = project(cg_solve(apply, rhs, 4000, 1e-13));
  return ScalarField<Dim>(g, std::move(u));
}

// Minimum assignment cost by brute force over all permutations (M <= 8).
inline double brute_force_assignment(int n, const std::vector<double>& cost) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += cost[i * n + perm[i]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Exact quadratic transport cost between equal-count uniform clouds on the
// circle: the optimal matching preserves the cyclic order, so minimizing
// over the M cyclic offsets of the sorted clouds is exact.
inline double circle_w2(std::vector<double> a, std::vector<double> b) {
  const std::size_t m = a.size();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double d = std::abs(a[i] - b[(i + r) % m]);
      d = std::min(d, 1.0 - d);
      s += d * d;
    }
    best = std::min(best, s);
  }
  return std::sqrt(best / static_cast<double>(m));
}

}  // namespace testsup

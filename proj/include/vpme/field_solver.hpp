#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "vpme/errors.hpp"
#include "vpme/grid.hpp"
#include "vpme/spectral.hpp"

namespace vpme {

struct SolverSettings {
  double tol = 1e-10;        // Newton stop: ||residual||_2 below this
  int max_iters = 50;        // Newton iteration budget
  int max_cg_iters = 512;    // inner linear-solve budget per Newton step
  double exp_guard = 700.0;  // largest exponent fed to exp()
};

struct NewtonReport {
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
};

// Electric field and its two-part potential for the adiabatic-electron
// model. The total potential U = U_bar + U_hat splits into the solution of
// the linear problem  lap(U_bar) = 1 - rho  and the screened remainder
// solving  lap(U_hat) = exp(U_bar + U_hat) - 1.  E_bar and E_hat are the
// corresponding fields -grad(U_bar), -grad(U_hat).
template <int Dim>
struct PotentialSplit {
  ScalarField<Dim> U_bar, U_hat;
  VectorField<Dim> E_bar, E_hat;
  NewtonReport report;

  explicit PotentialSplit(const TorusGrid<Dim>& g)
      : U_bar(g), U_hat(g), E_bar(g), E_hat(g) {}

  ScalarField<Dim> U_total() const {
    ScalarField<Dim> u = U_bar;
    for (std::size_t i = 0; i < u.values.size(); ++i)
      u.values[i] += U_hat.values[i];
    return u;
  }

  VectorField<Dim> E_total() const {
    VectorField<Dim> e = E_bar;
    for (int a = 0; a < Dim; ++a)
      for (std::size_t i = 0; i < e.comp[a].values.size(); ++i)
        e.comp[a].values[i] += E_hat.comp[a].values[i];
    return e;
  }
};

namespace detail {

// Preconditioned conjugate gradient for (-lap + diag(w)) x = b with the
// constant-coefficient spectral preconditioner (-lap + mean(w))^-1.
// Returns the iterate once ||Ax - b||_2 <= rtol * ||b||_2 or the budget is
// exhausted; the caller's line search absorbs the remaining inexactness.
template <int Dim>
ScalarField<Dim> screened_cg(const ScalarField<Dim>& b,
                             const std::vector<double>& w, double w_mean,
                             double rtol, int max_iters) {
  const auto& g = b.grid;
  const std::size_t m = g.size();

  auto apply = [&](const ScalarField<Dim>& x) {
    ScalarField<Dim> ax = laplacian(x);
    for (std::size_t i = 0; i < m; ++i)
      ax.values[i] = -ax.values[i] + w[i] * x.values[i];
    return ax;
  };
  auto precond = [&](const ScalarField<Dim>& r) {
    auto c = spectrum(r);
    for (std::size_t i = 0; i < c.size(); ++i)
      c[i] /= four_pi_sq * mode_ksq(g, i) + w_mean;
    return synthesize(g, c);
  };
  auto dot = [&](const ScalarField<Dim>& x, const ScalarField<Dim>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += x.values[i] * y.values[i];
    return s;
  };

  ScalarField<Dim> x(g), r = b;
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return x;
  ScalarField<Dim> z = precond(r);
  ScalarField<Dim> p = z;
  double rz = dot(r, z);
  for (int it = 0; it < max_iters; ++it) {
    ScalarField<Dim> ap = apply(p);
    const double alpha = rz / dot(p, ap);
    for (std::size_t i = 0; i < m; ++i) {
      x.values[i] += alpha * p.values[i];
      r.values[i] -= alpha * ap.values[i];
    }
    if (std::sqrt(dot(r, r)) <= rtol * bnorm) break;
    z = precond(r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < m; ++i)
      p.values[i] = z.values[i] + beta * p.values[i];
  }
  return x;
}

}  // namespace detail

// Solves the screened equation  lap(u) = exp(U_bar + u) - 1  by an inexact
// Newton iteration. The problem is the Euler-Lagrange equation of the
// strictly convex functional integral( |grad u|^2 / 2 + exp(U_bar+u) - u ),
// so the solution is unique and the Newton system is always definite. Each
// step solves  (-lap + diag(exp(U_bar+u))) delta = residual  by PCG and
// backtracks on the nonlinear residual norm until a fixed fraction of the
// predicted decrease is realized.
template <int Dim>
ScalarField<Dim> solve_screened(const ScalarField<Dim>& U_bar,
                                const SolverSettings& settings,
                                NewtonReport* report_out = nullptr) {
  const auto& g = U_bar.grid;
  const std::size_t m = g.size();
  ScalarField<Dim> u(g);  // start from zero

  NewtonReport report;
  auto fail = [&](const std::string& why) {
    report.converged = false;
    if (report_out) *report_out = report;
    throw ConvergenceError("screened potential solve failed: " + why);
  };

  std::vector<double> w(m);
  for (int it = 0; it <= settings.max_iters; ++it) {
    report.iterations = it;
    // Weights w = exp(U_bar + u) and residual R = lap(u) - w + 1.
    const ScalarField<Dim> lap_u = laplacian(u);
    double w_mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = U_bar.values[i] + u.values[i];
      if (e > settings.exp_guard) fail("potential exponent overflow");
      w[i] = std::exp(e);
      w_mean += w[i];
    }
    w_mean /= static_cast<double>(m);

    ScalarField<Dim> R = lap_u;
    double rnorm_sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      R.values[i] = lap_u.values[i] - w[i] + 1.0;
      rnorm_sq += R.values[i] * R.values[i];
    }
    const double rnorm = std::sqrt(rnorm_sq / static_cast<double>(m));
    report.residual = rnorm;
    if (!std::isfinite(rnorm)) fail("non-finite residual");
    if (rnorm <= settings.tol) {
      report.converged = true;
      if (report_out) *report_out = report;
      return u;
    }
    if (it == settings.max_iters) fail("iteration budget exhausted");

    // Inexact Newton step: forcing term shrinks with the residual.
    const double eta = std::min(0.1, std::sqrt(rnorm));
    ScalarField<Dim> delta = detail::screened_cg(
        R, w, w_mean, eta, settings.max_cg_iters);
    ScalarField<Dim> lap_delta = laplacian(delta);

    // Backtrack on the nonlinear residual norm: the inexact direction gives
    // d/dalpha ||R|| <= -(1 - eta) ||R|| at alpha = 0, so a small multiple
    // of that slope is a sufficient-decrease target that stays resolvable
    // all the way down to tol (a functional-value Armijo test drowns in
    // summation rounding once the decrease per step falls below ~1e-15).
    auto residual_at = [&](double alpha) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double e =
            U_bar.values[i] + u.values[i] + alpha * delta.values[i];
        if (e > settings.exp_guard)
          return std::numeric_limits<double>::infinity();
        const double ri =
            lap_u.values[i] + alpha * lap_delta.values[i] - std::exp(e) + 1.0;
        s += ri * ri;
      }
      return std::sqrt(s / static_cast<double>(m));
    };
    double alpha = 1.0;
    while (!(residual_at(alpha) <=
             (1.0 - 1e-4 * alpha * (1.0 - eta)) * rnorm)) {
      alpha *= 0.5;
      if (alpha < 1e-8) fail("line search stalled");
    }
    for (std::size_t i = 0; i < m; ++i)
      u.values[i] += alpha * delta.values[i];
  }
  fail("unreachable");
  return u;  // not reached
}

// Full nonlinear field solve for a unit-mean density.
template <int Dim>
PotentialSplit<Dim> vpme_field(const ScalarField<Dim>& rho,
                               const SolverSettings& settings = {}) {
  if (!rho.finite()) throw NonFiniteError("density contains NaN/Inf");
  const double mean = rho.mean();
  if (std::abs(mean - 1.0) > 1e-8)
    throw NonZeroMeanError("density must have unit mean");

  const auto& g = rho.grid;
  ScalarField<Dim> source(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    source.values[i] = mean - rho.values[i];
  // Remove the rounding residue of the assembled source: when the density is
  // flat to machine precision the residue is comparable to the source itself
  // and would trip the solvability check.
  const double excess = source.mean();
  for (double& v : source.values) v -= excess;

  PotentialSplit<Dim> split(g);
  split.U_bar = invert_laplacian(source);
  split.U_hat = solve_screened(split.U_bar, settings, &split.report);
  auto grad_bar = gradient(split.U_bar);
  auto grad_hat = gradient(split.U_hat);
  for (int a = 0; a < Dim; ++a)
    for (std::size_t i = 0; i < g.size(); ++i) {
      split.E_bar.comp[a].values[i] = -grad_bar.comp[a].values[i];
      split.E_hat.comp[a].values[i] = -grad_hat.comp[a].values[i];
    }
  return split;
}

// Linear electron model: lap(U) = 1 - rho, E = -grad(U).
template <int Dim>
struct LinearField {
  ScalarField<Dim> U;
  VectorField<Dim> E;
  explicit LinearField(const TorusGrid<Dim>& g) : U(g), E(g) {}
};

template <int Dim>
LinearField<Dim> electron_field(const ScalarField<Dim>& rho) {
  if (!rho.finite()) throw NonFiniteError("density contains NaN/Inf");
  const auto& g = rho.grid;
  const double mean = rho.mean();
  ScalarField<Dim> source(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    source.values[i] = mean - rho.values[i];
  // Same consistency projection as the nonlinear solve: keep the rounding
  // residue of "mean - rho" away from the zero-mean check.
  const double excess = source.mean();
  for (double& v : source.values) v -= excess;
  LinearField<Dim> out(g);
  out.U = invert_laplacian(source);
  auto grad = gradient(out.U);
  for (int a = 0; a < Dim; ++a)
    for (std::size_t i = 0; i < g.size(); ++i)
      out.E.comp[a].values[i] = -grad.comp[a].values[i];
  return out;
}

// Smooth interaction force F = -grad(W * rho); also returns the
// interaction potential W * rho.
template <int Dim>
LinearField<Dim> smooth_force(const ScalarField<Dim>& kernel,
                              const ScalarField<Dim>& rho) {
  if (!rho.finite()) throw NonFiniteError("density contains NaN/Inf");
  require_same_grid(kernel, rho);
  LinearField<Dim> out(rho.grid);
  out.U = convolve(kernel, rho);
  auto grad = gradient(out.U);
  for (int a = 0; a < Dim; ++a)
    for (std::size_t i = 0; i < rho.grid.size(); ++i)
      out.E.comp[a].values[i] = -grad.comp[a].values[i];
  return out;
}

}  // namespace vpme

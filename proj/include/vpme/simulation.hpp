#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "vpme/errors.hpp"
#include "vpme/field_solver.hpp"
#include "vpme/grid.hpp"
#include "vpme/pic.hpp"
#include "vpme/spectral.hpp"

namespace vpme {

enum class ForceType {
  VPME,         // nonlinear adiabatic-electron field
  ElectronVP,   // linear field: lap(U) = 1 - rho
  SmoothKernel  // fixed interaction kernel: F = -grad(W * rho)
};

// Force law driving the particles. A SmoothKernel model carries its kernel;
// any model may smooth both the deposited density and the resulting force
// with the Gaussian multiplier of scale `mollifier_radius`.
template <int Dim>
struct ForceModel {
  ForceType type = ForceType::VPME;
  std::optional<ScalarField<Dim>> kernel;
  std::optional<double> mollifier_radius;

  // Upper bound on the Lipschitz constant of the force map x -> F(x) for a
  // SmoothKernel model with unit-mass density: the largest nodal Frobenius
  // norm of the kernel Hessian (tight for rank-one Hessians such as a
  // single-mode kernel).
  double force_lipschitz() const {
    if (type != ForceType::SmoothKernel || !kernel)
      throw DimensionError("force_lipschitz needs a kernel model");
    const auto& W = *kernel;
    const auto& g = W.grid;
    std::vector<ScalarField<Dim>> hess;
    auto grad = gradient(W);
    for (int a = 0; a < Dim; ++a) {
      auto ga = gradient(grad.comp[a]);
      for (int b = 0; b < Dim; ++b) hess.push_back(ga.comp[b]);
    }
    double best = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double fro = 0.0;
      for (const auto& hcomp : hess) fro += hcomp.values[i] * hcomp.values[i];
      best = std::max(best, fro);
    }
    return std::sqrt(best);
  }
};

// Complete PIC state: particles plus the cached grid quantities consistent
// with the current positions. step() is the only mutator that keeps the
// cache in sync, and one state must be driven by one thread at a time.
template <int Dim>
struct SimState {
  double time = 0.0;
  ParticleEnsemble<Dim> ensemble;
  TorusGrid<Dim> grid;
  ForceModel<Dim> model;
  int shape_order = 2;
  SolverSettings solver;

  ScalarField<Dim> rho;        // raw deposited density
  VectorField<Dim> force;      // grid force particles feel (after smoothing)
  ScalarField<Dim> potential;  // U (field models) or W * rho (kernel model)
  std::optional<PotentialSplit<Dim>> split;  // VPME only
  std::optional<ScalarField<Dim>> rho_eff;   // smoothed density, if any

  SimState(ParticleEnsemble<Dim> ens, const TorusGrid<Dim>& g,
           ForceModel<Dim> m, int order, SolverSettings s)
      : ensemble(std::move(ens)),
        grid(g),
        model(std::move(m)),
        shape_order(order),
        solver(s),
        rho(g),
        force(g),
        potential(g) {}
};

// Recomputes density, potential, and force from the current positions.
template <int Dim>
void refresh_fields(SimState<Dim>& s) {
  s.rho = deposit(s.ensemble, s.grid, s.shape_order);
  const ScalarField<Dim>* rho_used = &s.rho;
  if (s.model.mollifier_radius) {
    s.rho_eff = convolve_mollifier(s.rho, *s.model.mollifier_radius);
    rho_used = &*s.rho_eff;
  } else {
    s.rho_eff.reset();
  }
  switch (s.model.type) {
    case ForceType::VPME: {
      s.split = vpme_field(*rho_used, s.solver);
      s.potential = s.split->U_total();
      s.force = s.split->E_total();
      break;
    }
    case ForceType::ElectronVP: {
      auto lin = electron_field(*rho_used);
      s.split.reset();
      s.potential = std::move(lin.U);
      s.force = std::move(lin.E);
      break;
    }
    case ForceType::SmoothKernel: {
      if (!s.model.kernel)
        throw DimensionError("kernel model without a kernel field");
      auto lin = smooth_force(*s.model.kernel, *rho_used);
      s.split.reset();
      s.potential = std::move(lin.U);
      s.force = std::move(lin.E);
      break;
    }
  }
  if (s.model.mollifier_radius)
    for (int a = 0; a < Dim; ++a)
      s.force.comp[a] =
          convolve_mollifier(s.force.comp[a], *s.model.mollifier_radius);
  if (!s.force.finite()) throw NonFiniteError("force field is not finite");
}

template <int Dim>
SimState<Dim> make_state(ParticleEnsemble<Dim> ens, const TorusGrid<Dim>& g,
                         ForceModel<Dim> model, int shape_order = 2,
                         SolverSettings solver = {}) {
  if (ens.size() == 0) throw DimensionError("empty ensemble");
  SimState<Dim> s(std::move(ens), g, std::move(model), shape_order, solver);
  refresh_fields(s);
  return s;
}

namespace detail {

template <int Dim>
void kick(SimState<Dim>& s, double half_dt) {
  const auto acc = gather(s.force, s.ensemble.positions, s.shape_order);
  parallel_for(s.ensemble.size(), [&](std::size_t p) {
    for (int a = 0; a < Dim; ++a)
      s.ensemble.velocities[p][a] += half_dt * acc[p][a];
  });
}

}  // namespace detail

// One kick-drift-kick step: half velocity update with the current field,
// position drift (wrapped to the torus), field refresh at the new
// positions, half velocity update with the new field. Leaves the cached
// fields consistent with the final positions.
template <int Dim>
void step(SimState<Dim>& s, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw OutOfRangeError("time step must be positive and finite");
  detail::kick(s, 0.5 * dt);
  parallel_for(s.ensemble.size(), [&](std::size_t p) {
    for (int a = 0; a < Dim; ++a)
      s.ensemble.positions[p][a] =
          wrap_unit(s.ensemble.positions[p][a] + dt * s.ensemble.velocities[p][a]);
  });
  refresh_fields(s);
  detail::kick(s, 0.5 * dt);
  if (!s.ensemble.finite())
    throw NonFiniteError("particle state is not finite after step");
  s.time += dt;
}

// Conservative step suggestion: half the tightest of the cell-crossing
// time, the inverse force-gradient frequency, and one time unit.
template <int Dim>
double suggest_dt(const SimState<Dim>& s) {
  double vmax_sq = 0.0;
  for (const auto& v : s.ensemble.velocities) {
    double n = 0.0;
    for (int a = 0; a < Dim; ++a) n += v[a] * v[a];
    vmax_sq = std::max(vmax_sq, n);
  }
  const double vmax = std::sqrt(vmax_sq);
  double grad_linf = 0.0;
  for (int a = 0; a < Dim; ++a) {
    const auto ga = gradient(s.force.comp[a]);
    grad_linf = std::max(grad_linf, ga.linf());
  }
  double dt = 1.0;
  if (vmax > 0.0) dt = std::min(dt, s.grid.h() / vmax);
  dt = std::min(dt, 1.0 / std::sqrt(grad_linf + 1e-12));
  return 0.5 * dt;
}

}  // namespace vpme

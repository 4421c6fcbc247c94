#pragma once

#include <cmath>
#include <vector>

#include "vpme/errors.hpp"
#include "vpme/field_solver.hpp"
#include "vpme/particles.hpp"
#include "vpme/simulation.hpp"
#include "vpme/spectral.hpp"

namespace vpme {

// Weighted velocity moment sum_p w_p |v_p|^order (Euclidean norm); order 0
// recovers the total mass.
template <int Dim>
double velocity_moment(const ParticleEnsemble<Dim>& ens, int order) {
  if (order < 0) throw OutOfRangeError("moment order must be >= 0");
  double s = 0.0, c = 0.0;
  for (std::size_t p = 0; p < ens.size(); ++p) {
    double nsq = 0.0;
    for (int a = 0; a < Dim; ++a)
      nsq += ens.velocities[p][a] * ens.velocities[p][a];
    const double term =
        ens.weights[p] * std::pow(nsq, 0.5 * static_cast<double>(order));
    const double y = term - c, t = s + y;
    c = (t - s) - y;
    s = t;
  }
  if (!std::isfinite(s)) throw NonFiniteError("velocity moment overflowed");
  return s;
}

// Largest particle speed (radius of the velocity support).
template <int Dim>
double velocity_support(const ParticleEnsemble<Dim>& ens) {
  double m = 0.0;
  for (const auto& v : ens.velocities) {
    double nsq = 0.0;
    for (int a = 0; a < Dim; ++a) nsq += v[a] * v[a];
    m = std::max(m, nsq);
  }
  return std::sqrt(m);
}

struct EnergyBreakdown {
  double kinetic = 0.0;  // sum w |v|^2 / 2
  double field = 0.0;    // integral |grad U|^2 / 2  (interaction energy for
                         // kernel models: integral rho (W*rho) / 2)
  double thermal = 0.0;  // integral U exp(U)  (adiabatic-electron term)
  double total = 0.0;
};

// Energy of a simulation state, using the same nodal and spectral
// quadratures as the field solve so that the reported total matches the
// invariant the time integrator preserves. Requires the cached fields to
// be in sync with the particles (guaranteed after make_state/step).
template <int Dim>
EnergyBreakdown energy(const SimState<Dim>& s) {
  if (s.potential.values.size() != s.grid.size())
    throw StaleFieldError("state has no cached potential");
  EnergyBreakdown e;
  e.kinetic = 0.5 * velocity_moment(s.ensemble, 2);
  switch (s.model.type) {
    case ForceType::VPME: {
      if (!s.split) throw StaleFieldError("state has no cached field split");
      e.field = 0.5 * grad_sq_integral(s.potential);
      double t = 0.0;
      for (double u : s.potential.values) t += u * std::exp(u);
      e.thermal = t / static_cast<double>(s.grid.size());
      break;
    }
    case ForceType::ElectronVP:
      e.field = 0.5 * grad_sq_integral(s.potential);
      break;
    case ForceType::SmoothKernel: {
      const ScalarField<Dim>& rho = s.rho_eff ? *s.rho_eff : s.rho;
      double t = 0.0;
      for (std::size_t i = 0; i < s.grid.size(); ++i)
        t += rho.values[i] * s.potential.values[i];
      e.field = 0.5 * t / static_cast<double>(s.grid.size());
      break;
    }
  }
  e.total = e.kinetic + e.field + e.thermal;
  return e;
}

// Sharp constant of the velocity-averaging bound
//   ||rho||_{(d+2)/d} <= C_d ||f||_inf^{2/(d+2)} (integral |v|^2 f)^{d/(d+2)}
// obtained by optimizing the split rho <= ||f||_inf w_d R^d + m2(x) R^{-2}
// over the truncation radius R, where w_d is the unit ball volume:
//   C_d = w_d^{2/(d+2)} [ (2/d)^{d/(d+2)} + (d/2)^{2/(d+2)} ].
inline double interpolation_constant(int dim) {
  const double d = static_cast<double>(dim);
  const double wd = ball_volume(dim);
  return std::pow(wd, 2.0 / (d + 2.0)) *
         (std::pow(2.0 / d, d / (d + 2.0)) +
          std::pow(d / 2.0, 2.0 / (d + 2.0)));
}

struct LpCheck {
  double p = 0.0;        // exponent (d+2)/d
  double norm = 0.0;     // ||rho||_p from nodal quadrature
  double bound = 0.0;    // C_d ||f||_inf^{2/(d+2)} (2 kinetic)^{d/(d+2)}
  bool satisfied = false;
};

template <int Dim>
LpCheck rho_lp_check(const ScalarField<Dim>& rho, double f_linf,
                     double kinetic_energy) {
  if (!(f_linf > 0.0) || !(kinetic_energy >= 0.0))
    throw OutOfRangeError("density bound needs f_linf > 0, kinetic >= 0");
  LpCheck out;
  const double d = static_cast<double>(Dim);
  out.p = (d + 2.0) / d;
  double s = 0.0;
  for (double v : rho.values) s += std::pow(std::abs(v), out.p);
  out.norm = std::pow(s / static_cast<double>(rho.values.size()), 1.0 / out.p);
  out.bound = interpolation_constant(Dim) *
              std::pow(f_linf, 2.0 / (d + 2.0)) *
              std::pow(2.0 * kinetic_energy, d / (d + 2.0));
  out.satisfied = out.norm <= out.bound * (1.0 + 1e-12);
  return out;
}

// Ratio of the high-frequency content of the screened correction to that of
// the linear potential: max |U_hat_k| over max |U_bar_k| on modes with
// |k| >= cutoff_fraction * n. Zero numerator and denominator count as zero.
template <int Dim>
double hat_tail_ratio(const PotentialSplit<Dim>& split,
                      double cutoff_fraction = 0.25) {
  const auto& g = split.U_bar.grid;
  const auto cb = spectrum(split.U_bar);
  const auto ch = spectrum(split.U_hat);
  const double kcut_sq = cutoff_fraction * g.n() * cutoff_fraction * g.n();
  double tail_bar = 0.0, tail_hat = 0.0;
  for (std::size_t i = 0; i < cb.size(); ++i) {
    if (mode_ksq(g, i) < kcut_sq) continue;
    tail_bar = std::max(tail_bar, std::abs(cb[i]));
    tail_hat = std::max(tail_hat, std::abs(ch[i]));
  }
  if (tail_bar == 0.0) return 0.0;
  return tail_hat / tail_bar;
}

// One row of the time-series log written by the drivers.
struct DiagnosticsRecord {
  double time = 0.0;
  EnergyBreakdown e;
  double m2 = 0.0, m4 = 0.0, m_cfg = 0.0;
  double rho_linf = 0.0;
  double rho_lp = 0.0;
  double support_v = 0.0;
  double hat_tail = 0.0;
};

template <int Dim>
DiagnosticsRecord collect_diagnostics(const SimState<Dim>& s,
                                      int extra_moment_order) {
  DiagnosticsRecord r;
  r.time = s.time;
  r.e = energy(s);
  r.m2 = velocity_moment(s.ensemble, 2);
  r.m4 = velocity_moment(s.ensemble, 4);
  r.m_cfg = velocity_moment(s.ensemble, extra_moment_order);
  r.rho_linf = s.rho.linf();
  const double d = static_cast<double>(Dim);
  const double p = (d + 2.0) / d;
  double sum = 0.0;
  for (double v : s.rho.values) sum += std::pow(std::abs(v), p);
  r.rho_lp = std::pow(sum / static_cast<double>(s.grid.size()), 1.0 / p);
  r.support_v = velocity_support(s.ensemble);
  r.hat_tail = s.split ? hat_tail_ratio(*s.split) : 0.0;
  return r;
}

}  // namespace vpme

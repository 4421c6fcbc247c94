#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vpme/config.hpp"
#include "vpme/csv.hpp"
#include "vpme/diagnostics.hpp"
#include "vpme/simulation.hpp"
#include "vpme/snapshot.hpp"
#include "vpme/transport.hpp"

namespace vpme {

// Exit-code contract shared by all drivers: 0 success, 2 bad usage or bad
// input files, 3 numerical or runtime failure.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

inline const char* kDiagnosticsHeader =
    "time,kinetic,field_energy,thermal,total,m2,m4,m_cfg,rho_linf,rho_lp,"
    "support_v,hat_tail";

inline std::vector<double> diagnostics_row(const DiagnosticsRecord& r) {
  return {r.time,     r.e.kinetic, r.e.field,  r.e.thermal,
          r.e.total,  r.m2,        r.m4,       r.m_cfg,
          r.rho_linf, r.rho_lp,    r.support_v, r.hat_tail};
}

namespace detail {

template <int Dim>
ForceModel<Dim> build_model(const ExperimentConfig& cfg,
                            const TorusGrid<Dim>& grid,
                            std::optional<double> mollifier) {
  ForceModel<Dim> model;
  model.type = cfg.model;
  model.mollifier_radius = mollifier;
  if (cfg.model == ForceType::SmoothKernel) {
    ScalarField<Dim> W(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto x = grid.point(grid.unflatten(i));
      W.values[i] = cfg.kernel_amp * std::cos(two_pi * cfg.kernel_mode * x[0]);
    }
    model.kernel = std::move(W);
  }
  return model;
}

// Assembles a ready-to-step state; v_shift displaces every velocity by a
// fixed amount along the first axis (the stability experiments' exactly
// quantified perturbation: it moves the ensemble by W2 = |v_shift|).
template <int Dim>
SimState<Dim> build_state(const ExperimentConfig& cfg, const Scenario& sc,
                          std::optional<double> mollifier, std::uint64_t seed,
                          double v_shift = 0.0) {
  const TorusGrid<Dim> grid(cfg.grid_n);
  auto ens = sample_initial<Dim>(sc, cfg.particles, seed);
  if (v_shift != 0.0)
    for (auto& v : ens.velocities) v[0] += v_shift;
  SolverSettings solver;
  solver.tol = cfg.newton_tol;
  solver.max_iters = cfg.newton_max_iters;
  return make_state<Dim>(std::move(ens), grid,
                         build_model<Dim>(cfg, grid, mollifier),
                         cfg.shape_order, solver);
}

// Uniform step count covering [0, t_end] exactly.
template <int Dim>
std::pair<double, int> resolve_steps(const SimState<Dim>& s,
                                     const ExperimentConfig& cfg) {
  const double req = cfg.dt ? *cfg.dt : suggest_dt(s);
  if (!(req > 0) || !std::isfinite(req))
    throw OutOfRangeError("no valid time step available");
  const int n = std::max(1, static_cast<int>(std::ceil(cfg.t_end / req - 1e-12)));
  return {cfg.t_end / n, n};
}

inline std::filesystem::path prepare_out_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string snapshot_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%06d.snap", step);
  return buf;
}

DiscreteMeasure inline measure_from_snapshot(const RawSnapshot& s) {
  DiscreteMeasure m;
  m.dim = 2 * s.dim;
  m.n_periodic = s.dim;
  m.points.resize(s.count * m.dim);
  m.masses.resize(s.count);
  double total = 0.0;
  for (double w : s.weights) total += w;
  if (!(total > 0.0)) throw FormatError("snapshot has no mass");
  for (std::size_t p = 0; p < s.count; ++p) {
    for (int a = 0; a < s.dim; ++a) {
      m.points[p * m.dim + a] = s.positions[p * s.dim + a];
      m.points[p * m.dim + s.dim + a] = s.velocities[p * s.dim + a];
    }
    m.masses[p] = s.weights[p] / total;
  }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run: integrate one configuration, logging diagnostics and snapshots
// ---------------------------------------------------------------------------

template <int Dim>
int run_impl(const ExperimentConfig& cfg, std::ostream& os) {
  const auto dir = detail::prepare_out_dir(cfg);
  auto state = detail::build_state<Dim>(cfg, cfg.scenario,
                                        cfg.mollifier_radius, cfg.seed);
  const auto [dt, nsteps] = detail::resolve_steps(state, cfg);

  CsvWriter csv(kDiagnosticsHeader);
  const auto first = collect_diagnostics(state, cfg.moment_order);
  csv.row(diagnostics_row(first));
  write_snapshot(dir / "snapshot_initial.snap", state.ensemble, state.time);

  for (int s = 1; s <= nsteps; ++s) {
    step(state, dt);
    if (s % cfg.log_every == 0 || s == nsteps)
      csv.row(diagnostics_row(collect_diagnostics(state, cfg.moment_order)));
    if (cfg.snapshot_every > 0 && s % cfg.snapshot_every == 0 && s != nsteps)
      write_snapshot(dir / detail::snapshot_name(s), state.ensemble,
                     state.time);
  }
  write_snapshot(dir / "snapshot_final.snap", state.ensemble, state.time);
  csv.save(dir / "diagnostics.csv");

  const auto last = collect_diagnostics(state, cfg.moment_order);
  const double drift = std::abs(last.e.total - first.e.total) /
                       std::max(std::abs(first.e.total), 1e-300);
  os << "run: dim=" << Dim << " scenario=" << scenario_name(cfg.scenario.kind)
     << " steps=" << nsteps << " dt=" << format_double(dt)
     << " energy_drift=" << format_double(drift) << '\n';
  return 0;
}

inline int cmd_run(const ExperimentConfig& cfg, std::ostream& os) {
  switch (cfg.dim) {
    case 1: return run_impl<1>(cfg, os);
    case 2: return run_impl<2>(cfg, os);
    case 3: return run_impl<3>(cfg, os);
  }
  throw ConfigError("dim must be 1, 2, or 3");
}

// ---------------------------------------------------------------------------
// stability: perturbation growth against the unperturbed run
// ---------------------------------------------------------------------------

// Each perturbed run starts from the same draw as its reference with every
// velocity shifted by eps along the first axis, so the initial distance is
// exactly eps (translation in the Euclidean velocity factor). Trials repeat
// the pair with seeds seed, seed+1, ... and append rows per trial.
template <int Dim>
int stability_impl(const ExperimentConfig& cfg,
                   const std::vector<double>& eps_list, int trials,
                   std::ostream& os) {
  if (eps_list.empty())
    throw ConfigError("stability needs at least one perturbation size");
  for (double e : eps_list)
    if (!(e >= 0 && e < 1))
      throw ConfigError("perturbation sizes must lie in [0, 1)");
  if (trials < 1) throw ConfigError("trials must be positive");
  const auto dir = detail::prepare_out_dir(cfg);

  CsvWriter series_csv("eps,t,w2,logL");
  CsvWriter fit_csv("eps,C,residual,t0_implied");
  CsvWriter density_csv("eps,rho_linf_sup,w2_floor,floor_dominated");
  const double cap = 16.0 * Dim * std::numbers::e;

  for (const double eps : eps_list) {
    for (int trial = 0; trial < trials; ++trial) {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(trial);
      auto ref = detail::build_state<Dim>(cfg, cfg.scenario,
                                          cfg.mollifier_radius, seed);
      auto run = detail::build_state<Dim>(cfg, cfg.scenario,
                                          cfg.mollifier_radius, seed, eps);

      const auto [dt, nsteps] = detail::resolve_steps(run, cfg);
      std::vector<double> times, dists;
      double rho_sup = 0.0;
      // The paired runs share their particle indexing, so the index coupling
      // gives a deterministic full-ensemble distance with no resampling
      // floor: the whole point of perturbing by a velocity shift is that the
      // logged distance (= eps at t = 0) and the fitted slope stay free of
      // sampling noise.
      auto record = [&](double t) {
        const double w2 = coupled_w2(run.ensemble, ref.ensemble);
        times.push_back(t);
        dists.push_back(w2);
        rho_sup = std::max({rho_sup, run.rho.linf(), ref.rho.linf()});
        const double ratio = w2 * w2 / cap;
        const double logL = ratio > 0.0 && ratio < 1.0
                                ? std::log(-std::log(ratio))
                                : std::numeric_limits<double>::quiet_NaN();
        series_csv.row({eps, t, w2, logL});
      };
      record(0.0);
      for (int s = 1; s <= nsteps; ++s) {
        step(ref, dt);
        step(run, dt);
        if (s % cfg.log_every == 0 || s == nsteps) record(run.time);
      }

      // identical runs (eps = 0, or distances at rounding) carry no signal:
      // skip the fit and flag the row instead of failing
      StabilityFit fit;
      double t0 = 0.0;
      if (std::all_of(dists.begin(), dists.end(),
                      [](double w) { return w > 0.0; })) {
        fit = fit_stability_constant(times, dists, Dim);
        t0 = implied_onset_time(fit.C, dists.front(), Dim);
      } else {
        fit.floor_dominated = true;
      }
      fit_csv.row({eps, fit.C, fit.residual, t0});
      density_csv.row({eps, rho_sup, 0.0, fit.floor_dominated ? 1.0 : 0.0});
      os << "stability: eps=" << format_double(eps)
         << " C=" << format_double(fit.C)
         << " residual=" << format_double(fit.residual)
         << (fit.floor_dominated ? " (floor dominated)" : "") << '\n';
    }
  }
  series_csv.save(dir / "stability.csv");
  fit_csv.save(dir / "stability_fit.csv");
  density_csv.save(dir / "stability_density.csv");
  return 0;
}

inline int cmd_stability(const ExperimentConfig& cfg,
                         const std::vector<double>& eps_list, int trials,
                         std::ostream& os) {
  switch (cfg.dim) {
    case 1: return stability_impl<1>(cfg, eps_list, trials, os);
    case 2: return stability_impl<2>(cfg, eps_list, trials, os);
    case 3: return stability_impl<3>(cfg, eps_list, trials, os);
  }
  throw ConfigError("dim must be 1, 2, or 3");
}

// ---------------------------------------------------------------------------
// mollify: final-state distance to the unsmoothed run across radii
// ---------------------------------------------------------------------------

template <int Dim>
int mollify_impl(const ExperimentConfig& cfg, const std::vector<double>& radii,
                 std::ostream& os) {
  if (radii.empty()) throw ConfigError("mollify needs at least one radius");
  for (double r : radii)
    if (!(r > 0 && r <= 0.5))
      throw ConfigError("mollifier radii must lie in (0, 0.5]");
  const auto dir = detail::prepare_out_dir(cfg);

  auto ref = detail::build_state<Dim>(cfg, cfg.scenario, std::nullopt,
                                      cfg.seed);
  const auto [dt, nsteps] = detail::resolve_steps(ref, cfg);
  for (int s = 1; s <= nsteps; ++s) step(ref, dt);

  CsvWriter csv("r,w2,floor");
  for (const double r : radii) {
    auto state = detail::build_state<Dim>(cfg, cfg.scenario, r, cfg.seed);
    for (int s = 1; s <= nsteps; ++s) step(state, dt);
    const auto est = ensemble_w2(state.ensemble, ref.ensemble,
                                 cfg.w2_subsample);
    csv.row({r, est.value, est.floor});
    os << "mollify: r=" << format_double(r)
       << " w2=" << format_double(est.value)
       << " floor=" << format_double(est.floor) << '\n';
  }
  csv.save(dir / "mollify.csv");
  return 0;
}

inline int cmd_mollify(const ExperimentConfig& cfg,
                       const std::vector<double>& radii, std::ostream& os) {
  switch (cfg.dim) {
    case 1: return mollify_impl<1>(cfg, radii, os);
    case 2: return mollify_impl<2>(cfg, radii, os);
    case 3: return mollify_impl<3>(cfg, radii, os);
  }
  throw ConfigError("dim must be 1, 2, or 3");
}

// ---------------------------------------------------------------------------
// moments: velocity moment growth over a run
// ---------------------------------------------------------------------------

template <int Dim>
int moments_impl(const ExperimentConfig& cfg, const std::vector<int>& orders,
                 std::ostream& os) {
  if (orders.empty()) throw ConfigError("moments needs at least one order");
  for (int o : orders)
    if (o < 0 || o > 64) throw ConfigError("moment orders must lie in [0, 64]");
  const auto dir = detail::prepare_out_dir(cfg);

  auto state = detail::build_state<Dim>(cfg, cfg.scenario,
                                        cfg.mollifier_radius, cfg.seed);
  const auto [dt, nsteps] = detail::resolve_steps(state, cfg);

  std::string header = "time";
  for (int o : orders) header += ",m" + std::to_string(o);
  CsvWriter csv(header);
  std::vector<double> sup(orders.size(), 0.0);
  auto record = [&]() {
    std::vector<double> row{state.time};
    for (std::size_t k = 0; k < orders.size(); ++k) {
      const double m = velocity_moment(state.ensemble, orders[k]);
      sup[k] = std::max(sup[k], m);
      row.push_back(m);
    }
    csv.row(row);
  };
  record();
  for (int s = 1; s <= nsteps; ++s) {
    step(state, dt);
    if (s % cfg.log_every == 0 || s == nsteps) record();
  }
  std::string sup_row = "sup";
  for (double m : sup) sup_row += "," + format_double(m);
  csv.raw_row(sup_row);
  csv.save(dir / "moments.csv");
  os << "moments: " << sup_row << '\n';
  return 0;
}

inline int cmd_moments(const ExperimentConfig& cfg,
                       const std::vector<int>& orders, std::ostream& os) {
  switch (cfg.dim) {
    case 1: return moments_impl<1>(cfg, orders, os);
    case 2: return moments_impl<2>(cfg, orders, os);
    case 3: return moments_impl<3>(cfg, orders, os);
  }
  throw ConfigError("dim must be 1, 2, or 3");
}

// ---------------------------------------------------------------------------
// w2: transport distance between two stored snapshots
// ---------------------------------------------------------------------------

inline int cmd_w2(const std::string& path_a, const std::string& path_b,
                  const ExperimentConfig& cfg, std::ostream& os) {
  const auto snap_a = read_snapshot(path_a);
  const auto snap_b = read_snapshot(path_b);
  if (snap_a.dim != snap_b.dim)
    throw FormatError("snapshots have different dimensions");
  const auto ma = detail::measure_from_snapshot(snap_a);
  const auto mb = detail::measure_from_snapshot(snap_b);
  const std::size_t cap = cfg.w2_subsample;

  auto uniform = [](const DiscreteMeasure& m) {
    const double um = 1.0 / static_cast<double>(m.size());
    for (double w : m.masses)
      if (std::abs(w - um) > 1e-9 * um) return false;
    return true;
  };
  const bool exact = ma.size() <= cap && mb.size() <= cap &&
                     ma.size() == mb.size() && uniform(ma) && uniform(mb);
  double value = 0.0, floor = 0.0;
  if (exact) {
    value = w2_exact(ma, mb);
  } else {
    const std::size_t m = std::min({cap, ma.size(), mb.size()});
    value = w2_exact(systematic_resample(ma, m, 0.5),
                     systematic_resample(mb, m, 0.5));
    floor = w2_exact(systematic_resample(ma, m, 0.25),
                     systematic_resample(ma, m, 0.75));
  }
  const auto dir = detail::prepare_out_dir(cfg);
  CsvWriter csv("w2,floor,count_a,count_b,matched");
  csv.row({value, floor, static_cast<double>(ma.size()),
           static_cast<double>(mb.size()),
           static_cast<double>(exact ? ma.size() : std::min({cap, ma.size(),
                                                             mb.size()}))});
  csv.save(dir / "w2.csv");
  os << "w2=" << format_double(value) << " floor=" << format_double(floor)
     << '\n';
  return 0;
}

}  // namespace vpme

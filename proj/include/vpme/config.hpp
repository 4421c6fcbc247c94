#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "vpme/errors.hpp"
#include "vpme/particles.hpp"
#include "vpme/simulation.hpp"

namespace vpme {

// Everything a driver needs, with the documented defaults. Parsed from
// `key = value` text; '#' starts a comment, blank lines are ignored.
struct ExperimentConfig {
  int dim = 1;
  int grid_n = 64;
  std::size_t particles = 100000;
  std::optional<double> dt;  // absent = pick from suggest_dt at start
  double t_end = 1.0;
  int log_every = 10;     // steps between diagnostics rows
  int shape_order = 2;
  ForceType model = ForceType::VPME;
  int kernel_mode = 1;      // cosine kernel wavenumber (kernel model)
  double kernel_amp = 1.0;  // cosine kernel amplitude (kernel model)
  std::optional<double> mollifier_radius;
  Scenario scenario;
  std::uint64_t seed = 12345;
  std::string out_dir = "out";
  double newton_tol = 1e-10;
  int newton_max_iters = 50;
  std::size_t w2_subsample = 2000;
  int moment_order = 6;   // extra moment column m_cfg
  int snapshot_every = 0;  // 0 = initial and final snapshots only
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void config_fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

inline double to_double(const std::string& v, int line) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (...) {
    config_fail(line, "expected a number, got '" + v + "'");
  }
  if (pos != v.size()) config_fail(line, "trailing junk in number '" + v + "'");
  return x;
}

inline long long to_int(const std::string& v, int line) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (...) {
    config_fail(line, "expected an integer, got '" + v + "'");
  }
  if (pos != v.size())
    config_fail(line, "trailing junk in integer '" + v + "'");
  return x;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    std::string line = detail::trim(hash == std::string::npos
                                        ? raw
                                        : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      detail::config_fail(lineno, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      detail::config_fail(lineno, "expected 'key = value'");

    auto integer = [&](long long lo, long long hi) {
      const long long x = detail::to_int(val, lineno);
      if (x < lo || x > hi)
        detail::config_fail(lineno, "value for " + key + " out of range");
      return x;
    };
    auto real = [&]() { return detail::to_double(val, lineno); };

    if (key == "dim") {
      cfg.dim = static_cast<int>(integer(1, 3));
    } else if (key == "grid_n") {
      const int n = static_cast<int>(integer(4, 1 << 20));
      if (!is_power_of_two(n))
        detail::config_fail(lineno, "grid_n must be a power of two");
      cfg.grid_n = n;
    } else if (key == "particles") {
      cfg.particles = static_cast<std::size_t>(integer(1, 1LL << 40));
    } else if (key == "dt") {
      if (val == "auto") {
        cfg.dt.reset();
      } else {
        const double x = real();
        if (!(x > 0)) detail::config_fail(lineno, "dt must be positive");
        cfg.dt = x;
      }
    } else if (key == "t_end") {
      const double x = real();
      if (!(x > 0)) detail::config_fail(lineno, "t_end must be positive");
      cfg.t_end = x;
    } else if (key == "log_every") {
      cfg.log_every = static_cast<int>(integer(1, 1 << 30));
    } else if (key == "shape_order") {
      cfg.shape_order = static_cast<int>(integer(1, 3));
    } else if (key == "model") {
      if (val == "vpme") cfg.model = ForceType::VPME;
      else if (val == "electron") cfg.model = ForceType::ElectronVP;
      else if (val == "kernel") cfg.model = ForceType::SmoothKernel;
      else detail::config_fail(lineno, "unknown model '" + val + "'");
    } else if (key == "kernel_mode") {
      cfg.kernel_mode = static_cast<int>(integer(1, 1 << 20));
    } else if (key == "kernel_amp") {
      cfg.kernel_amp = real();
    } else if (key == "mollifier_radius") {
      if (val == "none") {
        cfg.mollifier_radius.reset();
      } else {
        const double x = real();
        if (!(x > 0 && x <= 0.5))
          detail::config_fail(lineno, "mollifier_radius must be in (0, 0.5]");
        cfg.mollifier_radius = x;
      }
    } else if (key == "scenario") {
      if (val == "uniform_maxwellian")
        cfg.scenario.kind = ScenarioKind::UniformMaxwellian;
      else if (val == "perturbed_maxwellian")
        cfg.scenario.kind = ScenarioKind::PerturbedMaxwellian;
      else if (val == "two_stream")
        cfg.scenario.kind = ScenarioKind::TwoStream;
      else if (val == "compact_support")
        cfg.scenario.kind = ScenarioKind::CompactSupport;
      else
        detail::config_fail(lineno, "unknown scenario '" + val + "'");
    } else if (key == "sigma") {
      const double x = real();
      if (!(x > 0)) detail::config_fail(lineno, "sigma must be positive");
      cfg.scenario.sigma = x;
    } else if (key == "delta") {
      const double x = real();
      if (!(std::abs(x) < 1))
        detail::config_fail(lineno, "delta must satisfy |delta| < 1");
      cfg.scenario.delta = x;
    } else if (key == "mode") {
      cfg.scenario.mode = static_cast<int>(integer(1, 1 << 20));
    } else if (key == "v0") {
      cfg.scenario.v0 = real();
    } else if (key == "rx") {
      const double x = real();
      if (!(x > 0 && x <= 0.5))
        detail::config_fail(lineno, "rx must be in (0, 0.5]");
      cfg.scenario.rx = x;
    } else if (key == "rv") {
      const double x = real();
      if (!(x > 0)) detail::config_fail(lineno, "rv must be positive");
      cfg.scenario.rv = x;
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(integer(0, (1LL << 62)));
    } else if (key == "out_dir") {
      cfg.out_dir = val;
    } else if (key == "newton_tol") {
      const double x = real();
      if (!(x > 0)) detail::config_fail(lineno, "newton_tol must be positive");
      cfg.newton_tol = x;
    } else if (key == "newton_max_iters") {
      cfg.newton_max_iters = static_cast<int>(integer(1, 1 << 20));
    } else if (key == "w2_subsample") {
      cfg.w2_subsample = static_cast<std::size_t>(integer(1, 4000));
    } else if (key == "moment_order") {
      cfg.moment_order = static_cast<int>(integer(0, 64));
    } else if (key == "snapshot_every") {
      cfg.snapshot_every = static_cast<int>(integer(0, 1 << 30));
    } else {
      detail::config_fail(lineno, "unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace vpme

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "vpme/errors.hpp"
#include "vpme/grid.hpp"

namespace vpme {

// Weighted particle cloud in phase space. Positions live on the unit torus,
// velocities are unconstrained. Weights sum to the total mass (one for all
// built-in scenarios).
template <int Dim>
struct ParticleEnsemble {
  std::vector<Vec<Dim>> positions;
  std::vector<Vec<Dim>> velocities;
  std::vector<double> weights;

  std::size_t size() const { return positions.size(); }

  bool finite() const {
    auto ok = [](const std::vector<Vec<Dim>>& vs) {
      for (const auto& v : vs)
        for (double x : v)
          if (!std::isfinite(x)) return false;
      return true;
    };
    if (!ok(positions) || !ok(velocities)) return false;
    for (double w : weights)
      if (!std::isfinite(w)) return false;
    return true;
  }

  double total_mass() const {
    double s = 0.0, c = 0.0;
    for (double w : weights) {
      double y = w - c, t = s + y;
      c = (t - s) - y;
      s = t;
    }
    return s;
  }
};

inline double wrap_unit(double x) {
  x -= std::floor(x);
  return x < 1.0 ? x : 0.0;  // guard against floor rounding at the seam
}

// ---------------------------------------------------------------------------
// Low-discrepancy machinery
// ---------------------------------------------------------------------------

// Van der Corput radical inverse in base b of index i >= 1.
inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

inline constexpr std::array<std::uint64_t, 6> kHaltonBases{2, 3, 5, 7, 11, 13};

// Rank-1 lattice generator for d = 2, 3: points i * (1, a, a^2)/N. The
// multiplier is chosen by a deterministic scan that keeps short dual
// vectors (integer k with k.z = 0 mod N) away from the low modes that a
// field grid can resolve, so depositing a uniform cloud reproduces a flat
// density up to the shape function's far tail.
inline std::uint64_t korobov_multiplier(std::uint64_t N, int dim,
                                        int kmax = 32) {
  if (N < 8) return 1;
  const double golden = 0.6180339887498949;
  auto score = [&](std::uint64_t a) {
    const std::uint64_t a2 = (dim == 3) ? (a * a) % N : 0;
    std::uint64_t worst = N;
    auto dist0 = [&](std::uint64_t m) { return std::min(m, N - m); };
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      const int k3max = (dim == 3) ? kmax : 0;
      for (int k3 = -k3max; k3 <= k3max; ++k3) {
        if (k2 == 0 && k3 == 0) continue;
        // residue of k2*a + k3*a^2 mod N, handling negative k
        std::uint64_t m = 0;
        auto add = [&](long long k, std::uint64_t mult) {
          const std::uint64_t kk =
              static_cast<std::uint64_t>(((k % (long long)N) + (long long)N) %
                                         (long long)N);
          m = (m + kk * mult) % N;
        };
        add(k2, a % N);
        if (dim == 3) add(k3, a2);
        // distance of the nearest k1 completing a dual vector: need
        // k1 = -m mod N with |k1| <= kmax, i.e. m close to 0 or N.
        worst = std::min(worst, dist0(m));
      }
    }
    return worst;
  };
  std::uint64_t best_a = 1, best_score = 0;
  for (int j = 1; j <= 64; ++j) {
    std::uint64_t a =
        static_cast<std::uint64_t>(std::fmod(golden * j * double(N), double(N)));
    a |= 1;  // odd, hence coprime with even N; harmless otherwise
    if (a <= 1 || a >= N || std::gcd(a, N) != 1) continue;
    const std::uint64_t s = score(a);
    if (s > best_score) {
      best_score = s;
      best_a = a;
    }
  }
  return best_a;
}

// Inverse of the standard normal CDF (Acklam's rational approximation
// polished by one Halley step with erfc, accurate to ~1 ulp across (0,1)).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw OutOfRangeError("normal quantile needs p in (0,1)");
  // Mirror the upper half through the lower tail: 1 - p is exact for
  // p >= 0.5, and the erfc polish below keeps full relative precision only
  // on the small side of the CDF.
  if (p > 0.5) return -normal_quantile(1.0 - p);
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // One Halley step against the exact CDF; x <= 0 here, so the erfc
  // argument is nonnegative and the difference carries no cancellation.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// ---------------------------------------------------------------------------
// Initial-data scenarios
// ---------------------------------------------------------------------------

enum class ScenarioKind {
  UniformMaxwellian,    // flat density, Gaussian velocities
  PerturbedMaxwellian,  // 1 + delta*cos(2 pi m x1) density, Gaussian velocities
  TwoStream,            // counter-streaming beams at +-v0, perturbed density
  CompactSupport        // uniform box in x around 1/2, uniform velocity ball
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::PerturbedMaxwellian;
  double sigma = 1.0;  // Gaussian velocity spread
  double delta = 0.1;  // density perturbation amplitude, |delta| < 1
  int mode = 1;        // density perturbation wavenumber
  double v0 = 1.0;     // beam speed for the two-stream profile
  double rx = 0.25;    // spatial half-width for the compact profile
  double rv = 1.0;     // velocity ball radius for the compact profile
};

inline const char* scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::UniformMaxwellian: return "uniform_maxwellian";
    case ScenarioKind::PerturbedMaxwellian: return "perturbed_maxwellian";
    case ScenarioKind::TwoStream: return "two_stream";
    case ScenarioKind::CompactSupport: return "compact_support";
  }
  return "?";
}

namespace detail {

// Inverts F(x) = x + delta*sin(2 pi m x)/(2 pi m) on [0,1) by Newton with
// bisection fallback; F' = 1 + delta*cos >= 1 - |delta| > 0.
inline double invert_perturbed_cdf(double u, double delta, int mode) {
  const double w = 2.0 * std::numbers::pi * mode;
  double lo = 0.0, hi = 1.0, x = u;
  for (int it = 0; it < 64; ++it) {
    const double f = x + delta * std::sin(w * x) / w - u;
    if (f > 0)
      hi = x;
    else
      lo = x;
    const double step = f / (1.0 + delta * std::cos(w * x));
    double nx = x - step;
    if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
    if (std::abs(nx - x) < 1e-15) return nx;
    x = nx;
  }
  return x;
}

}  // namespace detail

// Deterministic quasi-random draw: rank-1 lattice positions and Halton
// Gaussian velocities, both under a seeded Cranley-Patterson rotation, so a
// given (scenario, N, seed) always produces the same cloud and different
// seeds decorrelate runs.
template <int Dim>
ParticleEnsemble<Dim> sample_initial(const Scenario& sc, std::size_t N,
                                     std::uint64_t seed) {
  if (N == 0) throw DimensionError("cannot sample an empty ensemble");
  if (std::abs(sc.delta) >= 1.0)
    throw OutOfRangeError("density perturbation must satisfy |delta| < 1");

  std::mt19937_64 rng(seed);
  auto unit_draw = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  std::array<double, 2 * Dim + 1> shift{};
  for (auto& s : shift) s = unit_draw();

  const std::uint64_t a = Dim >= 2 ? korobov_multiplier(N, Dim) : 1;
  const std::uint64_t a2 = Dim == 3 ? (a * a) % N : 0;

  // One-dimensional uniform quiet start: split the cloud into q velocity
  // beams, each an equispaced lattice of B = N/q points (beam = index mod q).
  // Every Fourier mode of a beam's deposited density is then a multiple of
  // B; with B a multiple of 32, all of those land on the mean or the Nyquist
  // mode of any power-of-two grid up to n = 64, which the spectral gradient
  // maps to zero force. The cloud therefore stays force-free under free
  // streaming for all time, not just at t = 0, instead of decohering at the
  // quasi-random discrepancy scale. Velocities are Gaussian quantiles of
  // rotated stratum midpoints, so each beam carries equal mass.
  std::size_t beams = 0;
  if (Dim == 1 && sc.kind == ScenarioKind::UniformMaxwellian) {
    for (std::size_t B = 128; 2 * B <= N; B += 32)
      if (N % B == 0) {
        beams = N / B;
        break;
      }
  }

  ParticleEnsemble<Dim> ens;
  ens.positions.resize(N);
  ens.velocities.resize(N);
  ens.weights.assign(N, 1.0 / static_cast<double>(N));

  auto gauss = [](double u) {
    // rotation can wrap a draw onto exactly zero; the quantile needs (0,1)
    if (u <= 0.0) u = 0x1.0p-60;
    return normal_quantile(u);
  };

  // Beam velocity table: Gaussian quantiles of rotated stratum midpoints,
  // rescaled once so the quantized second moment is exact (the midpoint rule
  // under-disperses the tails by O(1/q), and the even moments inherit that
  // bias through the variance).
  std::vector<double> beam_v(beams);
  if (beams > 0) {
    double s2 = 0.0;
    for (std::size_t b = 0; b < beams; ++b) {
      const double mid =
          (static_cast<double>(b) + 0.5) / static_cast<double>(beams);
      beam_v[b] = gauss(wrap_unit(mid + shift[Dim]));
      s2 += beam_v[b] * beam_v[b];
    }
    const double c = std::sqrt(static_cast<double>(beams) / s2);
    for (double& z : beam_v) z *= c;
  }

  for (std::size_t i = 0; i < N; ++i) {
    // lattice point in [0,1)^Dim
    Vec<Dim> x{};
    x[0] = wrap_unit(static_cast<double>(i) / static_cast<double>(N) +
                     shift[0]);
    if constexpr (Dim >= 2)
      x[1] = wrap_unit(
          static_cast<double>((i * a) % N) / static_cast<double>(N) + shift[1]);
    if constexpr (Dim >= 3)
      x[2] = wrap_unit(static_cast<double>((i * a2) % N) /
                           static_cast<double>(N) + shift[2]);

    // Halton draws for the velocity coordinates (and one spare channel)
    std::array<double, Dim + 1> hv{};
    for (int c = 0; c <= Dim; ++c)
      hv[c] = wrap_unit(radical_inverse(i + 1, kHaltonBases[c]) +
                        shift[Dim + c]);

    Vec<Dim> v{};
    switch (sc.kind) {
      case ScenarioKind::UniformMaxwellian:
        if (beams > 0) {
          v[0] = sc.sigma * beam_v[i % beams];
        } else {
          for (int c = 0; c < Dim; ++c)
            v[c] = sc.sigma * gauss(hv[c]);
        }
        break;
      case ScenarioKind::PerturbedMaxwellian:
        x[0] = detail::invert_perturbed_cdf(x[0], sc.delta, sc.mode);
        for (int c = 0; c < Dim; ++c)
          v[c] = sc.sigma * gauss(hv[c]);
        break;
      case ScenarioKind::TwoStream: {
        x[0] = detail::invert_perturbed_cdf(x[0], sc.delta, sc.mode);
        for (int c = 0; c < Dim; ++c)
          v[c] = sc.sigma * gauss(hv[c]);
        // beam choice from the spare channel: a different prime base than
        // the velocity draws, so membership is decorrelated from the
        // Gaussian magnitudes (index parity would alias the base-2 digit)
        v[0] += (hv[Dim] < 0.5) ? sc.v0 : -sc.v0;
        break;
      }
      case ScenarioKind::CompactSupport: {
        if (!(sc.rx > 0.0) || sc.rx > 0.5 || !(sc.rv > 0.0))
          throw OutOfRangeError("compact profile needs rx in (0,1/2], rv > 0");
        for (int c = 0; c < Dim; ++c)
          x[c] = wrap_unit(0.5 + sc.rx * (2.0 * x[c] - 1.0));
        // uniform point in the velocity ball: Gaussian direction, radial
        // inverse-CDF u^(1/Dim)
        double norm_sq = 0.0;
        Vec<Dim> dir{};
        for (int c = 0; c < Dim; ++c) {
          dir[c] = gauss(hv[c]);
          norm_sq += dir[c] * dir[c];
        }
        const double norm = std::sqrt(norm_sq);
        const double radius =
            sc.rv * std::pow(hv[Dim], 1.0 / static_cast<double>(Dim));
        for (int c = 0; c < Dim; ++c)
          v[c] = norm > 0 ? radius * dir[c] / norm : 0.0;
        break;
      }
    }
    ens.positions[i] = x;
    ens.velocities[i] = v;
  }
  return ens;
}

// Unit ball volume, used by phase-space density bounds.
inline double ball_volume(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
  }
  throw DimensionError("ball volume: unsupported dimension");
}

// Supremum of the phase-space density each scenario samples from.
inline double scenario_f_linf(const Scenario& sc, int dim) {
  const double gauss_peak =
      std::pow(2.0 * std::numbers::pi * sc.sigma * sc.sigma,
               -0.5 * static_cast<double>(dim));
  switch (sc.kind) {
    case ScenarioKind::UniformMaxwellian:
      return gauss_peak;
    case ScenarioKind::PerturbedMaxwellian:
      return (1.0 + std::abs(sc.delta)) * gauss_peak;
    case ScenarioKind::TwoStream: {
      // peak of the symmetric two-beam profile along v1, scanned once
      const double s = sc.sigma;
      double peak = 0.0;
      for (int j = 0; j <= 4000; ++j) {
        const double v = -2.0 * (sc.v0 + 4 * s) +
                         j * (sc.v0 + 4 * s) / 1000.0;
        const double g =
            0.5 * (std::exp(-0.5 * (v - sc.v0) * (v - sc.v0) / (s * s)) +
                   std::exp(-0.5 * (v + sc.v0) * (v + sc.v0) / (s * s))) /
            std::sqrt(2.0 * std::numbers::pi * s * s);
        peak = std::max(peak, g);
      }
      const double rest =
          std::pow(2.0 * std::numbers::pi * s * s,
                   -0.5 * static_cast<double>(dim - 1));
      return (1.0 + std::abs(sc.delta)) * peak * rest;
    }
    case ScenarioKind::CompactSupport:
      return 1.0 / (std::pow(2.0 * sc.rx, dim) * ball_volume(dim) *
                    std::pow(sc.rv, dim));
  }
  throw OutOfRangeError("unknown scenario");
}

}  // namespace vpme

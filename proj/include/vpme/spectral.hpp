#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "vpme/errors.hpp"
#include "vpme/fft.hpp"
#include "vpme/grid.hpp"

namespace vpme {

using fft::cplx;

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double four_pi_sq = two_pi * two_pi;

// Fourier coefficients c_k of a nodal field, normalized so that
// f(x) = sum_k c_k exp(2*pi*i k.x); c_0 equals the field mean.
template <int Dim>
std::vector<cplx> spectrum(const ScalarField<Dim>& f) {
  return fft::forward(f.grid.dims(), f.values);
}

template <int Dim>
ScalarField<Dim> synthesize(const TorusGrid<Dim>& g,
                            const std::vector<cplx>& coeffs) {
  if (coeffs.size() != g.size())
    throw DimensionError("coefficient array does not match grid size");
  return ScalarField<Dim>(g, fft::backward_real(g.dims(), coeffs));
}

// |k|^2 for the mode stored at flat index f.
template <int Dim>
double mode_ksq(const TorusGrid<Dim>& g, std::size_t f) {
  const auto k = g.frequencies(g.unflatten(f));
  double s = 0.0;
  for (int a = 0; a < Dim; ++a) s += double(k[a]) * double(k[a]);
  return s;
}

// Applies a real multiplier m(k) in Fourier space: out_k = m(k) * in_k.
template <int Dim, typename Mult>
ScalarField<Dim> apply_multiplier(const ScalarField<Dim>& f, Mult&& m) {
  auto c = spectrum(f);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto k = f.grid.frequencies(f.grid.unflatten(i));
    c[i] *= m(k);
  }
  return synthesize(f.grid, c);
}

// Spectral gradient. The derivative multiplier along axis a is 2*pi*i*k_a
// with the unpaired highest (Nyquist) frequency dropped, which keeps the
// result real and makes the operator skew-adjoint on the grid.
template <int Dim>
VectorField<Dim> gradient(const ScalarField<Dim>& f) {
  const auto& g = f.grid;
  const auto c = spectrum(f);
  VectorField<Dim> out(g);
  std::vector<cplx> work(c.size());
  for (int a = 0; a < Dim; ++a) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto idx = g.unflatten(i);
      const int k = g.frequency(idx[a]);
      const double kd = (idx[a] == g.n() / 2) ? 0.0 : double(k);
      work[i] = c[i] * cplx(0.0, two_pi * kd);
    }
    out.comp[a] =
        ScalarField<Dim>(g, fft::backward_real(g.dims(), work));
  }
  return out;
}

// Spectral divergence, adjoint counterpart of gradient().
template <int Dim>
ScalarField<Dim> divergence(const VectorField<Dim>& v) {
  const auto& g = v.grid();
  std::vector<cplx> acc(g.size(), cplx(0.0, 0.0));
  for (int a = 0; a < Dim; ++a) {
    const auto c = spectrum(v.comp[a]);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto idx = g.unflatten(i);
      const int k = g.frequency(idx[a]);
      const double kd = (idx[a] == g.n() / 2) ? 0.0 : double(k);
      acc[i] += c[i] * cplx(0.0, two_pi * kd);
    }
  }
  return synthesize(g, acc);
}

// Spectral Laplacian: multiplier -4*pi^2 |k|^2.
template <int Dim>
ScalarField<Dim> laplacian(const ScalarField<Dim>& f) {
  auto c = spectrum(f);
  for (std::size_t i = 0; i < c.size(); ++i)
    c[i] *= -four_pi_sq * mode_ksq(f.grid, i);
  return synthesize(f.grid, c);
}

// Solves laplacian(u) = f with mean(u) = 0. The source must be finite and
// have zero mean (up to rounding against its own magnitude), otherwise no
// periodic solution exists.
template <int Dim>
ScalarField<Dim> invert_laplacian(const ScalarField<Dim>& f) {
  if (!f.finite()) throw NonFiniteError("Poisson source contains NaN/Inf");
  const double amp = f.linf();
  if (std::abs(f.mean()) > 1e-12 * (amp > 0 ? amp : 1.0))
    throw NonZeroMeanError("Poisson source must have zero mean");
  auto c = spectrum(f);
  c[0] = cplx(0.0, 0.0);
  for (std::size_t i = 1; i < c.size(); ++i)
    c[i] /= -four_pi_sq * mode_ksq(f.grid, i);
  return synthesize(f.grid, c);
}

// Gaussian smoothing multiplier exp(-(r|k|)^2 / 2): a positive-definite
// approximate identity on the torus whose strength is controlled by the
// length scale r. Unit multiplier at k = 0, so the mean is preserved.
inline double mollifier_multiplier(double r, double ksq) {
  return std::exp(-0.5 * r * r * ksq);
}

template <int Dim>
ScalarField<Dim> convolve_mollifier(const ScalarField<Dim>& f, double r) {
  if (!(r > 0.0) || r > 0.5)
    throw InvalidRadiusError("smoothing radius must lie in (0, 0.5]");
  auto c = spectrum(f);
  const cplx mean = c[0];
  for (std::size_t i = 1; i < c.size(); ++i)
    c[i] *= mollifier_multiplier(r, mode_ksq(f.grid, i));
  c[0] = mean;
  return synthesize(f.grid, c);
}

// Periodic convolution of two nodal fields: coefficients multiply.
template <int Dim>
ScalarField<Dim> convolve(const ScalarField<Dim>& a,
                          const ScalarField<Dim>& b) {
  require_same_grid(a, b);
  auto ca = spectrum(a);
  const auto cb = spectrum(b);
  for (std::size_t i = 0; i < ca.size(); ++i) ca[i] *= cb[i];
  return synthesize(a.grid, ca);
}

// Integral of |grad f|^2 over the torus via Parseval with the full
// Laplacian symbol; exactly the quadratic form -<f, laplacian f>.
template <int Dim>
double grad_sq_integral(const ScalarField<Dim>& f) {
  const auto c = spectrum(f);
  double s = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i)
    s += four_pi_sq * mode_ksq(f.grid, i) * std::norm(c[i]);
  return s;
}

}  // namespace vpme

#pragma once

#include <array>
#include <cmath>
#include <type_traits>
#include <vector>

#include "vpme/errors.hpp"
#include "vpme/grid.hpp"
#include "vpme/parallel.hpp"
#include "vpme/particles.hpp"

namespace vpme {

// Per-axis B-spline stencil: nodal weights of one particle coordinate.
// Orders 1 (linear), 2 (quadratic), 3 (cubic); order p touches p+1 nodes
// and the weights sum to one identically, so deposited mass is exact.
struct ShapeStencil {
  int first = 0;                 // leftmost node index (unwrapped)
  int count = 0;                 // number of touched nodes (order + 1)
  std::array<double, 4> w{};     // nodal weights
};

inline ShapeStencil shape_weights(double s, int order) {
  // s = coordinate in grid units (x / h)
  ShapeStencil st;
  switch (order) {
    case 1: {
      const int i0 = static_cast<int>(std::floor(s));
      const double t = s - i0;
      st.first = i0;
      st.count = 2;
      st.w = {1.0 - t, t, 0.0, 0.0};
      break;
    }
    case 2: {
      const int i0 = static_cast<int>(std::floor(s + 0.5));
      const double t = s - i0;  // in [-1/2, 1/2]
      st.first = i0 - 1;
      st.count = 3;
      st.w = {0.5 * (0.5 - t) * (0.5 - t), 0.75 - t * t,
              0.5 * (0.5 + t) * (0.5 + t), 0.0};
      break;
    }
    case 3: {
      const int i0 = static_cast<int>(std::floor(s));
      const double t = s - i0;
      const double t2 = t * t, t3 = t2 * t;
      st.first = i0 - 1;
      st.count = 4;
      st.w = {(1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0,
              (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0,
              (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0, t3 / 6.0};
      break;
    }
    default:
      throw DimensionError("shape order must be 1, 2, or 3");
  }
  return st;
}

// Deposits particle mass onto the grid with the given shape order; the
// result is a density (mass per unit volume), so a unit-mass ensemble
// yields mean exactly one up to rounding.
template <int Dim>
ScalarField<Dim> deposit(const ParticleEnsemble<Dim>& ens,
                         const TorusGrid<Dim>& grid, int order) {
  if (!ens.finite()) throw NonFiniteError("ensemble contains NaN/Inf");
  ScalarField<Dim> rho(grid);
  const int n = grid.n();
  const double inv_h_d = std::pow(static_cast<double>(n), Dim);
  std::array<ShapeStencil, Dim> st;
  for (std::size_t p = 0; p < ens.size(); ++p) {
    for (int a = 0; a < Dim; ++a)
      st[a] = shape_weights(ens.positions[p][a] * n, order);
    const double wm = ens.weights[p] * inv_h_d;
    if constexpr (Dim == 1) {
      for (int i = 0; i < st[0].count; ++i)
        rho.values[grid.wrap(st[0].first + i)] += wm * st[0].w[i];
    } else if constexpr (Dim == 2) {
      for (int i = 0; i < st[0].count; ++i) {
        const std::size_t row =
            static_cast<std::size_t>(grid.wrap(st[0].first + i)) * n;
        const double wi = wm * st[0].w[i];
        for (int j = 0; j < st[1].count; ++j)
          rho.values[row + grid.wrap(st[1].first + j)] += wi * st[1].w[j];
      }
    } else {
      for (int i = 0; i < st[0].count; ++i) {
        const double wi = wm * st[0].w[i];
        const std::size_t base_i =
            static_cast<std::size_t>(grid.wrap(st[0].first + i)) * n;
        for (int j = 0; j < st[1].count; ++j) {
          const double wij = wi * st[1].w[j];
          const std::size_t base_ij =
              (base_i + grid.wrap(st[1].first + j)) * n;
          for (int k = 0; k < st[2].count; ++k)
            rho.values[base_ij + grid.wrap(st[2].first + k)] +=
                wij * st[2].w[k];
        }
      }
    }
  }
  return rho;
}

// Evaluates a grid vector field at particle positions with the same shape
// as deposit(); using identical shapes for both directions makes the
// gather the exact adjoint of the deposit.
template <int Dim>
std::vector<Vec<Dim>> gather(
    const VectorField<Dim>& field,
    const std::vector<std::type_identity_t<Vec<Dim>>>& positions, int order) {
  const auto& grid = field.grid();
  const int n = grid.n();
  std::vector<Vec<Dim>> out(positions.size());
  parallel_for(positions.size(), [&](std::size_t p) {
    std::array<ShapeStencil, Dim> st;
    for (int a = 0; a < Dim; ++a)
      st[a] = shape_weights(positions[p][a] * n, order);
    Vec<Dim> acc{};
    if constexpr (Dim == 1) {
      for (int i = 0; i < st[0].count; ++i)
        acc[0] += st[0].w[i] * field.comp[0].values[grid.wrap(st[0].first + i)];
    } else if constexpr (Dim == 2) {
      for (int i = 0; i < st[0].count; ++i) {
        const std::size_t row =
            static_cast<std::size_t>(grid.wrap(st[0].first + i)) * n;
        for (int j = 0; j < st[1].count; ++j) {
          const double w = st[0].w[i] * st[1].w[j];
          const std::size_t idx = row + grid.wrap(st[1].first + j);
          for (int c = 0; c < Dim; ++c)
            acc[c] += w * field.comp[c].values[idx];
        }
      }
    } else {
      for (int i = 0; i < st[0].count; ++i) {
        const std::size_t base_i =
            static_cast<std::size_t>(grid.wrap(st[0].first + i)) * n;
        for (int j = 0; j < st[1].count; ++j) {
          const double wij = st[0].w[i] * st[1].w[j];
          const std::size_t base_ij =
              (base_i + grid.wrap(st[1].first + j)) * n;
          for (int k = 0; k < st[2].count; ++k) {
            const double w = wij * st[2].w[k];
            const std::size_t idx = base_ij + grid.wrap(st[2].first + k);
            for (int c = 0; c < Dim; ++c)
              acc[c] += w * field.comp[c].values[idx];
          }
        }
      }
    }
    out[p] = acc;
  });
  return out;
}

}  // namespace vpme

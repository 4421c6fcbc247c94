#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "vpme/errors.hpp"

namespace vpme {

template <int Dim>
using Vec = std::array<double, Dim>;

template <int Dim>
using Index = std::array<int, Dim>;

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Uniform periodic grid on the unit torus [0,1)^Dim with n nodes per axis
// at x_i = i/n. Fourier modes use the standard layout: index i along an
// axis carries integer frequency k = i for i <= n/2, k = i - n otherwise.
template <int Dim>
class TorusGrid {
  static_assert(Dim >= 1 && Dim <= 3, "supported dimensions: 1, 2, 3");

 public:
  explicit TorusGrid(int n) : n_(n), h_(1.0 / n) {
    if (n < 4 || !is_power_of_two(n))
      throw DimensionError("grid size must be a power of two >= 4");
    size_ = 1;
    for (int a = 0; a < Dim; ++a) size_ *= static_cast<std::size_t>(n);
  }

  int n() const { return n_; }
  double h() const { return h_; }
  std::size_t size() const { return size_; }
  static constexpr int dim() { return Dim; }

  // Row-major flattening; the last axis is contiguous (FFTW convention).
  std::size_t flatten(const Index<Dim>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < Dim; ++a)
      f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx[a]);
    return f;
  }

  Index<Dim> unflatten(std::size_t f) const {
    Index<Dim> idx{};
    for (int a = Dim - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(f % static_cast<std::size_t>(n_));
      f /= static_cast<std::size_t>(n_);
    }
    return idx;
  }

  Vec<Dim> point(const Index<Dim>& idx) const {
    Vec<Dim> x{};
    for (int a = 0; a < Dim; ++a) x[a] = idx[a] * h_;
    return x;
  }

  int wrap(int i) const {
    i %= n_;
    return i < 0 ? i + n_ : i;
  }

  // Integer frequency along one axis for storage index i.
  int frequency(int i) const { return i <= n_ / 2 ? i : i - n_; }

  Index<Dim> frequencies(const Index<Dim>& idx) const {
    Index<Dim> k{};
    for (int a = 0; a < Dim; ++a) k[a] = frequency(idx[a]);
    return k;
  }

  std::vector<int> dims() const { return std::vector<int>(Dim, n_); }

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
    return a.n_ == b.n_;
  }

 private:
  int n_;
  double h_;
  std::size_t size_;
};

// Real nodal values on a TorusGrid, row-major.
template <int Dim>
struct ScalarField {
  TorusGrid<Dim> grid;
  std::vector<double> values;

  explicit ScalarField(const TorusGrid<Dim>& g)
      : grid(g), values(g.size(), 0.0) {}
  ScalarField(const TorusGrid<Dim>& g, std::vector<double> v)
      : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
      throw DimensionError("field data does not match grid size");
  }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  // Mean over nodes == integral over the unit torus for nodal quadrature.
  double mean() const {
    double s = 0.0, comp = 0.0;  // Kahan summation
    for (double v : values) {
      double y = v - comp;
      double t = s + y;
      comp = (t - s) - y;
      s = t;
    }
    return s / static_cast<double>(values.size());
  }

  double linf() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }

  bool finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// One ScalarField per component.
template <int Dim>
struct VectorField {
  std::array<ScalarField<Dim>, Dim> comp;

  explicit VectorField(const TorusGrid<Dim>& g) : comp(make_components(g)) {}

  const TorusGrid<Dim>& grid() const { return comp[0].grid; }

  double linf() const {
    double m = 0.0;
    for (const auto& c : comp) m = std::max(m, c.linf());
    return m;
  }

  bool finite() const {
    for (const auto& c : comp)
      if (!c.finite()) return false;
    return true;
  }

 private:
  static std::array<ScalarField<Dim>, Dim> make_components(
      const TorusGrid<Dim>& g) {
    if constexpr (Dim == 1) {
      return {ScalarField<Dim>(g)};
    } else if constexpr (Dim == 2) {
      return {ScalarField<Dim>(g), ScalarField<Dim>(g)};
    } else {
      return {ScalarField<Dim>(g), ScalarField<Dim>(g), ScalarField<Dim>(g)};
    }
  }
};

template <int Dim>
void require_same_grid(const ScalarField<Dim>& a, const ScalarField<Dim>& b) {
  if (!(a.grid == b.grid))
    throw DimensionError("fields live on different grids");
}

// sqrt of the integral of f^2 over the torus (nodal quadrature).
template <int Dim>
double l2_norm(const ScalarField<Dim>& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return std::sqrt(s / static_cast<double>(f.values.size()));
}

}  // namespace vpme

#pragma once

// Complex scalar field on a periodic grid with unitary spectral transforms.
// Forward and inverse DFTs both carry n^{-d/2}, so Parseval holds without
// extra factors: sum |f|^2 = sum |f^|^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "schx/errors.hpp"
#include "schx/fft.hpp"
#include "schx/grid.hpp"
#include "schx/parallel.hpp"

namespace schx {

enum class Representation { physical, spectral };

struct SpectralField {
  GridSpec grid;
  std::vector<cplx> values;
  Representation rep = Representation::physical;

  SpectralField() = default;
  explicit SpectralField(const GridSpec& g, Representation r = Representation::physical)
      : grid(g), values(g.size(), cplx(0.0, 0.0)), rep(r) {}
  SpectralField(const GridSpec& g, std::vector<cplx> v, Representation r = Representation::physical)
      : grid(g), values(std::move(v)), rep(r) {
    if (values.size() != g.size()) throw ContractViolation("field length does not match grid");
  }

  std::size_t size() const noexcept { return values.size(); }
  bool is_physical() const noexcept { return rep == Representation::physical; }
  cplx& operator[](std::size_t i) { return values[i]; }
  const cplx& operator[](std::size_t i) const { return values[i]; }
};

inline void require_same_grid(const SpectralField& a, const SpectralField& b) {
  if (a.grid != b.grid) throw ContractViolation("fields live on different grids");
}

/// Field from a function of the physical position.
template <class F>
SpectralField sample_field(const GridSpec& g, F&& fn) {
  SpectralField out(g);
  parallel_for(g.size(), [&](std::size_t i) { out.values[i] = fn(g.position(i)); });
  return out;
}

namespace detail {
inline void unitary_dft(SpectralField& f, FftSign sign) {
  dft_inplace(f.grid, f.values, sign);
  const double scale = 1.0 / std::sqrt(static_cast<double>(f.grid.size()));
  parallel_for(f.size(), [&](std::size_t i) { f.values[i] *= scale; });
}
}  // namespace detail

inline SpectralField to_spectral(const SpectralField& f) {
  if (f.rep != Representation::physical) throw ContractViolation("to_spectral: field is already spectral");
  SpectralField out = f;
  detail::unitary_dft(out, FftSign::forward);
  out.rep = Representation::spectral;
  return out;
}

inline SpectralField to_physical(const SpectralField& f) {
  if (f.rep != Representation::spectral) throw ContractViolation("to_physical: field is already physical");
  SpectralField out = f;
  detail::unitary_dft(out, FftSign::backward);
  out.rep = Representation::physical;
  return out;
}

inline SpectralField as_spectral(const SpectralField& f) { return f.is_physical() ? to_spectral(f) : f; }
inline SpectralField as_physical(const SpectralField& f) { return f.is_physical() ? f : to_physical(f); }

inline SpectralField in_rep(const SpectralField& f, Representation r) {
  return r == Representation::physical ? as_physical(f) : as_spectral(f);
}

/// Multiplies the spectrum by m(flat index); result in f's representation.
template <class M>
SpectralField apply_multiplier(const SpectralField& f, M&& m) {
  SpectralField s = as_spectral(f);
  parallel_for(s.size(), [&](std::size_t i) { s.values[i] *= m(i); });
  return in_rep(s, f.rep);
}

inline SpectralField partial(const SpectralField& f, int axis) {
  if (axis < 0 || axis >= f.grid.dim) throw ContractViolation("partial: axis out of range");
  const auto w = wave_vectors(f.grid);
  const GridSpec& g = f.grid;
  return apply_multiplier(f, [&](std::size_t i) {
    return cplx(0.0, w->k_odd[g.unflatten(i)[axis]]);
  });
}

inline std::vector<SpectralField> gradient(const SpectralField& f) {
  std::vector<SpectralField> out;
  const SpectralField s = as_spectral(f);
  for (int a = 0; a < f.grid.dim; ++a) out.push_back(in_rep(partial(s, a), f.rep));
  return out;
}

inline SpectralField laplacian(const SpectralField& f) {
  const auto w = wave_vectors(f.grid);
  return apply_multiplier(f, [&](std::size_t i) { return cplx(-w->k2[i], 0.0); });
}

/// e^{it Laplacian} f via the multiplier e^{-i|k|^2 t}.
inline SpectralField free_propagate(const SpectralField& f, double t) {
  if (t == 0.0) return f;
  const auto w = wave_vectors(f.grid);
  return apply_multiplier(f, [&](std::size_t i) { return std::polar(1.0, -w->k2[i] * t); });
}

/// Grid translation by `by` cells along `axis` (physical representation).
inline SpectralField shift(const SpectralField& f, int axis, long long by) {
  const SpectralField p = as_physical(f);
  SpectralField out(p.grid);
  parallel_for(p.size(), [&](std::size_t i) { out.values[p.grid.shifted(i, axis, by)] = p.values[i]; });
  return in_rep(out, f.rep);
}

inline void check_finite(const SpectralField& f, int component) {
  for (const auto& v : f.values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericalError("non-finite value in component " + std::to_string(component), component);
  }
}

/// h^d * sum of g(i), summed in the fixed pairwise tree.
template <class F>
double quadrature(const GridSpec& g, F&& fn) {
  return g.cell_volume() * pairwise_reduce<double>(g.size(), fn);
}

template <class F>
cplx quadrature_c(const GridSpec& g, F&& fn) {
  return g.cell_volume() * pairwise_reduce<cplx>(g.size(), fn);
}

inline double norm_Lr(const SpectralField& f, double r) {
  if (!(r >= 1.0)) throw DomainError("norm_Lr: exponent must be >= 1");
  if (std::isinf(r)) {
    const SpectralField p = as_physical(f);
    double m = 0.0;
    for (const auto& v : p.values) m = std::max(m, std::abs(v));
    return m;
  }
  if (r == 2.0) {
    // Parseval makes the spectral sum equally valid.
    return std::sqrt(quadrature(f.grid, [&](std::size_t i) { return std::norm(f.values[i]); }));
  }
  const SpectralField p = as_physical(f);
  const double s = quadrature(p.grid, [&](std::size_t i) { return std::pow(std::abs(p.values[i]), r); });
  return std::pow(s, 1.0 / r);
}

inline double norm_L2(const SpectralField& f) { return norm_Lr(f, 2.0); }

/// sum_a ||d_a f||^2 with the odd-derivative symbol.
inline double gradient_norm_sq(const SpectralField& f) {
  const SpectralField s = as_spectral(f);
  const auto w = wave_vectors(f.grid);
  const GridSpec& g = f.grid;
  return quadrature(g, [&](std::size_t i) {
    const auto idx = g.unflatten(i);
    double k = 0.0;
    for (int a = 0; a < g.dim; ++a) k += w->k_odd[idx[a]] * w->k_odd[idx[a]];
    return k * std::norm(s.values[i]);
  });
}

/// sum |k|^2 |f^|^2 h^d with the full Laplacian symbol; equals -<f, Laplacian f>.
inline double kinetic_quadratic_form(const SpectralField& f) {
  const SpectralField s = as_spectral(f);
  const auto w = wave_vectors(f.grid);
  return quadrature(f.grid, [&](std::size_t i) { return w->k2[i] * std::norm(s.values[i]); });
}

inline double norm_H1(const SpectralField& f) {
  const double l2 = norm_L2(f);
  return std::sqrt(l2 * l2 + gradient_norm_sq(f));
}

/// <f, g> = int conj(f) g.
inline cplx inner_L2(const SpectralField& f, const SpectralField& g) {
  require_same_grid(f, g);
  const SpectralField a = as_physical(f);
  const SpectralField b = as_physical(g);
  return quadrature_c(a.grid, [&](std::size_t i) { return std::conj(a.values[i]) * b.values[i]; });
}

inline SpectralField operator+(const SpectralField& a, const SpectralField& b) {
  require_same_grid(a, b);
  SpectralField x = as_physical(a);
  const SpectralField y = as_physical(b);
  parallel_for(x.size(), [&](std::size_t i) { x.values[i] += y.values[i]; });
  return x;
}

inline SpectralField operator-(const SpectralField& a, const SpectralField& b) {
  require_same_grid(a, b);
  SpectralField x = as_physical(a);
  const SpectralField y = as_physical(b);
  parallel_for(x.size(), [&](std::size_t i) { x.values[i] -= y.values[i]; });
  return x;
}

inline SpectralField operator*(cplx c, const SpectralField& a) {
  SpectralField x = a;
  parallel_for(x.size(), [&](std::size_t i) { x.values[i] *= c; });
  return x;
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  require_same_grid(a, b);
  const SpectralField x = in_rep(a, b.rep);
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x.values[i] - b.values[i]));
  return m;
}

inline double max_abs(const SpectralField& a) {
  double m = 0.0;
  for (const auto& v : a.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace schx

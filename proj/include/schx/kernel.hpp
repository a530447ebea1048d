#pragma once

// Radial kernels sampled on the grid: the Riesz potential |x|^{-(d-gamma)},
// its gradient, and the weight a = |x| with its derivatives.
//
// Samples are stored at the physical grid points x_i in [-L, L)^d, which
// already are minimal-image positions. The cell at x = 0 holds the average of
// the kernel over the ball with the cell's volume, radius
//   r_eq = h * Gamma(d/2 + 1)^{1/d} / sqrt(pi)   (= h/2 for d = 1).
// Distributional parts of D^2|x| in d = 1 (2 delta) sit in that cell as 2/h.

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "schx/errors.hpp"
#include "schx/field.hpp"

namespace schx {

struct KernelKind {
  enum class Type { riesz, riesz_gradient, abs_weight, abs_gradient, abs_laplacian, abs_hessian, abs_bilaplacian };
  Type type = Type::riesz;
  double gamma = 0.0;
  int axis = 0;
  int axis2 = 0;

  static KernelKind riesz(double g) { return {Type::riesz, g, 0, 0}; }
  static KernelKind riesz_gradient(double g, int a) { return {Type::riesz_gradient, g, a, 0}; }
  static KernelKind abs_weight() { return {Type::abs_weight, 0.0, 0, 0}; }
  static KernelKind abs_gradient(int a) { return {Type::abs_gradient, 0.0, a, 0}; }
  static KernelKind abs_laplacian() { return {Type::abs_laplacian, 0.0, 0, 0}; }
  static KernelKind abs_hessian(int a, int b) { return {Type::abs_hessian, 0.0, a, b}; }
  static KernelKind abs_bilaplacian() { return {Type::abs_bilaplacian, 0.0, 0, 0}; }

  bool odd() const noexcept { return type == Type::riesz_gradient || type == Type::abs_gradient; }
  std::string name() const;
};

inline std::string KernelKind::name() const {
  switch (type) {
    case Type::riesz: return "riesz(" + std::to_string(gamma) + ")";
    case Type::riesz_gradient: return "riesz_gradient(" + std::to_string(gamma) + "," + std::to_string(axis) + ")";
    case Type::abs_weight: return "abs_weight";
    case Type::abs_gradient: return "abs_gradient(" + std::to_string(axis) + ")";
    case Type::abs_laplacian: return "abs_laplacian";
    case Type::abs_hessian: return "abs_hessian(" + std::to_string(axis) + "," + std::to_string(axis2) + ")";
    case Type::abs_bilaplacian: return "abs_bilaplacian";
  }
  return "unknown";
}

/// Radius of the ball whose volume equals h^d.
inline double equal_volume_radius(int d, double h) {
  return h * std::pow(std::tgamma(0.5 * d + 1.0), 1.0 / d) / std::sqrt(std::numbers::pi);
}

/// Pointwise closed form at x != 0, any dimension d = x.size().
inline double kernel_closed_form(const KernelKind& k, std::span<const double> x) {
  const int d = static_cast<int>(x.size());
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  const double r = std::sqrt(r2);
  if (r == 0.0) throw DomainError("closed form is singular at the origin");
  using T = KernelKind::Type;
  switch (k.type) {
    case T::riesz: return std::pow(r, -(d - k.gamma));
    case T::riesz_gradient: {
      const double s = d - k.gamma;
      return -s * x[k.axis] * std::pow(r, -s - 2.0);
    }
    case T::abs_weight: return r;
    case T::abs_gradient: return x[k.axis] / r;
    case T::abs_laplacian: return (d - 1) / r;
    case T::abs_hessian: return (k.axis == k.axis2 ? 1.0 / r : 0.0) - x[k.axis] * x[k.axis2] / (r2 * r);
    case T::abs_bilaplacian: return -static_cast<double>((d - 1) * (d - 3)) / (r2 * r);
  }
  return 0.0;
}

struct KernelTable {
  GridSpec grid;
  KernelKind kind;
  std::vector<double> samples;   // value at physical grid point x_i
  std::vector<cplx> spectrum;    // unnormalized DFT of samples re-centred at index 0
};

namespace detail {

/// Flat index of displacement m (per-axis 0..n-1) inside the physical sample array.
inline std::size_t displacement_sample_index(const GridSpec& g, const std::array<std::size_t, 3>& m) {
  std::array<std::size_t, 3> idx{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) idx[a] = (m[a] + g.n / 2) % g.n;
  return g.flatten(idx);
}

inline double singular_cell(const GridSpec& g, const KernelKind& k) {
  const int d = g.dim;
  const double h = g.spacing();
  const double req = equal_volume_radius(d, h);
  using T = KernelKind::Type;
  switch (k.type) {
    case T::riesz: return (d / k.gamma) * std::pow(req, k.gamma - d);
    case T::riesz_gradient:
    case T::abs_gradient:
    case T::abs_weight: return 0.0;
    case T::abs_laplacian: return d == 1 ? 2.0 / h : d / req;
    case T::abs_hessian:
      if (k.axis != k.axis2) return 0.0;
      return d == 1 ? 2.0 / h : 1.0 / req;
    case T::abs_bilaplacian: break;
  }
  throw UnsupportedKind("no singular-cell rule for " + k.name());
}

}  // namespace detail

inline void recompute_spectrum(KernelTable& t) {
  const GridSpec& g = t.grid;
  std::vector<cplx> centred(g.size());
  for (std::size_t f = 0; f < g.size(); ++f)
    centred[f] = cplx(t.samples[detail::displacement_sample_index(g, g.unflatten(f))], 0.0);
  dft_inplace(g, centred, FftSign::forward);
  t.spectrum = std::move(centred);
}

inline KernelTable build_kernel(const GridSpec& g, const KernelKind& k) {
  g.validate();
  using T = KernelKind::Type;
  if (k.type == T::riesz || k.type == T::riesz_gradient) {
    if (!(k.gamma > 0.0 && k.gamma < g.dim)) throw DomainError("riesz kernel needs 0 < gamma < d");
  }
  if (k.type == T::abs_bilaplacian && g.dim < 4)
    throw UnsupportedKind("abs_bilaplacian requires d >= 4; grids support d <= 3");
  if ((k.type == T::riesz_gradient || k.type == T::abs_gradient || k.type == T::abs_hessian) &&
      (k.axis < 0 || k.axis >= g.dim || k.axis2 < 0 || k.axis2 >= g.dim))
    throw ContractViolation("kernel axis out of range");

  KernelTable t;
  t.grid = g;
  t.kind = k;
  t.samples.assign(g.size(), 0.0);
  const std::size_t origin = g.flatten({g.n / 2, g.n / 2, g.n / 2});
  const double singular = detail::singular_cell(g, k);
  parallel_for(g.size(), [&](std::size_t f) {
    if (f == origin) {
      t.samples[f] = singular;
      return;
    }
    const auto idx = g.unflatten(f);
    const bool off_diagonal = k.type == T::abs_hessian && k.axis != k.axis2;
    if ((k.odd() && idx[k.axis] == 0) || (off_diagonal && (idx[k.axis] == 0 || idx[k.axis2] == 0))) {
      // x_a = -L is its own mirror image; an odd kernel must vanish there.
      t.samples[f] = 0.0;
      return;
    }
    const auto x = g.position(f);
    if (g.dim == 1 && (k.type == T::abs_laplacian || k.type == T::abs_hessian)) {
      t.samples[f] = 0.0;
      return;
    }
    t.samples[f] = kernel_closed_form(k, std::span<const double>(x.data(), static_cast<std::size_t>(g.dim)));
  });
  recompute_spectrum(t);
  return t;
}

/// (k * f)(x_i) = h^d sum_j k(x_i - x_j) f_j with torus wrap, via FFT.
/// The result is returned in f's representation.
inline SpectralField convolve(const KernelTable& k, const SpectralField& f) {
  if (k.grid != f.grid) throw ContractViolation("convolve: kernel and field grids differ");
  SpectralField s = as_spectral(f);
  const double hd = f.grid.cell_volume();
  parallel_for(s.size(), [&](std::size_t i) { s.values[i] *= hd * k.spectrum[i]; });
  return in_rep(s, f.rep);
}

/// Convolution of a real density; returns the real part.
inline std::vector<double> convolve_real(const KernelTable& k, const std::vector<double>& f) {
  SpectralField x(k.grid);
  for (std::size_t i = 0; i < f.size(); ++i) x.values[i] = cplx(f[i], 0.0);
  const SpectralField y = as_physical(convolve(k, x));
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = y.values[i].real();
  return out;
}

inline constexpr std::size_t kDirectCostLimit = 4096;

/// Direct periodic double sum, ordered by displacement. Ground truth for convolve.
inline SpectralField convolve_direct(const KernelTable& k, const SpectralField& f) {
  if (k.grid != f.grid) throw ContractViolation("convolve_direct: kernel and field grids differ");
  const GridSpec& g = f.grid;
  if (g.size() > kDirectCostLimit) throw CostGuardError("convolve_direct: n^d exceeds 4096");
  const SpectralField p = as_physical(f);
  SpectralField out(g);
  const double hd = g.cell_volume();
  parallel_for(g.size(), [&](std::size_t i) {
    const auto xi = g.unflatten(i);
    cplx acc(0.0, 0.0);
    for (std::size_t m = 0; m < g.size(); ++m) {
      const auto dm = g.unflatten(m);
      std::array<std::size_t, 3> j{0, 0, 0};
      for (int a = 0; a < g.dim; ++a) j[a] = (xi[a] + g.n - dm[a]) % g.n;
      acc += k.samples[detail::displacement_sample_index(g, dm)] * p.values[g.flatten(j)];
    }
    out.values[i] = hd * acc;
  });
  return in_rep(out, f.rep);
}

/// Debug dump: one row per grid point, index columns then value.
inline void write_kernel_csv(const KernelTable& k, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  for (int a = 0; a < k.grid.dim; ++a) os << "i" << a << ",";
  os << "value\n";
  char buf[64];
  for (std::size_t f = 0; f < k.grid.size(); ++f) {
    const auto idx = k.grid.unflatten(f);
    for (int a = 0; a < k.grid.dim; ++a) os << idx[a] << ",";
    std::snprintf(buf, sizeof buf, "%.17g", k.samples[f]);
    os << buf << "\n";
  }
}

}  // namespace schx

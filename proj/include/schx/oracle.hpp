#pragma once

// Brute-force references. Nothing here touches FFTW: transforms are slow DFTs
// and convolutions are direct double sums over kernel samples.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "schx/errors.hpp"
#include "schx/kernel.hpp"
#include "schx/model.hpp"

namespace schx::oracle {

inline void cost_guard(const GridSpec& g) {
  if (g.size() > kDirectCostLimit) throw CostGuardError("oracle: n^d exceeds 4096");
}

/// Unitary DFT by definition; forward uses e^{-2 pi i m.x / n}.
inline std::vector<cplx> slow_dft(const GridSpec& g, const std::vector<cplx>& v, bool forward) {
  cost_guard(g);
  const double sgn = forward ? -1.0 : 1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.size()));
  std::vector<cplx> out(g.size());
  for (std::size_t m = 0; m < g.size(); ++m) {
    const auto km = g.unflatten(m);
    cplx acc(0.0, 0.0);
    for (std::size_t x = 0; x < g.size(); ++x) {
      const auto ix = g.unflatten(x);
      long long dot = 0;
      for (int a = 0; a < g.dim; ++a) dot += static_cast<long long>(km[a] * ix[a] % g.n);
      const double ang = sgn * 2.0 * std::numbers::pi * static_cast<double>(dot % static_cast<long long>(g.n)) /
                         static_cast<double>(g.n);
      acc += v[x] * cplx(std::cos(ang), std::sin(ang));
    }
    out[m] = scale * acc;
  }
  return out;
}

/// Spectral derivative along one axis through the slow DFT.
inline std::vector<cplx> slow_partial(const GridSpec& g, const std::vector<cplx>& v, int axis) {
  auto s = slow_dft(g, v, true);
  const long long n = static_cast<long long>(g.n);
  for (std::size_t m = 0; m < g.size(); ++m) {
    const long long i = static_cast<long long>(g.unflatten(m)[axis]);
    const long long mm = i < n / 2 ? i : i - n;
    const double k = (i == n / 2) ? 0.0 : std::numbers::pi * static_cast<double>(mm) / g.half_length;
    s[m] *= cplx(0.0, k);
  }
  return slow_dft(g, s, false);
}

inline double direct_quad(const GridSpec& g, const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s * g.cell_volume();
}

/// Real direct convolution k * f.
inline std::vector<double> conv(const KernelTable& k, const std::vector<double>& f) {
  SpectralField x(k.grid);
  for (std::size_t i = 0; i < f.size(); ++i) x.values[i] = cplx(f[i], 0.0);
  const SpectralField y = convolve_direct(k, x);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = y.values[i].real();
  return out;
}

inline std::vector<double> rho_p(const SpectralField& f, double p) {
  std::vector<double> r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = std::pow(std::abs(f.values[i]), p);
  return r;
}

/// G_j with every convolution done by direct summation.
inline std::vector<SpectralField> nonlinearity(const SystemState& s) {
  const GridSpec& g = s.grid();
  cost_guard(g);
  const auto& c = s.params;
  const int N = s.size();
  std::vector<SpectralField> out;
  const KernelTable W1 = build_kernel(g, KernelKind::riesz(c.gamma1));
  std::vector<std::vector<double>> U;
  for (int k = 0; k < N; ++k) U.push_back(conv(W1, rho_p(s.fields[k], c.p)));
  for (int j = 0; j < N; ++j) {
    SpectralField G(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double V = 0.0;
      for (int k = 0; k < N; ++k) V += c.lambda[j][k] * U[k][i];
      const cplx psi = s.fields[j].values[i];
      const double a = std::abs(psi);
      G.values[i] = V * (c.p == 2.0 ? 1.0 : std::pow(a, c.p - 2.0)) * psi;
    }
    out.push_back(std::move(G));
  }
  if (c.beta != 0.0) {
    const KernelTable W2 = build_kernel(g, KernelKind::riesz(c.gamma2));
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) {
        SpectralField dens(g), cross(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
          dens.values[i] = std::norm(s.fields[k].values[i]);
          cross.values[i] = std::conj(s.fields[k].values[i]) * s.fields[j].values[i];
        }
        const SpectralField Dk = convolve_direct(W2, dens);
        const SpectralField Xkj = convolve_direct(W2, cross);
        for (std::size_t i = 0; i < g.size(); ++i)
          out[j].values[i] += c.beta * (Dk.values[i] * s.fields[j].values[i] - Xkj.values[i] * s.fields[k].values[i]);
      }
  }
  return out;
}

struct EnergyTerms {
  double kinetic = 0.0;
  double choquard = 0.0;
  double hartree_fock = 0.0;
};

/// Double sums h^{2d} sum_x sum_y W(x - y) ... evaluated literally.
inline EnergyTerms energy_terms(const SystemState& s) {
  const GridSpec& g = s.grid();
  cost_guard(g);
  const auto& c = s.params;
  const int N = s.size();
  EnergyTerms e;
  for (int j = 0; j < N; ++j)
    for (int a = 0; a < g.dim; ++a) {
      const auto d = slow_partial(g, s.fields[j].values, a);
      double acc = 0.0;
      for (const auto& v : d) acc += std::norm(v);
      e.kinetic += acc * g.cell_volume();
    }
  const KernelTable W1 = build_kernel(g, KernelKind::riesz(c.gamma1));
  const double h2 = g.cell_volume() * g.cell_volume();
  auto w_at = [&](const KernelTable& W, std::size_t x, std::size_t y) {
    const auto ix = g.unflatten(x), iy = g.unflatten(y);
    std::array<std::size_t, 3> m{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) m[a] = (ix[a] + g.n - iy[a]) % g.n;
    return W.samples[detail::displacement_sample_index(g, m)];
  };
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < N; ++k) {
      if (c.lambda[j][k] == 0.0) continue;
      const auto rj = rho_p(s.fields[j], c.p), rk = rho_p(s.fields[k], c.p);
      double acc = 0.0;
      for (std::size_t x = 0; x < g.size(); ++x)
        for (std::size_t y = 0; y < g.size(); ++y) acc += w_at(W1, x, y) * rk[y] * rj[x];
      e.choquard += c.lambda[j][k] * acc * h2;
    }
  if (c.beta != 0.0) {
    const KernelTable W2 = build_kernel(g, KernelKind::riesz(c.gamma2));
    double acc = 0.0;
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        for (std::size_t x = 0; x < g.size(); ++x)
          for (std::size_t y = 0; y < g.size(); ++y) {
            const cplx pjx = s.fields[j].values[x], pkx = s.fields[k].values[x];
            const cplx pjy = s.fields[j].values[y], pky = s.fields[k].values[y];
            acc += w_at(W2, x, y) * (std::norm(pky) * std::norm(pjx) - std::real(std::conj(pky) * pjy * pkx * std::conj(pjx)));
          }
    e.hartree_fock = acc * h2;
  }
  return e;
}


/// W(x - y) read off the sample table.
inline double kernel_at(const KernelTable& W, std::size_t x, std::size_t y) {
  const GridSpec& g = W.grid;
  const auto ix = g.unflatten(x), iy = g.unflatten(y);
  std::array<std::size_t, 3> m{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) m[a] = (ix[a] + g.n - iy[a]) % g.n;
  return W.samples[detail::displacement_sample_index(g, m)];
}

inline std::vector<double> total_density(const SystemState& s) {
  std::vector<double> M(s.grid().size(), 0.0);
  for (const auto& f : s.fields)
    for (std::size_t i = 0; i < M.size(); ++i) M[i] += std::norm(f.values[i]);
  return M;
}

/// sum_x sum_y |x - y| M(x) M(y) h^{2d}
inline double interaction_action(const SystemState& s) {
  const GridSpec& g = s.grid();
  cost_guard(g);
  const KernelTable A = build_kernel(g, KernelKind::abs_weight());
  const auto M = total_density(s);
  double acc = 0.0;
  for (std::size_t x = 0; x < g.size(); ++x)
    for (std::size_t y = 0; y < g.size(); ++y) acc += kernel_at(A, x, y) * M[x] * M[y];
  return acc * g.cell_volume() * g.cell_volume();
}

/// 4 sum_x sum_y J(x) . (x - y)/|x - y| M(y), J from slow spectral derivatives.
inline double interaction_action_dot(const SystemState& s) {
  const GridSpec& g = s.grid();
  cost_guard(g);
  const auto M = total_density(s);
  double acc = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    const KernelTable A = build_kernel(g, KernelKind::abs_gradient(a));
    std::vector<double> J(g.size(), 0.0);
    for (const auto& f : s.fields) {
      const auto d = slow_partial(g, f.values, a);
      for (std::size_t i = 0; i < g.size(); ++i) J[i] += std::imag(std::conj(f.values[i]) * d[i]);
    }
    for (std::size_t x = 0; x < g.size(); ++x)
      for (std::size_t y = 0; y < g.size(); ++y) acc += J[x] * kernel_at(A, x, y) * M[y];
  }
  return 4.0 * acc * g.cell_volume() * g.cell_volume();
}

/// N_C, R_C and N_HF as literal triple sums over (x, y, z).
inline std::array<double, 3> nonlinear_terms(const SystemState& s) {
  const GridSpec& g = s.grid();
  cost_guard(g);
  const auto& c = s.params;
  const int N = s.size();
  const std::size_t n = g.size();
  const double h3 = std::pow(g.cell_volume(), 3);
  const auto M = total_density(s);
  double nc = 0.0, rc = 0.0, nhf = 0.0;
  if (c.has_choquard()) {
    const KernelTable lapA = build_kernel(g, KernelKind::abs_laplacian());
    const KernelTable W = build_kernel(g, KernelKind::riesz(c.gamma1));
    std::vector<std::vector<double>> rho;
    for (const auto& f : s.fields) rho.push_back(rho_p(f, c.p));
    const double lt = 4.0 * (c.p - 2.0) / c.p;
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) {
        if (c.lambda[j][k] == 0.0) continue;
        double acc = 0.0;
        for (std::size_t x = 0; x < n; ++x)
          for (std::size_t y = 0; y < n; ++y)
            for (std::size_t z = 0; z < n; ++z)
              acc += kernel_at(lapA, x, y) * kernel_at(W, x, z) * rho[k][z] * rho[j][x] * M[y];
        nc += lt * c.lambda[j][k] * acc * h3;
      }
    for (int a = 0; a < g.dim; ++a) {
      const KernelTable dA = build_kernel(g, KernelKind::abs_gradient(a));
      const KernelTable dW = build_kernel(g, KernelKind::riesz_gradient(c.gamma1, a));
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) {
          if (c.lambda[j][k] == 0.0) continue;
          double acc = 0.0;
          for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y)
              for (std::size_t z = 0; z < n; ++z)
                acc += kernel_at(dA, x, y) * kernel_at(dW, x, z) * rho[k][z] * rho[j][x] * M[y];
          rc -= (8.0 / c.p) * c.lambda[j][k] * acc * h3;
        }
    }
  }
  if (c.beta != 0.0) {
    for (int a = 0; a < g.dim; ++a) {
      const KernelTable dA = build_kernel(g, KernelKind::abs_gradient(a));
      const KernelTable dW = build_kernel(g, KernelKind::riesz_gradient(c.gamma2, a));
      double acc = 0.0;
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t z = 0; z < n; ++z) {
          cplx eta(0.0, 0.0);
          for (const auto& f : s.fields) eta += f.values[x] * std::conj(f.values[z]);
          const double F = M[x] * M[z] - std::norm(eta);
          for (std::size_t y = 0; y < n; ++y) acc += kernel_at(dA, x, y) * kernel_at(dW, x, z) * F * M[y];
        }
      nhf -= 4.0 * c.beta * acc * h3;
    }
  }
  return {nc, rc, nhf};
}

}  // namespace schx::oracle

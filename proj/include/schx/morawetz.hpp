#pragma once

// Virial and interaction Morawetz functionals evaluated on a single state.
//
// Derivatives of the state use the spectral (odd) symbol. Convolutions with
// |x|, its gradient/laplacian and the Riesz gradient use the kernel tables,
// so the positivity arguments (symmetrization in x <-> z) hold exactly on the
// grid and not only in the limit.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "schx/kernel.hpp"
#include "schx/model.hpp"

namespace schx {

namespace detail {

inline SpectralField real_to_field(const GridSpec& g, const std::vector<double>& v) {
  SpectralField f(g);
  for (std::size_t i = 0; i < v.size(); ++i) f.values[i] = cplx(v[i], 0.0);
  return f;
}

inline std::vector<double> real_partial(const GridSpec& g, const std::vector<double>& v, int axis) {
  const SpectralField d = as_physical(partial(real_to_field(g, v), axis));
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d.values[i].real();
  return out;
}

inline std::vector<SpectralField> physical_fields(const SystemState& s) {
  std::vector<SpectralField> out;
  for (const auto& f : s.fields) out.push_back(as_physical(f));
  return out;
}

/// M(x) = sum_j |psi_j(x)|^2
inline std::vector<double> total_density(const std::vector<SpectralField>& phys) {
  const std::size_t n = phys.front().size();
  std::vector<double> m(n, 0.0);
  for (const auto& f : phys) parallel_for(n, [&](std::size_t i) { m[i] += std::norm(f.values[i]); });
  return m;
}

inline std::vector<std::vector<double>> total_momentum(const SystemState& s) {
  const GridSpec& g = s.grid();
  std::vector<std::vector<double>> J(static_cast<std::size_t>(g.dim), std::vector<double>(g.size(), 0.0));
  for (const auto& f : s.fields) {
    const auto j = momentum_density(f);
    for (int a = 0; a < g.dim; ++a) parallel_for(g.size(), [&](std::size_t i) { J[a][i] += j[a][i]; });
  }
  return J;
}

}  // namespace detail

/// Weight a(x) sampled on the grid together with its derivatives.
/// bilap empty means the bilaplacian term is taken in divergence form.
struct VirialWeight {
  GridSpec grid;
  std::vector<double> a;
  std::vector<std::vector<double>> grad;  // [axis]
  std::vector<std::vector<double>> hess;  // [a * d + b]
  std::vector<double> lap;
  std::vector<double> bilap;
};

/// a = |x| from the kernel tables (singular cells regularized there).
inline VirialWeight abs_virial_weight(const GridSpec& g) {
  VirialWeight w;
  w.grid = g;
  w.a = cached_kernel(g, KernelKind::abs_weight())->samples;
  w.lap = cached_kernel(g, KernelKind::abs_laplacian())->samples;
  for (int a = 0; a < g.dim; ++a) {
    w.grad.push_back(cached_kernel(g, KernelKind::abs_gradient(a))->samples);
    for (int b = 0; b < g.dim; ++b) w.hess.push_back(cached_kernel(g, KernelKind::abs_hessian(a, b))->samples);
  }
  return w;
}

/// a = sqrt(eps^2 + |x|^2) with closed-form derivatives. The closed-form
/// bilaplacian is optional: its grid quadrature converges much more slowly than
/// the divergence form, which stays spectrally accurate for decaying states.
inline VirialWeight smooth_virial_weight(const GridSpec& g, double eps = 1.0, bool closed_bilap = false) {
  if (!(eps > 0.0)) throw DomainError("smooth weight: eps must be > 0");
  const int d = g.dim;
  VirialWeight w;
  w.grid = g;
  w.a.resize(g.size());
  w.lap.resize(g.size());
  if (closed_bilap) w.bilap.resize(g.size());
  w.grad.assign(d, std::vector<double>(g.size()));
  w.hess.assign(d * d, std::vector<double>(g.size()));
  const double e2 = eps * eps;
  parallel_for(g.size(), [&](std::size_t i) {
    const auto x = g.position(i);
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) r2 += x[a] * x[a];
    const double s = std::sqrt(e2 + r2);
    const double s3 = s * s * s, s5 = s3 * s * s, s7 = s5 * s * s;
    w.a[i] = s;
    for (int a = 0; a < d; ++a) {
      w.grad[a][i] = x[a] / s;
      for (int b = 0; b < d; ++b) w.hess[a * d + b][i] = (a == b ? 1.0 / s : 0.0) - x[a] * x[b] / s3;
    }
    w.lap[i] = (d - 1) / s + e2 / s3;
    if (closed_bilap) w.bilap[i] = (d - 1) * (-d / s3 + 3.0 * r2 / s5) + e2 * (-3.0 * d / s5 + 15.0 * r2 / s7);
  });
  return w;
}

/// a = sqrt(e^2 + sum_a sin^2(u x_a)) / u with u = pi / (2 half_length), e = eps u:
/// periodic, close to sqrt(eps^2 + |x|^2) near the origin. Derivatives are taken
/// spectrally so the identities hold for the discrete flow up to roundoff.
inline VirialWeight periodic_virial_weight(const GridSpec& g, double eps = 3.0) {
  if (!(eps > 0.0)) throw DomainError("periodic weight: eps must be > 0");
  const int d = g.dim;
  const double u = std::numbers::pi / (2.0 * g.half_length), e = eps * u;
  VirialWeight w;
  w.grid = g;
  w.a.resize(g.size());
  parallel_for(g.size(), [&](std::size_t i) {
    const auto x = g.position(i);
    double s = e * e;
    for (int a = 0; a < d; ++a) s += std::sin(u * x[a]) * std::sin(u * x[a]);
    w.a[i] = std::sqrt(s) / u;
  });
  const SpectralField A = detail::real_to_field(g, w.a);
  w.lap.assign(g.size(), 0.0);
  for (int a = 0; a < d; ++a) {
    const SpectralField da = partial(A, a);
    w.grad.push_back(detail::real_partial(g, w.a, a));
    for (int b = 0; b < d; ++b) {
      const SpectralField dab = as_physical(partial(da, b));
      std::vector<double> h(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) h[i] = dab.values[i].real();
      if (a == b)
        for (std::size_t i = 0; i < g.size(); ++i) w.lap[i] += h[i];
      w.hess.push_back(std::move(h));
    }
  }
  return w;
}

inline VirialWeight constant_virial_weight(const GridSpec& g, double c) {
  VirialWeight w;
  w.grid = g;
  w.a.assign(g.size(), c);
  w.lap.assign(g.size(), 0.0);
  w.bilap.assign(g.size(), 0.0);
  w.grad.assign(g.dim, std::vector<double>(g.size(), 0.0));
  w.hess.assign(g.dim * g.dim, std::vector<double>(g.size(), 0.0));
  return w;
}

/// Fraction of the total mass in the outer 10% shell max_a |x_a| > 0.9 L.
struct SupportReport {
  double shell_fraction = 0.0;
  bool warn = false;
};

inline SupportReport support_monitor(const SystemState& s, double threshold = 1e-6) {
  const GridSpec& g = s.grid();
  const auto M = detail::total_density(detail::physical_fields(s));
  const double total = quadrature(g, [&](std::size_t i) { return M[i]; });
  const double shell = quadrature(g, [&](std::size_t i) {
    const auto x = g.position(i);
    double m = 0.0;
    for (int a = 0; a < g.dim; ++a) m = std::max(m, std::abs(x[a]));
    return m > 0.9 * g.half_length ? M[i] : 0.0;
  });
  SupportReport r;
  r.shell_fraction = total > 0.0 ? shell / total : 0.0;
  r.warn = r.shell_fraction >= threshold;
  return r;
}

inline void require_weight_grid(const SystemState& s, const VirialWeight& w) {
  if (w.grid != s.grid()) throw ContractViolation("virial weight grid differs from state grid");
}

inline double virial(const SystemState& s, const VirialWeight& w) {
  require_weight_grid(s, w);
  const auto M = detail::total_density(detail::physical_fields(s));
  return quadrature(s.grid(), [&](std::size_t i) { return w.a[i] * M[i]; });
}

inline double virial_dot(const SystemState& s, const VirialWeight& w) {
  require_weight_grid(s, w);
  const auto J = detail::total_momentum(s);
  return 2.0 * quadrature(s.grid(), [&](std::size_t i) {
    double v = 0.0;
    for (int a = 0; a < s.grid().dim; ++a) v += J[a][i] * w.grad[a][i];
    return v;
  });
}

struct VirialTerms {
  double linear_bilap = 0.0;         // -int m bilap(a)
  double hessian = 0.0;              // 4 int grad psi D^2a grad conj psi
  double choquard_divergence = 0.0;  // (2(p-2)/p) sum lambda int lap(a) U_k rho_j
  double choquard_gradient = 0.0;    // -(4/p) sum lambda int grad a . grad U_k rho_j
  double hf_gradient = 0.0;          // -2 beta sum int grad a . grad F_jk
  double sum() const { return linear_bilap + hessian + choquard_divergence + choquard_gradient + hf_gradient; }
};

inline VirialTerms virial_ddot_terms(const SystemState& s, const VirialWeight& w) {
  require_weight_grid(s, w);
  check_state(s);
  const GridSpec& g = s.grid();
  const int d = g.dim;
  const int N = s.size();
  const auto& c = s.params;
  const auto phys = detail::physical_fields(s);
  const auto M = detail::total_density(phys);
  VirialTerms t;

  if (!w.bilap.empty()) {
    t.linear_bilap = -quadrature(g, [&](std::size_t i) { return M[i] * w.bilap[i]; });
  } else {
    // -int a bilap(m), spectral bilaplacian of the density.
    const SpectralField b = as_physical(laplacian(laplacian(detail::real_to_field(g, M))));
    t.linear_bilap = -quadrature(g, [&](std::size_t i) { return w.a[i] * b.values[i].real(); });
  }

  for (int j = 0; j < N; ++j) {
    const auto grad = gradient(phys[j]);
    t.hessian += 4.0 * quadrature(g, [&](std::size_t i) {
      double v = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          v += w.hess[a * d + b][i] * std::real(std::conj(grad[a].values[i]) * grad[b].values[i]);
      return v;
    });
  }

  const bool choquard = c.has_choquard();
  const NonlocalPotentials P = nonlocal_potentials(s, c.beta != 0.0);
  if (choquard) {
    for (int j = 0; j < N; ++j) {
      if (c.p != 2.0) {
        t.choquard_divergence += (2.0 * (c.p - 2.0) / c.p) *
                                 quadrature(g, [&](std::size_t i) { return w.lap[i] * P.V[j][i] * P.rho[j][i]; });
      }
      std::vector<std::vector<double>> dV;
      for (int a = 0; a < d; ++a) dV.push_back(detail::real_partial(g, P.V[j], a));
      t.choquard_gradient -= (4.0 / c.p) * quadrature(g, [&](std::size_t i) {
        double v = 0.0;
        for (int a = 0; a < d; ++a) v += w.grad[a][i] * dV[a][i];
        return v * P.rho[j][i];
      });
    }
  }

  if (c.beta != 0.0) {
    // Gradient acts on the convolution factor only.
    std::vector<std::vector<double>> dD;
    for (int a = 0; a < d; ++a) dD.push_back(detail::real_partial(g, P.D, a));
    std::vector<std::vector<double>> phi(d, std::vector<double>(g.size(), 0.0));
    for (int a = 0; a < d; ++a) parallel_for(g.size(), [&](std::size_t i) { phi[a][i] = M[i] * dD[a][i]; });
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < N; ++j) {
        const auto dX = gradient(P.X[k][j]);
        for (int a = 0; a < d; ++a) {
          const SpectralField dx = as_physical(dX[a]);
          parallel_for(g.size(), [&](std::size_t i) {
            phi[a][i] -= std::real(dx.values[i] * phys[k].values[i] * std::conj(phys[j].values[i]));
          });
        }
      }
    t.hf_gradient = -2.0 * c.beta * quadrature(g, [&](std::size_t i) {
      double v = 0.0;
      for (int a = 0; a < d; ++a) v += w.grad[a][i] * phi[a][i];
      return v;
    });
  }
  return t;
}

// ---- interaction functionals, a*(x, y) = |x - y| ----

/// I = int M (|x| * M)
inline double interaction_action(const SystemState& s) {
  const GridSpec& g = s.grid();
  const auto M = detail::total_density(detail::physical_fields(s));
  const auto AM = convolve_real(*cached_kernel(g, KernelKind::abs_weight()), M);
  return quadrature(g, [&](std::size_t i) { return M[i] * AM[i]; });
}

/// u_a = (x_a / |x|) * M, the field entering every interaction term.
inline std::vector<std::vector<double>> interaction_drift(const GridSpec& g, const std::vector<double>& M) {
  std::vector<std::vector<double>> u;
  for (int a = 0; a < g.dim; ++a) u.push_back(convolve_real(*cached_kernel(g, KernelKind::abs_gradient(a)), M));
  return u;
}

/// dI/dt = 4 int J . u (both density factors move, each contributing 2 int J . u).
inline double interaction_action_dot(const SystemState& s) {
  const GridSpec& g = s.grid();
  const auto M = detail::total_density(detail::physical_fields(s));
  const auto u = interaction_drift(g, M);
  const auto J = detail::total_momentum(s);
  return 4.0 * quadrature(g, [&](std::size_t i) {
    double v = 0.0;
    for (int a = 0; a < g.dim; ++a) v += J[a][i] * u[a][i];
    return v;
  });
}

/// 4 (sum_j ||grad psi_j|| ||psi_j||) (sum_l M_l), valid since |grad a*| <= 1.
inline double interaction_action_dot_bound(const SystemState& s) {
  double gm = 0.0, m = 0.0;
  for (const auto& f : s.fields) {
    const double l2 = norm_L2(f);
    gm += std::sqrt(gradient_norm_sq(f)) * l2;
    m += l2 * l2;
  }
  return 4.0 * gm * m;
}

struct NonlinearTerms {
  double N_C = 0.0;
  double R_C = 0.0;
  double N_HF = 0.0;
};

inline NonlinearTerms nonlinear_terms(const SystemState& s) {
  check_state(s);
  const GridSpec& g = s.grid();
  const int d = g.dim;
  const int N = s.size();
  const auto& c = s.params;
  const auto phys = detail::physical_fields(s);
  const auto M = detail::total_density(phys);
  NonlinearTerms out;
  const bool need_drift = c.has_choquard() || c.beta != 0.0;
  if (!need_drift) return out;
  const auto u = interaction_drift(g, M);

  if (c.has_choquard()) {
    const NonlocalPotentials P = nonlocal_potentials(s, false);
    if (c.p != 2.0) {
      const auto LM = convolve_real(*cached_kernel(g, KernelKind::abs_laplacian()), M);
      const double lt = 4.0 * (c.p - 2.0) / c.p;
      for (int j = 0; j < N; ++j)
        out.N_C += lt * quadrature(g, [&](std::size_t i) { return LM[i] * P.V[j][i] * P.rho[j][i]; });
    }
    for (int a = 0; a < d; ++a) {
      const auto dW = cached_kernel(g, KernelKind::riesz_gradient(c.gamma1, a));
      std::vector<std::vector<double>> dU;
      for (int k = 0; k < N; ++k) dU.push_back(convolve_real(*dW, P.rho[k]));
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) {
          const double l = c.lambda[j][k];
          if (l == 0.0) continue;
          out.R_C -= (8.0 / c.p) * l * quadrature(g, [&](std::size_t i) { return u[a][i] * dU[k][i] * P.rho[j][i]; });
        }
    }
  }

  if (c.beta != 0.0) {
    for (int a = 0; a < d; ++a) {
      const auto dW = cached_kernel(g, KernelKind::riesz_gradient(c.gamma2, a));
      const auto dD = convolve_real(*dW, M);
      std::vector<double> phi(g.size());
      parallel_for(g.size(), [&](std::size_t i) { phi[i] = M[i] * dD[i]; });
      for (int k = 0; k < N; ++k)
        for (int j = 0; j < N; ++j) {
          SpectralField prod(g);
          parallel_for(g.size(), [&](std::size_t i) { prod.values[i] = std::conj(phys[k].values[i]) * phys[j].values[i]; });
          const SpectralField dX = as_physical(convolve(*dW, prod));
          parallel_for(g.size(), [&](std::size_t i) {
            phi[i] -= std::real(dX.values[i] * phys[k].values[i] * std::conj(phys[j].values[i]));
          });
        }
      out.N_HF -= 4.0 * c.beta * quadrature(g, [&](std::size_t i) { return u[a][i] * phi[i]; });
    }
  }
  return out;
}

/// sum_j ||psi_j||_{H^1}^4, the scale for positivity tolerances.
inline double problem_scale(const SystemState& s) {
  double v = 0.0;
  for (const auto& f : s.fields) v += std::pow(norm_H1(f), 4);
  return v;
}

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Seeded uniform pairs of grid points with every coordinate in [-L/2, L/2].
inline std::vector<IndexPair> sample_interior_pairs(const GridSpec& g, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> axis_ok;
  for (std::size_t i = 0; i < g.n; ++i)
    if (std::abs(g.coordinate(i)) <= 0.5 * g.half_length) axis_ok.push_back(i);
  std::mt19937_64 rng(seed);
  auto draw = [&] {
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) idx[a] = axis_ok[rng() % axis_ok.size()];
    return g.flatten(idx);
  };
  std::vector<IndexPair> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t x = draw();
    out.emplace_back(x, draw());
  }
  return out;
}

inline constexpr std::size_t kExhaustivePairLimit = 1024;

/// Every ordered pair of interior points; only for n^d <= 1024.
inline std::vector<IndexPair> all_interior_pairs(const GridSpec& g) {
  if (g.size() > kExhaustivePairLimit) throw CostGuardError("all_interior_pairs: n^d exceeds 1024");
  std::vector<std::size_t> pts;
  for (std::size_t x = 0; x < g.size(); ++x) {
    const auto p = g.position(x);
    bool in = true;
    for (int a = 0; a < g.dim; ++a) in = in && std::abs(p[a]) <= 0.5 * g.half_length;
    if (in) pts.push_back(x);
  }
  std::vector<IndexPair> out;
  for (std::size_t x : pts)
    for (std::size_t z : pts) out.emplace_back(x, z);
  return out;
}

/// min over pairs of K(x, z) = (x - z) . (u(x) - u(z)); coordinates are not wrapped.
inline double k_kernel_check(const SystemState& s, const std::vector<IndexPair>& pairs) {
  const GridSpec& g = s.grid();
  const auto u = interaction_drift(g, detail::total_density(detail::physical_fields(s)));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [x, z] : pairs) {
    const auto px = g.position(x), pz = g.position(z);
    double k = 0.0;
    for (int a = 0; a < g.dim; ++a) k += (px[a] - pz[a]) * (u[a][x] - u[a][z]);
    best = std::min(best, k);
  }
  return pairs.empty() ? 0.0 : best;
}

/// max over pairs of |eta(x,z)|^2 - eta(x) eta(z), eta(x,z) = sum_j psi_j(x) conj(psi_j(z)).
inline double eta_bound_check(const SystemState& s, const std::vector<IndexPair>& pairs) {
  const auto phys = detail::physical_fields(s);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [x, z] : pairs) {
    cplx e(0.0, 0.0);
    double ex = 0.0, ez = 0.0;
    for (const auto& f : phys) {
      e += f.values[x] * std::conj(f.values[z]);
      ex += std::norm(f.values[x]);
      ez += std::norm(f.values[z]);
    }
    worst = std::max(worst, std::norm(e) - ex * ez);
  }
  return pairs.empty() ? 0.0 : worst;
}

/// sum_j ||psi_j||_{L^4}^4
inline double l4_integral(const SystemState& s) {
  double v = 0.0;
  for (const auto& f : s.fields) v += std::pow(norm_Lr(f, 4.0), 4);
  return v;
}

}  // namespace schx

#pragma once

// Coupled Choquard / Hartree-Fock system: parameters, regime checks, the
// nonlinearity G_j and the conserved functionals.

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "schx/errors.hpp"
#include "schx/field.hpp"
#include "schx/kernel.hpp"

namespace schx {

struct CouplingParams {
  int n_components = 1;
  double p = 2.0;
  double gamma1 = 0.5;
  double gamma2 = 0.5;
  std::vector<std::vector<double>> lambda{{1.0}};
  double beta = 0.0;
  bool exploratory = false;  // asymmetric lambda allowed, hamiltonian not reported

  bool lambda_symmetric() const {
    for (int j = 0; j < n_components; ++j)
      for (int k = 0; k < n_components; ++k)
        if (lambda[j][k] != lambda[k][j]) return false;
    return true;
  }
  bool has_choquard() const {
    for (const auto& row : lambda)
      for (double v : row)
        if (v != 0.0) return true;
    return false;
  }
};

enum class Regime { mass_energy_intercritical_scattering, hartree_p2, outside_theorem_hypotheses };

inline std::string regime_name(Regime r) {
  switch (r) {
    case Regime::mass_energy_intercritical_scattering: return "mass-energy-intercritical-scattering";
    case Regime::hartree_p2: return "hartree-p2";
    case Regime::outside_theorem_hypotheses: return "outside-theorem-hypotheses";
  }
  return "unknown";
}

struct RegimeReport {
  double p_star_lower = 0.0;  // (d + gamma1 + 2) / d
  double p_star_upper = 0.0;  // (d + gamma1) / (d - 2), infinite for d <= 2
  Regime classification = Regime::outside_theorem_hypotheses;
};

inline double p_star_upper(int d, double gamma1) {
  return d <= 2 ? std::numeric_limits<double>::infinity() : (d + gamma1) / (d - 2);
}

inline double p_star_lower(int d, double gamma1) { return (d + gamma1 + 2.0) / d; }

namespace detail {
inline std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}
}  // namespace detail

/// Every violated constraint is collected before throwing.
inline RegimeReport validate(const CouplingParams& c, const GridSpec& grid) {
  std::vector<std::string> bad;
  const int d = grid.dim;
  const int N = c.n_components;
  if (N < 1) bad.push_back("N >= 1 (got " + std::to_string(N) + ")");
  bool shape_ok = static_cast<int>(c.lambda.size()) == N;
  for (const auto& row : c.lambda) shape_ok = shape_ok && static_cast<int>(row.size()) == N;
  if (!shape_ok) bad.push_back("lambda must be an N x N matrix");
  if (shape_ok) {
    for (int j = 0; j < N; ++j) {
      if (c.lambda[j][j] == 0.0) bad.push_back("lambda_jj != 0 (j=" + std::to_string(j) + ")");
      for (int k = 0; k < N; ++k)
        if (c.lambda[j][k] < 0.0)
          bad.push_back("defocusing lambda_jk >= 0 (j=" + std::to_string(j) + ", k=" + std::to_string(k) + ")");
    }
    if (!c.exploratory && !c.lambda_symmetric())
      bad.push_back("symmetric lambda required outside exploratory mode");
  }
  if (c.beta < 0.0) bad.push_back("defocusing beta >= 0");
  if (c.p > 2.0 && c.beta != 0.0) bad.push_back("β=0 if p>2");
  if (!(c.gamma1 > 0.0 && c.gamma1 < d))
    bad.push_back("0 < γ₁ < d (got γ₁=" + detail::fmt(c.gamma1) + ", d=" + std::to_string(d) + ")");
  if (!(c.p >= 2.0)) bad.push_back("eq:base lower bound p >= 2 (got p=" + detail::fmt(c.p) + ")");
  const double pu = p_star_upper(d, c.gamma1);
  if (d >= 3 && !(c.p < pu))
    bad.push_back("eq:base upper bound p < (d+γ₁)/(d−2) = " + detail::fmt(pu) + " (got p=" + detail::fmt(c.p) + ")");
  if (c.beta != 0.0) {
    const double lo = std::max(0, d - 4);
    if (!(c.gamma2 > lo && c.gamma2 < d)) bad.push_back("max(0, d−4) < γ₂ < d (got γ₂=" + detail::fmt(c.gamma2) + ")");
  }
  if (!bad.empty()) throw ValidationError(bad);

  RegimeReport r;
  r.p_star_lower = p_star_lower(d, c.gamma1);
  r.p_star_upper = pu;
  const double lo = std::max(0, d - 4);
  if (c.p > 2.0 && c.p > r.p_star_lower && c.p < pu) {
    r.classification = Regime::mass_energy_intercritical_scattering;
  } else if (c.p == 2.0 && d >= 3 && c.gamma1 > lo && c.gamma1 < d - 2 &&
             (c.beta == 0.0 || (c.gamma2 > lo && c.gamma2 < d - 2))) {
    r.classification = Regime::hartree_p2;
  }
  return r;
}

struct SystemState {
  CouplingParams params;
  std::vector<SpectralField> fields;
  double time = 0.0;

  const GridSpec& grid() const {
    if (fields.empty()) throw ContractViolation("state has no fields");
    return fields.front().grid;
  }
  int size() const noexcept { return static_cast<int>(fields.size()); }
};

inline void check_state(const SystemState& s) {
  if (s.size() != s.params.n_components) throw ContractViolation("field count differs from N");
  for (int j = 0; j < s.size(); ++j) {
    require_same_grid(s.fields[j], s.fields.front());
    check_finite(s.fields[j], j);
  }
}

/// Shared immutable kernel tables keyed by (grid, kind).
inline std::shared_ptr<const KernelTable> cached_kernel(const GridSpec& g, const KernelKind& k) {
  using Key = std::tuple<int, std::size_t, double, int, double, int, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const KernelTable>> cache;
  const Key key{g.dim, g.n, g.half_length, static_cast<int>(k.type), k.gamma, k.axis, k.axis2};
  std::lock_guard<std::mutex> lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto t = std::make_shared<const KernelTable>(build_kernel(g, k));
  cache.emplace(key, t);
  return t;
}

/// |z|^e for e >= 0, with 0^0 = 1 so |psi|^{p-2} psi vanishes at psi = 0.
inline double abs_pow(double a, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return a;
  if (e == 2.0) return a * a;
  return std::pow(a, e);
}

inline std::vector<double> mass_density(const SpectralField& f) {
  const SpectralField p = as_physical(f);
  std::vector<double> m(p.size());
  parallel_for(p.size(), [&](std::size_t i) { m[i] = std::norm(p.values[i]); });
  return m;
}

/// j_a = Im(conj(f) d_a f).
inline std::vector<std::vector<double>> momentum_density(const SpectralField& f) {
  const SpectralField p = as_physical(f);
  const auto grad = gradient(p);
  std::vector<std::vector<double>> j(grad.size(), std::vector<double>(p.size()));
  for (std::size_t a = 0; a < grad.size(); ++a)
    parallel_for(p.size(), [&](std::size_t i) { j[a][i] = std::imag(std::conj(p.values[i]) * grad[a].values[i]); });
  return j;
}

/// |psi|^p per component.
inline std::vector<std::vector<double>> power_densities(const SystemState& s) {
  std::vector<std::vector<double>> out;
  const double p = s.params.p;
  for (const auto& f : s.fields) {
    const SpectralField x = as_physical(f);
    std::vector<double> r(x.size());
    parallel_for(x.size(), [&](std::size_t i) { r[i] = abs_pow(std::abs(x.values[i]), p); });
    out.push_back(std::move(r));
  }
  return out;
}

/// Intermediate convolutions shared by G, the energies and the Morawetz terms.
struct NonlocalPotentials {
  std::vector<std::vector<double>> rho;   // |psi_k|^p
  std::vector<std::vector<double>> U;     // W_{gamma1} * |psi_k|^p
  std::vector<std::vector<double>> V;     // sum_k lambda_jk U_k
  std::vector<double> D;                  // W_{gamma2} * sum_k |psi_k|^2   (beta != 0)
  std::vector<std::vector<SpectralField>> X;  // X[k][j] = W_{gamma2} * (conj(psi_k) psi_j)
};

inline NonlocalPotentials nonlocal_potentials(const SystemState& s, bool with_exchange = true) {
  const GridSpec& g = s.grid();
  const auto& c = s.params;
  const int N = s.size();
  NonlocalPotentials P;
  P.rho = power_densities(s);
  P.V.assign(N, std::vector<double>(g.size(), 0.0));
  if (c.has_choquard()) {
    const auto W1 = cached_kernel(g, KernelKind::riesz(c.gamma1));
    for (int k = 0; k < N; ++k) P.U.push_back(convolve_real(*W1, P.rho[k]));
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) {
        const double l = c.lambda[j][k];
        if (l == 0.0) continue;
        parallel_for(g.size(), [&](std::size_t i) { P.V[j][i] += l * P.U[k][i]; });
      }
  } else {
    P.U.assign(N, std::vector<double>(g.size(), 0.0));
  }
  if (c.beta != 0.0 && with_exchange) {
    const auto W2 = cached_kernel(g, KernelKind::riesz(c.gamma2));
    std::vector<SpectralField> phys;
    for (const auto& f : s.fields) phys.push_back(as_physical(f));
    std::vector<double> total(g.size(), 0.0);
    for (const auto& f : phys)
      parallel_for(g.size(), [&](std::size_t i) { total[i] += std::norm(f.values[i]); });
    P.D = convolve_real(*W2, total);
    P.X.assign(N, std::vector<SpectralField>(N));
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < N; ++j) {
        if (j < k) {
          // X[k][j] = conj(X[j][k]) for an even real kernel.
          P.X[k][j] = P.X[j][k];
          for (auto& v : P.X[k][j].values) v = std::conj(v);
          continue;
        }
        SpectralField prod(g);
        parallel_for(g.size(), [&](std::size_t i) { prod.values[i] = std::conj(phys[k].values[i]) * phys[j].values[i]; });
        P.X[k][j] = as_physical(convolve(*W2, prod));
      }
  }
  return P;
}

/// G_j for every component, physical representation.
inline std::vector<SpectralField> nonlinearity(const SystemState& s, const NonlocalPotentials& P) {
  const GridSpec& g = s.grid();
  const auto& c = s.params;
  const int N = s.size();
  std::vector<SpectralField> phys;
  for (const auto& f : s.fields) phys.push_back(as_physical(f));
  std::vector<SpectralField> G;
  for (int j = 0; j < N; ++j) {
    SpectralField out(g);
    const auto& psi = phys[j].values;
    parallel_for(g.size(), [&](std::size_t i) {
      out.values[i] = P.V[j][i] * abs_pow(std::abs(psi[i]), c.p - 2.0) * psi[i];
    });
    if (c.beta != 0.0) {
      parallel_for(g.size(), [&](std::size_t i) {
        cplx exch(0.0, 0.0);
        for (int k = 0; k < N; ++k) exch += P.X[k][j].values[i] * phys[k].values[i];
        out.values[i] += c.beta * (P.D[i] * psi[i] - exch);
      });
    }
    G.push_back(std::move(out));
  }
  return G;
}

inline std::vector<SpectralField> nonlinearity(const SystemState& s) {
  check_state(s);
  return nonlinearity(s, nonlocal_potentials(s));
}

inline double mass(const SystemState& s, int j) {
  const double n = norm_L2(s.fields.at(static_cast<std::size_t>(j)));
  return n * n;
}

inline double total_mass(const SystemState& s) {
  double m = 0.0;
  for (int j = 0; j < s.size(); ++j) m += mass(s, j);
  return m;
}

struct EnergyReport {
  double kinetic = 0.0;       // sum_j int |grad psi_j|^2
  double choquard = 0.0;      // sum_jk lambda_jk int (W1 * |psi_k|^p) |psi_j|^p
  double hartree_fock = 0.0;  // direct minus exchange, no prefactor
  double paper_convention = 0.0;      // kinetic + choquard/(2p) + (beta/2) hf
  std::optional<double> hamiltonian;  // kinetic + choquard/p + (beta/2) hf, symmetric lambda only
};

inline EnergyReport energy(const SystemState& s, const NonlocalPotentials& P) {
  const GridSpec& g = s.grid();
  const auto& c = s.params;
  const int N = s.size();
  EnergyReport e;
  for (const auto& f : s.fields) e.kinetic += kinetic_quadratic_form(f);
  for (int j = 0; j < N; ++j) {
    if (!c.has_choquard()) break;
    e.choquard += quadrature(g, [&](std::size_t i) { return P.V[j][i] * P.rho[j][i]; });
  }
  if (c.beta != 0.0) {
    std::vector<SpectralField> phys;
    for (const auto& f : s.fields) phys.push_back(as_physical(f));
    e.hartree_fock = quadrature(g, [&](std::size_t i) {
      double dens = 0.0;
      for (int k = 0; k < N; ++k) dens += std::norm(phys[k].values[i]);
      double exch = 0.0;
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k)
          exch += std::real(P.X[k][j].values[i] * phys[k].values[i] * std::conj(phys[j].values[i]));
      return P.D[i] * dens - exch;
    });
  }
  e.paper_convention = e.kinetic + e.choquard / (2.0 * c.p) + 0.5 * c.beta * e.hartree_fock;
  if (c.lambda_symmetric()) e.hamiltonian = e.kinetic + e.choquard / c.p + 0.5 * c.beta * e.hartree_fock;
  return e;
}

inline EnergyReport energy(const SystemState& s) {
  check_state(s);
  return energy(s, nonlocal_potentials(s));
}

}  // namespace schx

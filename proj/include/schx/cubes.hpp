#pragma once

// Localized quantities on cubes x~ + [-r, r]^d of the torus.
//
// A cube anchored at grid index i covers w = round(2r/h) cells starting at
// i - w/2 on every axis (periodic). Per-cube integrals are separable sliding
// sums, evaluated at every anchor and then read off on the stride lattice.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "schx/model.hpp"

namespace schx {

struct CubeFamily {
  GridSpec grid;
  double r = 1.0;            // half-width
  std::size_t width = 0;     // cells per side
  std::size_t stride = 0;    // cells between anchors per axis
  std::vector<std::size_t> anchors;

  /// Largest number of cubes covering a single cell.
  std::size_t overlap_factor() const {
    std::size_t worst = 0;
    for (std::size_t c = 0; c < grid.n; ++c) {
      std::size_t hits = 0;
      for (std::size_t a = 0; a < grid.n; a += stride) {
        const std::size_t start = (a + grid.n - width / 2) % grid.n;
        if ((c + grid.n - start) % grid.n < width) ++hits;
      }
      worst = std::max(worst, hits);
    }
    std::size_t f = 1;
    for (int a = 0; a < grid.dim; ++a) f *= worst;
    return f;
  }
};

/// Default stride is r (one half of the side), giving overlap 2^d.
inline CubeFamily make_cube_family(const GridSpec& g, double r = 1.0, std::size_t stride = 0) {
  g.validate();
  if (!(r > 0.0)) throw DomainError("cube family: r must be > 0");
  CubeFamily f;
  f.grid = g;
  f.r = r;
  const double h = g.spacing();
  f.width = static_cast<std::size_t>(std::llround(2.0 * r / h));
  if (f.width < 1 || f.width > g.n) throw DomainError("cube family: side 2r must span between 1 and n cells");
  f.stride = stride ? stride : std::max<std::size_t>(1, f.width / 2);
  if (f.stride > f.width) throw DomainError("cube family: stride larger than the side leaves gaps");
  std::vector<std::size_t> axis;
  for (std::size_t i = 0; i < g.n; i += f.stride) axis.push_back(i);
  std::array<std::size_t, 3> idx{0, 0, 0};
  const std::size_t per = axis.size();
  std::size_t total = 1;
  for (int a = 0; a < g.dim; ++a) total *= per;
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t rem = t;
    for (int a = g.dim - 1; a >= 0; --a) {
      idx[a] = axis[rem % per];
      rem /= per;
    }
    f.anchors.push_back(g.flatten(idx));
  }
  return f;
}

/// h^d * sum of v over the cube anchored at every grid index.
inline std::vector<double> cube_integrals(const GridSpec& g, const std::vector<double>& v, std::size_t width) {
  std::vector<double> cur = v, next(v.size());
  const std::size_t n = g.n;
  for (int axis = 0; axis < g.dim; ++axis) {
    parallel_for(g.size(), [&](std::size_t flat) {
      auto idx = g.unflatten(flat);
      const std::size_t i = idx[axis];
      double acc = 0.0;
      for (std::size_t t = 0; t < width; ++t) {
        idx[axis] = (i + n - width / 2 + t) % n;
        acc += cur[g.flatten(idx)];
      }
      next[flat] = acc;
    });
    std::swap(cur, next);
  }
  const double hd = g.cell_volume();
  for (auto& x : cur) x *= hd;
  return cur;
}

enum class CubeFlavor {
  triple,           // d >= 2: sum lt_jk int_Q |psi_j|^p int_Q M int_Q |psi_k|^p
  diagonal_triple,  // d = 1: sum lt_jk int_Q |psi_j|^p M int_Q |psi_k|^p
  quartic,          // d = 3: sum_j int_Q |psi_j|^4
  pair,             // d >= 4: (int_Q M)^2
};

inline std::string cube_flavor_name(CubeFlavor f) {
  switch (f) {
    case CubeFlavor::triple: return "triple";
    case CubeFlavor::diagonal_triple: return "diagonal_triple";
    case CubeFlavor::quartic: return "quartic";
    case CubeFlavor::pair: return "pair";
  }
  return "?";
}

inline CubeFlavor parse_cube_flavor(const std::string& s) {
  for (auto f : {CubeFlavor::triple, CubeFlavor::diagonal_triple, CubeFlavor::quartic, CubeFlavor::pair})
    if (cube_flavor_name(f) == s) return f;
  throw DomainError("unknown cube flavor '" + s + "'");
}

/// Flavor matching the dimension for the Choquard (p > 2) or pure HF (p = 2) case.
inline CubeFlavor default_cube_flavor(int d, double p) {
  if (p == 2.0) return d == 3 ? CubeFlavor::quartic : CubeFlavor::pair;
  return d == 1 ? CubeFlavor::diagonal_triple : CubeFlavor::triple;
}

inline void check_flavor_dim(CubeFlavor f, int d) {
  const bool ok = (f == CubeFlavor::triple && d >= 2) || (f == CubeFlavor::diagonal_triple && d == 1) ||
                  (f == CubeFlavor::quartic && d == 3) || (f == CubeFlavor::pair && d >= 4);
  if (!ok) throw DomainError("cube flavor " + cube_flavor_name(f) + " does not apply in d=" + std::to_string(d));
}

struct CubeStatistic {
  double sup_value = 0.0;
  std::size_t argmax_anchor = 0;  // flat grid index
};

inline CubeStatistic cube_statistic(const SystemState& s, const CubeFamily& fam, CubeFlavor flavor) {
  const GridSpec& g = s.grid();
  if (fam.grid != g) throw ContractViolation("cube family grid differs from state grid");
  check_flavor_dim(flavor, g.dim);
  const auto& c = s.params;
  const int N = s.size();
  std::vector<SpectralField> phys;
  for (const auto& f : s.fields) phys.push_back(as_physical(f));
  std::vector<double> M(g.size(), 0.0);
  for (const auto& f : phys)
    for (std::size_t i = 0; i < g.size(); ++i) M[i] += std::norm(f.values[i]);

  std::vector<double> value(g.size(), 0.0);
  if (flavor == CubeFlavor::quartic) {
    std::vector<double> q(g.size(), 0.0);
    for (const auto& f : phys)
      for (std::size_t i = 0; i < g.size(); ++i) q[i] += std::pow(std::norm(f.values[i]), 2);
    value = cube_integrals(g, q, fam.width);
  } else if (flavor == CubeFlavor::pair) {
    value = cube_integrals(g, M, fam.width);
    for (auto& v : value) v *= v;
  } else {
    const double lt = 4.0 * (c.p - 2.0) / c.p;
    std::vector<std::vector<double>> P, Q;
    for (const auto& f : phys) {
      std::vector<double> rp(g.size()), rm(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        rp[i] = abs_pow(std::abs(f.values[i]), c.p);
        rm[i] = rp[i] * M[i];
      }
      P.push_back(cube_integrals(g, rp, fam.width));
      if (flavor == CubeFlavor::diagonal_triple) Q.push_back(cube_integrals(g, rm, fam.width));
    }
    const auto MQ = flavor == CubeFlavor::triple ? cube_integrals(g, M, fam.width) : std::vector<double>{};
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) {
        const double l = lt * c.lambda[j][k];
        if (l == 0.0) continue;
        for (std::size_t i = 0; i < g.size(); ++i)
          value[i] += flavor == CubeFlavor::triple ? l * P[j][i] * MQ[i] * P[k][i] : l * Q[j][i] * P[k][i];
      }
  }
  CubeStatistic out;
  bool first = true;
  for (std::size_t a : fam.anchors) {
    if (first || value[a] > out.sup_value) {
      out.sup_value = value[a];
      out.argmax_anchor = a;
      first = false;
    }
  }
  return out;
}

namespace detail {

inline double bump_f(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

/// 1 on [0, 1], 0 on [2, inf), C-infinity in between.
inline double cutoff_profile(double t) {
  const double a = bump_f(2.0 - t), b = bump_f(t - 1.0);
  return a / (a + b);
}

}  // namespace detail

/// int phi((x - x~)/r) sum_j |psi_j|^2 with phi the tensorized cutoff above.
/// Displacements use the minimal torus image.
inline double cube_mass_tracker(const SystemState& s, const std::array<double, 3>& anchor, double r = 1.0) {
  if (!(r > 0.0)) throw DomainError("cube mass tracker: r must be > 0");
  const GridSpec& g = s.grid();
  std::vector<SpectralField> phys;
  for (const auto& f : s.fields) phys.push_back(as_physical(f));
  const double period = 2.0 * g.half_length;
  return quadrature(g, [&](std::size_t i) {
    const auto x = g.position(i);
    double w = 1.0;
    for (int a = 0; a < g.dim && w > 0.0; ++a) {
      double dx = x[a] - anchor[a];
      dx -= period * std::round(dx / period);
      w *= detail::cutoff_profile(std::abs(dx) / r);
    }
    if (w == 0.0) return 0.0;
    double m = 0.0;
    for (const auto& f : phys) m += std::norm(f.values[i]);
    return w * m;
  });
}

inline double gn_exponent(int d, double nu) { return (2.0 * d + 2.0 * nu + 4.0) / (d + nu); }

/// ||phi||_q^q / ((sup_x~ ||phi||_{L2(Q)})^{4/(d+nu)} ||phi||_{H1}^2), q = gn_exponent.
/// The sup runs over every grid anchor.
inline double gn_ratio(const std::vector<SpectralField>& fields, double r = 1.0, double nu = 2.0) {
  if (fields.empty()) throw ContractViolation("gn_ratio: no fields");
  const GridSpec& g = fields.front().grid;
  const int d = g.dim;
  const double q = gn_exponent(d, nu);
  std::vector<SpectralField> phys;
  for (const auto& f : fields) phys.push_back(as_physical(f));
  std::vector<double> M(g.size(), 0.0);
  for (const auto& f : phys)
    for (std::size_t i = 0; i < g.size(); ++i) M[i] += std::norm(f.values[i]);
  const double lq = quadrature(g, [&](std::size_t i) { return std::pow(M[i], 0.5 * q); });
  double h1 = 0.0;
  for (const auto& f : fields) h1 += std::pow(norm_H1(f), 2);
  if (!(h1 > 0.0)) throw DomainError("gn_ratio: zero field, ratio undefined");
  const auto fam = make_cube_family(g, r, 1);
  const auto cubes = cube_integrals(g, M, fam.width);
  double sup = 0.0;
  for (double v : cubes) sup = std::max(sup, v);
  return lq / (std::pow(std::sqrt(sup), 4.0 / (d + nu)) * h1);
}

}  // namespace schx

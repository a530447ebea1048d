#pragma once

// Seeded smooth random fields. Coefficients are drawn in a fixed mode order
// that does not depend on n, so the same seed gives the same continuous
// function on every resolution of a given torus.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "schx/field.hpp"

namespace schx {

struct RandomFieldSpec {
  int max_mode = 4;          // |m_a| <= max_mode per axis, k = pi m / L
  double decay = 1.0;        // coefficient weight (1 + |k|^2)^{-decay}
  double envelope = 0.0;     // Gaussian envelope width; 0 means none
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double l2_norm = 1.0;      // rescale target; <= 0 keeps raw scale
  std::uint64_t seed = 1;
};

/// Portable standard normal stream: raw mt19937_64 bits plus Box-Muller.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return rad * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline SpectralField random_field(const GridSpec& g, const RandomFieldSpec& spec) {
  const int M = spec.max_mode;
  if (M < 0 || 2 * M >= static_cast<int>(g.n)) throw DomainError("random field: max_mode must be below n/2");
  NormalStream normal(spec.seed);
  SpectralField s(g, Representation::spectral);
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.size()));
  std::array<int, 3> m{0, 0, 0};
  const int span = 2 * M + 1;
  long long total = 1;
  for (int a = 0; a < g.dim; ++a) total *= span;
  for (long long t = 0; t < total; ++t) {
    long long rest = t;
    for (int a = g.dim - 1; a >= 0; --a) {
      m[a] = static_cast<int>(rest % span) - M;
      rest /= span;
    }
    double k2 = 0.0;
    int parity = 0;
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
      const double k = std::numbers::pi * m[a] / g.half_length;
      k2 += k * k;
      parity += m[a];
      idx[a] = static_cast<std::size_t>((m[a] + static_cast<long long>(g.n)) % static_cast<long long>(g.n));
    }
    const double w = std::pow(1.0 + k2, -spec.decay);
    const double re = normal.next();
    const double im = normal.next();
    // x_0 = -L contributes (-1)^m so that f(x) = sum c_m e^{i k x} at every resolution.
    const double sign = (parity % 2 == 0) ? 1.0 : -1.0;
    s.values[g.flatten(idx)] = sign * w * cplx(re, im) / scale;
  }
  SpectralField f = to_physical(s);
  if (spec.envelope > 0.0) {
    const double w2 = spec.envelope * spec.envelope;
    parallel_for(f.size(), [&](std::size_t i) {
      const auto x = g.position(i);
      double r2 = 0.0;
      for (int a = 0; a < g.dim; ++a) r2 += (x[a] - spec.center[a]) * (x[a] - spec.center[a]);
      f.values[i] *= std::exp(-r2 / (2.0 * w2));
    });
  }
  if (spec.l2_norm > 0.0) {
    const double nrm = norm_L2(f);
    if (nrm > 0.0) f = cplx(spec.l2_norm / nrm, 0.0) * f;
  }
  return f;
}

}  // namespace schx

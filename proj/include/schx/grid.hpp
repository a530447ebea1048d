#pragma once

// Periodic grid on the torus [-L, L)^d, row-major with axis 0 slowest.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "schx/errors.hpp"

namespace schx {

struct GridSpec {
  int dim = 1;
  std::size_t n = 8;
  double half_length = 1.0;

  void validate() const {
    if (dim < 1 || dim > 3) throw DomainError("grid dimension must be 1, 2 or 3");
    if (n < 8 || (n & (n - 1)) != 0) throw DomainError("points per axis must be a power of two >= 8");
    if (!(half_length > 0.0) || !std::isfinite(half_length)) throw DomainError("half length must be positive");
  }

  double spacing() const noexcept { return 2.0 * half_length / static_cast<double>(n); }
  double cell_volume() const noexcept { return std::pow(spacing(), dim); }

  std::size_t size() const noexcept {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= n;
    return s;
  }

  /// Physical coordinate of grid index i along any axis.
  double coordinate(std::size_t i) const noexcept {
    return -half_length + static_cast<double>(i) * spacing();
  }

  /// Per-axis indices of a flat index.
  std::array<std::size_t, 3> unflatten(std::size_t flat) const noexcept {
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      idx[a] = flat % n;
      flat /= n;
    }
    return idx;
  }

  std::size_t flatten(const std::array<std::size_t, 3>& idx) const noexcept {
    std::size_t flat = 0;
    for (int a = 0; a < dim; ++a) flat = flat * n + idx[a];
    return flat;
  }

  std::array<double, 3> position(std::size_t flat) const noexcept {
    const auto idx = unflatten(flat);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) x[a] = coordinate(idx[a]);
    return x;
  }

  /// Index shift along one axis with wrap.
  std::size_t shifted(std::size_t flat, int axis, long long by) const noexcept {
    auto idx = unflatten(flat);
    const long long nn = static_cast<long long>(n);
    idx[axis] = static_cast<std::size_t>(((static_cast<long long>(idx[axis]) + by) % nn + nn) % nn);
    return flatten(idx);
  }

  bool operator==(const GridSpec& o) const noexcept {
    return dim == o.dim && n == o.n && half_length == o.half_length;
  }
  bool operator!=(const GridSpec& o) const noexcept { return !(*this == o); }
};

/// Fourier data for a grid: k_m = pi m / L in FFT order.
struct WaveVectors {
  std::vector<double> k;       // per-axis wave numbers; index n/2 holds m = -n/2
  std::vector<double> k_odd;   // same with the Nyquist entry zeroed (first derivatives)
  std::vector<double> k2;      // |k|^2 per flat index, full symbol
};

inline std::vector<double> axis_wave_numbers(const GridSpec& g) {
  std::vector<double> k(g.n);
  const long long n = static_cast<long long>(g.n);
  for (long long i = 0; i < n; ++i) {
    const long long m = i < n / 2 ? i : i - n;
    k[static_cast<std::size_t>(i)] = std::numbers::pi * static_cast<double>(m) / g.half_length;
  }
  return k;
}

inline std::shared_ptr<const WaveVectors> wave_vectors(const GridSpec& g) {
  static std::mutex mutex;
  static std::map<std::tuple<int, std::size_t, double>, std::shared_ptr<const WaveVectors>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_tuple(g.dim, g.n, g.half_length);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto w = std::make_shared<WaveVectors>();
  w->k = axis_wave_numbers(g);
  w->k_odd = w->k;
  w->k_odd[g.n / 2] = 0.0;
  w->k2.resize(g.size());
  for (std::size_t f = 0; f < g.size(); ++f) {
    const auto idx = g.unflatten(f);
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) s += w->k[idx[a]] * w->k[idx[a]];
    w->k2[f] = s;
  }
  cache.emplace(key, w);
  return w;
}

}  // namespace schx

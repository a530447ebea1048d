#pragma once

// Thin FFTW wrapper. Plans are FFTW_ESTIMATE (deterministic), in-place on an
// aligned per-thread scratch buffer, and cached per (d, n, sign).

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "schx/grid.hpp"

namespace schx {

using cplx = std::complex<double>;

namespace detail {

struct AlignedScratch {
  fftw_complex* data = nullptr;
  std::size_t capacity = 0;
  ~AlignedScratch() {
    if (data) fftw_free(data);
  }
  fftw_complex* get(std::size_t count) {
    if (count > capacity) {
      if (data) fftw_free(data);
      data = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
      if (!data) throw std::bad_alloc();
      capacity = count;
    }
    return data;
  }
};

inline AlignedScratch& scratch() {
  thread_local AlignedScratch s;
  return s;
}

inline fftw_plan plan_for(const GridSpec& g, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<int, std::size_t, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_tuple(g.dim, g.n, sign);
  if (auto it = plans.find(key); it != plans.end()) return it->second;
  std::vector<int> dims(static_cast<std::size_t>(g.dim), static_cast<int>(g.n));
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * g.size()));
  fftw_plan p = fftw_plan_dft(g.dim, dims.data(), buf, buf, sign, FFTW_ESTIMATE);
  fftw_free(buf);
  plans.emplace(key, p);
  return p;
}

}  // namespace detail

enum class FftSign { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

/// Unnormalized multidimensional DFT of data (length n^d), in place.
inline void dft_inplace(const GridSpec& g, std::vector<cplx>& data, FftSign sign) {
  if (data.size() != g.size()) throw ContractViolation("dft: data length does not match grid");
  fftw_plan p = detail::plan_for(g, static_cast<int>(sign));
  fftw_complex* buf = detail::scratch().get(data.size());
  std::memcpy(buf, data.data(), sizeof(cplx) * data.size());
  fftw_execute_dft(p, buf, buf);
  std::memcpy(static_cast<void*>(data.data()), buf, sizeof(cplx) * data.size());
}

}  // namespace schx

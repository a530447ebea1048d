#pragma once

// Binary field snapshot:
//   "SCHF" | u32 version | u32 d | u32 n | f64 L | u32 N | f64 time |
//   N * n^d complex values as (re, im) f64 pairs, row-major, little-endian.

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "schx/errors.hpp"
#include "schx/field.hpp"

namespace schx {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

inline constexpr std::uint32_t kSnapshotVersion = 1;

struct Snapshot {
  GridSpec grid;
  std::vector<SpectralField> fields;
  double time = 0.0;
};

namespace detail {
template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("snapshot: truncated file");
  return v;
}
}  // namespace detail

inline void write_snapshot(const std::string& path, const std::vector<SpectralField>& fields, double time) {
  if (fields.empty()) throw ContractViolation("snapshot: no fields");
  const GridSpec g = fields.front().grid;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("snapshot: cannot open " + path);
  os.write("SCHF", 4);
  detail::put<std::uint32_t>(os, kSnapshotVersion);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n));
  detail::put<double>(os, g.half_length);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(fields.size()));
  detail::put<double>(os, time);
  for (const auto& f : fields) {
    require_same_grid(f, fields.front());
    const SpectralField p = as_physical(f);
    os.write(reinterpret_cast<const char*>(p.values.data()),
             static_cast<std::streamsize>(sizeof(cplx) * p.values.size()));
  }
  if (!os) throw Error("snapshot: write failed for " + path);
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("snapshot: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "SCHF") throw Error("snapshot: bad magic in " + path);
  const auto version = detail::get<std::uint32_t>(is);
  if (version != kSnapshotVersion) throw Error("snapshot: unsupported version");
  Snapshot s;
  s.grid.dim = static_cast<int>(detail::get<std::uint32_t>(is));
  s.grid.n = detail::get<std::uint32_t>(is);
  s.grid.half_length = detail::get<double>(is);
  s.grid.validate();
  const auto count = detail::get<std::uint32_t>(is);
  s.time = detail::get<double>(is);
  for (std::uint32_t c = 0; c < count; ++c) {
    SpectralField f(s.grid);
    is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(sizeof(cplx) * f.size()));
    if (!is) throw Error("snapshot: truncated field data");
    s.fields.push_back(std::move(f));
  }
  return s;
}

}  // namespace schx

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"

namespace llglab {

/// Binary field snapshot.
///
/// Layout (little-endian): "LLGF", u32 version = 1, u32 dim, u32 N, f64 L,
/// u32 component_count, then N^dim * component_count f64 samples in
/// row-major point order with the components of one point adjacent.
struct Snapshot {
  int dim{};
  int points_per_axis{};
  double box_length{};
  int components{};
  std::vector<double> data;

  Grid grid() const { return make_grid(dim, points_per_axis, box_length); }
};

namespace detail {

template <class U>
void put_le(std::vector<unsigned char>& out, U value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(U)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.insert(out.end(), bits.begin(), bits.end());
}

template <class U>
U get_le(const unsigned char* p) {
  std::array<unsigned char, sizeof(U)> bits;
  std::memcpy(bits.data(), p, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<U>(bits);
}

inline constexpr std::size_t kSnapshotHeaderBytes = 4 + 4 + 4 + 4 + 8 + 4;

} // namespace detail

inline std::vector<unsigned char> encode_snapshot(const Grid& grid, int components, std::span<const double> data) {
  if (components < 1) throw SnapshotError("component count must be positive");
  if (data.size() != grid.size() * static_cast<std::size_t>(components))
    throw SnapshotError("snapshot payload size does not match grid and component count");
  std::vector<unsigned char> out;
  out.reserve(detail::kSnapshotHeaderBytes + 8 * data.size());
  for (char c : {'L', 'L', 'G', 'F'}) out.push_back(static_cast<unsigned char>(c));
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dim()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.points_per_axis()));
  detail::put_le<double>(out, grid.box_length());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(components));
  for (double v : data) detail::put_le<double>(out, v);
  return out;
}

inline Snapshot decode_snapshot(std::span<const unsigned char> bytes) {
  if (bytes.size() < detail::kSnapshotHeaderBytes) throw SnapshotError("snapshot truncated in header");
  if (std::memcmp(bytes.data(), "LLGF", 4) != 0) throw SnapshotError("bad snapshot magic");
  const unsigned char* p = bytes.data() + 4;
  const auto version = detail::get_le<std::uint32_t>(p);
  if (version != 1) throw SnapshotError("unsupported snapshot version " + std::to_string(version));
  Snapshot s;
  s.dim = static_cast<int>(detail::get_le<std::uint32_t>(p + 4));
  s.points_per_axis = static_cast<int>(detail::get_le<std::uint32_t>(p + 8));
  s.box_length = detail::get_le<double>(p + 12);
  s.components = static_cast<int>(detail::get_le<std::uint32_t>(p + 20));
  const Grid grid = s.grid();
  const std::size_t count = grid.size() * static_cast<std::size_t>(s.components);
  if (bytes.size() != detail::kSnapshotHeaderBytes + 8 * count) throw SnapshotError("snapshot payload size mismatch");
  s.data.resize(count);
  const unsigned char* q = bytes.data() + detail::kSnapshotHeaderBytes;
  for (std::size_t i = 0; i < count; ++i) s.data[i] = detail::get_le<double>(q + 8 * i);
  return s;
}

inline void write_snapshot(const std::filesystem::path& path, const Grid& grid, int components,
                           std::span<const double> data) {
  const auto bytes = encode_snapshot(grid, components, data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SnapshotError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SnapshotError("write failed for " + path.string());
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open snapshot " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

inline std::vector<double> interleave(const SpinField& m) {
  std::vector<double> d;
  d.reserve(3 * m.size());
  for (std::size_t i = 0; i < m.size(); ++i) d.insert(d.end(), m[i].begin(), m[i].end());
  return d;
}

/// Complex components are stored as (re, im) pairs, component-major within a point.
inline std::vector<double> interleave(const ComplexTuple& u) {
  if (u.empty()) throw SnapshotError("empty tuple");
  std::vector<double> d;
  d.reserve(2 * u.size() * u.front().size());
  for (std::size_t i = 0; i < u.front().size(); ++i)
    for (const auto& c : u) {
      d.push_back(c[i].real());
      d.push_back(c[i].imag());
    }
  return d;
}

inline void write_spin_snapshot(const std::filesystem::path& path, const SpinField& m) {
  write_snapshot(path, m.grid(), 3, interleave(m));
}

inline void write_tuple_snapshot(const std::filesystem::path& path, const ComplexTuple& u) {
  write_snapshot(path, u.front().grid(), 2 * static_cast<int>(u.size()), interleave(u));
}

inline SpinField spin_from_snapshot(const Snapshot& s) {
  if (s.components != 3) throw SnapshotError("spin snapshot needs 3 components");
  const Grid g = s.grid();
  VectorField v(g);
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = {s.data[3 * i], s.data[3 * i + 1], s.data[3 * i + 2]};
  try {
    return SpinField::from_unit_vectors(v);
  } catch (const InvalidArgument&) {
    return SpinField::project(std::move(v));
  }
}

inline ComplexTuple tuple_from_snapshot(const Snapshot& s) {
  if (s.components % 2 != 0) throw SnapshotError("complex tuple snapshot needs an even component count");
  const Grid g = s.grid();
  const auto n = static_cast<std::size_t>(s.components / 2);
  ComplexTuple u(n, ComplexField(g));
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t k = 0; k < n; ++k)
      u[k][i] = {s.data[static_cast<std::size_t>(s.components) * i + 2 * k],
                 s.data[static_cast<std::size_t>(s.components) * i + 2 * k + 1]};
  return u;
}

} // namespace llglab

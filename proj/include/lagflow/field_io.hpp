#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "lagflow/error.hpp"
#include "lagflow/field.hpp"

namespace lagflow::io {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

// Binary layout (all little-endian):
//   char[4]  magic "LGFD"
//   uint32   version (1)
//   uint32   d
//   uint32   n
//   float64  L
//   uint32   rank (0 scalar, 1 vector, 2 matrix)
//   uint32   component count
//   float64  values[components * n^d], component-outermost, row-major per component
inline constexpr char kMagic[4] = {'L', 'G', 'F', 'D'};
inline constexpr std::uint32_t kVersion = 1;

inline std::vector<std::string> component_names(const Field& f) {
  const int d = f.grid().d;
  std::vector<std::string> names;
  switch (f.rank()) {
    case Rank::scalar: names.push_back("f"); break;
    case Rank::vector:
      for (int i = 0; i < d; ++i) names.push_back("v" + std::to_string(i + 1));
      break;
    case Rank::matrix:
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) names.push_back("m" + std::to_string(i + 1) + std::to_string(j + 1));
      break;
  }
  return names;
}

inline void write_csv(const Field& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::io_error, "cannot open " + path.string());
  const GridSpec& g = f.grid();
  for (int a = 0; a < g.d; ++a) out << "x_" << (a + 1) << ',';
  const auto names = component_names(f);
  for (std::size_t c = 0; c < names.size(); ++c) out << names[c] << (c + 1 < names.size() ? "," : "\n");
  out << std::setprecision(17);
  for (std::size_t p = 0; p < g.points(); ++p) {
    const Point x = g.point(p);
    for (int a = 0; a < g.d; ++a) out << x[a] << ',';
    for (int c = 0; c < f.components(); ++c) out << f(c, p) << (c + 1 < f.components() ? "," : "\n");
  }
}

namespace detail {
template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(in), ErrorCode::io_error, "truncated field dump");
  return v;
}
}  // namespace detail

inline void write_binary(const Field& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::io_error, "cannot open " + path.string());
  out.write(kMagic, 4);
  detail::put<std::uint32_t>(out, kVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid().d));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid().n));
  detail::put<double>(out, f.grid().L);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.rank()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.components()));
  const auto v = f.values();
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  require(static_cast<bool>(out), ErrorCode::io_error, "write failed for " + path.string());
}

inline Field read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_artifact, "cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  require(static_cast<bool>(in) && std::memcmp(magic, kMagic, 4) == 0, ErrorCode::io_error,
          "bad field dump magic in " + path.string());
  const auto version = detail::get<std::uint32_t>(in);
  require(version == kVersion, ErrorCode::io_error, "unsupported field dump version");
  GridSpec g;
  g.d = static_cast<int>(detail::get<std::uint32_t>(in));
  g.n = static_cast<int>(detail::get<std::uint32_t>(in));
  g.L = detail::get<double>(in);
  const auto rank_code = detail::get<std::uint32_t>(in);
  const auto comps = detail::get<std::uint32_t>(in);
  require(rank_code <= 2, ErrorCode::io_error, "bad rank code");
  g.validate();
  const Rank rank = static_cast<Rank>(rank_code);
  require(static_cast<int>(comps) == component_count(rank, g.d), ErrorCode::io_error, "component count mismatch");
  std::vector<double> values(g.points() * comps);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  require(static_cast<bool>(in), ErrorCode::io_error, "truncated field dump " + path.string());
  return Field(g, rank, std::move(values));
}

}  // namespace lagflow::io

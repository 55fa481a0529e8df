#pragma once

// CSV and binary dumps of point sets. Binary layout: 8-byte magic
// "PSDATA01", uint64 d, uint64 n, then n*d little-endian doubles.

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "padsmooth/core.hpp"

namespace padsmooth {

inline constexpr char kBinaryMagic[8] = {'P', 'S', 'D', 'A', 'T', 'A', '0', '1'};

inline void write_points_csv(std::ostream& os, const std::vector<Point>& pts) {
  os.precision(17);
  for (const Point& p : pts) {
    for (std::size_t i = 0; i < p.dim(); ++i) os << (i ? "," : "") << p[i];
    os << '\n';
  }
}

inline void write_samples_csv(std::ostream& os,
                              const std::vector<LabeledSample>& samples) {
  os.precision(17);
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < s.x.dim(); ++i) os << s.x[i] << ',';
    os << to_int(s.y) << '\n';
  }
}

inline std::vector<Point> read_points_csv(std::istream& is) {
  std::vector<Point> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || !std::isfinite(v))
        throw Error("csv line " + std::to_string(lineno) + ": bad value '" +
                    cell + "'");
      row.push_back(v);
    }
    if (!out.empty() && row.size() != out[0].dim())
      throw DimensionMismatch("csv line " + std::to_string(lineno) +
                              ": ragged row");
    out.emplace_back(std::move(row));
  }
  return out;
}

/// Splits the trailing column off as a +-1 label.
inline std::vector<LabeledSample> read_samples_csv(std::istream& is) {
  std::vector<LabeledSample> out;
  for (Point& p : read_points_csv(is)) {
    if (p.dim() < 2) throw Error("labeled csv needs >= 2 columns");
    const double y = p[p.dim() - 1];
    if (y != 1.0 && y != -1.0) throw Error("label column must be +-1");
    std::vector<double> c(p.begin(), p.end() - 1);
    out.push_back({Point(std::move(c)), y > 0 ? Label::positive : Label::negative});
  }
  return out;
}

namespace detail {
inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error("binary: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}
}  // namespace detail

inline void write_points_binary(std::ostream& os, const std::vector<Point>& pts) {
  const std::uint64_t d = pts.empty() ? 0 : pts[0].dim();
  os.write(kBinaryMagic, 8);
  detail::put_u64(os, d);
  detail::put_u64(os, pts.size());
  for (const Point& p : pts)
    for (double v : p) detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline std::vector<Point> read_points_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kBinaryMagic, 8) != 0)
    throw Error("binary: bad magic");
  const std::uint64_t d = detail::get_u64(is);
  const std::uint64_t n = detail::get_u64(is);
  std::vector<Point> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Point p(d);
    for (std::uint64_t j = 0; j < d; ++j)
      p[j] = std::bit_cast<double>(detail::get_u64(is));
    if (!p.is_finite()) throw Error("binary: non-finite coordinate");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace padsmooth

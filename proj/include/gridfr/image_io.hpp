#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "gridfr/error.hpp"
#include "gridfr/numerics.hpp"
#include "gridfr/raster.hpp"
#include "gridfr/recon.hpp"

namespace gridfr {

/// Binary PGM (P5) of row-major intensities; values are mapped linearly from
/// [lo, hi] onto [0, maxval] and clamped. maxval 255 writes 8-bit, 65535 16-bit.
inline void write_pgm(std::ostream& os, const std::vector<double>& v, int rows, int cols, double lo, double hi,
                      int maxval = 255) {
  if (maxval != 255 && maxval != 65535) throw ParameterError("PGM maxval must be 255 or 65535");
  if (rows < 1 || cols < 1 || v.size() != static_cast<std::size_t>(rows) * cols)
    throw DimensionError("PGM data does not match its shape");
  os << "P5\n" << cols << ' ' << rows << '\n' << maxval << '\n';
  const double span = hi > lo ? hi - lo : 1.0;
  for (double x : v) {
    const double t = std::clamp((x - lo) / span, 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(t * maxval));
    if (maxval == 255) {
      os.put(static_cast<char>(q));
    } else {
      os.put(static_cast<char>(q >> 8));
      os.put(static_cast<char>(q & 0xff));
    }
  }
}

/// Magnitudes normalized to `peak` (the reference maximum); rows are the first axis.
inline void save_magnitude_pgm(const ImageGrid& img, double peak, const std::string& path, int maxval = 255) {
  std::vector<double> mag(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) mag[i] = std::abs(img.values[i]);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParameterError("cannot open '" + path + "' for writing");
  write_pgm(os, mag, img.shape[0], img.shape[1], 0.0, peak, maxval);
}

/// Log-error maps span [-16, 0].
inline void save_error_pgm(const ImageGrid& map, const std::string& path, int maxval = 255) {
  std::vector<double> v(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) v[i] = map.values[i].real();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParameterError("cannot open '" + path + "' for writing");
  write_pgm(os, v, map.shape[0], map.shape[1], -16.0, 0.0, maxval);
}

/// Matrix magnitudes on a log scale spanning the largest entry down 16 decades.
inline void save_matrix_pgm(const Matrix& a, const std::string& path, int maxval = 255) {
  std::vector<double> v(static_cast<std::size_t>(a.size()));
  double top = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double m = std::abs(a(i, j));
      top = std::max(top, m);
      v[static_cast<std::size_t>(i * a.cols() + j)] = m > 0 ? std::log10(m) : -300.0;
    }
  const double hi = top > 0 ? std::log10(top) : 0.0;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParameterError("cannot open '" + path + "' for writing");
  write_pgm(os, v, static_cast<int>(a.rows()), static_cast<int>(a.cols()), hi - 16.0, hi, maxval);
}

/// CSV with one line per grid point: i[,j],re,im.
inline void write_grid_csv(std::ostream& os, const ImageGrid& img) {
  os << "# gridfr-grid v1, dim=" << img.dim << ", shape=" << img.shape[0];
  if (img.dim == 2) os << 'x' << img.shape[1];
  os << ", method=" << (img.method.empty() ? "none" : img.method) << '\n';
  for (int i = 0; i < img.shape[0]; ++i)
    for (int j = 0; j < img.shape[1]; ++j) {
      const auto v = img.at(i, j);
      os << i;
      if (img.dim == 2) os << ',' << j;
      os << ',' << detail::format_double(v.real()) << ',' << detail::format_double(v.imag()) << '\n';
    }
}

inline ImageGrid read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty grid file", 1);
  ImageGrid img;
  bool have_shape = false;
  for (const auto& [k, v] : detail::parse_header(line, "gridfr-grid v1")) {
    if (k == "dim") {
      img.dim = static_cast<int>(detail::parse_u64(v, 1));
    } else if (k == "shape") {
      const auto parts = detail::split(v, 'x');
      img.shape = {static_cast<int>(detail::parse_u64(parts[0], 1)),
                   parts.size() > 1 ? static_cast<int>(detail::parse_u64(parts[1], 1)) : 1};
      have_shape = true;
    } else if (k == "method") {
      img.method = v == "none" ? "" : v;
    }
  }
  if (img.dim != 1 && img.dim != 2) throw ParseError("header needs dim=1 or dim=2", 1);
  if (!have_shape || img.shape[0] < 1 || img.shape[1] < 1) throw ParseError("header needs a shape", 1);
  const std::size_t n = static_cast<std::size_t>(img.shape[0]) * img.shape[1];
  img.values.assign(n, complex{});
  std::vector<bool> seen(n, false);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cols = detail::split(t, ',');
    if (static_cast<int>(cols.size()) != img.dim + 2)
      throw ParseError("expected " + std::to_string(img.dim + 2) + " columns", lineno);
    const auto i = detail::parse_u64(cols[0], lineno);
    const auto j = img.dim == 2 ? detail::parse_u64(cols[1], lineno) : 0;
    if (i >= static_cast<std::uint64_t>(img.shape[0]) || j >= static_cast<std::uint64_t>(img.shape[1]))
      throw ParseError("grid index out of range", lineno);
    const std::size_t k = i * img.shape[1] + j;
    img.values[k] = {detail::parse_double(cols[img.dim], lineno), detail::parse_double(cols[img.dim + 1], lineno)};
    seen[k] = true;
  }
  for (bool s : seen)
    if (!s) throw ParseError("grid file is missing points", lineno);
  return img;
}

inline ImageGrid load_grid_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParameterError("cannot open '" + path + "'");
  return read_grid_csv(is);
}

inline void save_grid_csv(const ImageGrid& img, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ParameterError("cannot open '" + path + "' for writing");
  write_grid_csv(os, img);
}

}  // namespace gridfr

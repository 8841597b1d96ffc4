#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridfr/error.hpp"
#include "gridfr/rng.hpp"

namespace gridfr {

/// A point in 1D or 2D wavenumber space; the second coordinate is 0 in 1D.
using Point = std::array<double, 2>;

enum class RasterKind { jittered_grid, asterisk, sas_wedge, custom };

inline std::string_view to_string(RasterKind k) {
  switch (k) {
    case RasterKind::jittered_grid: return "jittered_grid";
    case RasterKind::asterisk: return "asterisk";
    case RasterKind::sas_wedge: return "sas_wedge";
    case RasterKind::custom: return "custom";
  }
  return "custom";
}

inline RasterKind raster_kind_from_string(std::string_view s) {
  if (s == "jittered_grid") return RasterKind::jittered_grid;
  if (s == "asterisk") return RasterKind::asterisk;
  if (s == "sas_wedge") return RasterKind::sas_wedge;
  if (s == "custom") return RasterKind::custom;
  throw ParameterError("unknown raster kind '" + std::string(s) + "'");
}

/// Ordered set of non-uniform sample locations.
///
/// Grid-indexed rasters (jittered grids) carry per-axis extents N and store
/// points in row-major multi-index order: n1 = -N1..N1 outer, n2 inner.
struct Raster {
  int dim = 1;
  std::vector<Point> points;
  std::optional<std::array<int, 2>> extents;
  std::optional<std::uint64_t> seed;
  RasterKind kind = RasterKind::custom;

  std::size_t size() const noexcept { return points.size(); }

  /// Largest |coordinate| per axis.
  std::array<double, 2> max_abs() const noexcept {
    std::array<double, 2> m{0.0, 0.0};
    for (const auto& p : points)
      for (int a = 0; a < dim; ++a) m[a] = std::max(m[a], std::abs(p[a]));
    return m;
  }

  /// FNV-1a over dim and the exact point bits; identifies the raster a
  /// SampleSet or plan was built for.
  std::uint64_t id() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    };
    feed(static_cast<std::uint64_t>(dim));
    feed(points.size());
    for (const auto& p : points)
      for (int a = 0; a < dim; ++a) feed(std::bit_cast<std::uint64_t>(p[a]));
    return h;
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

/// True when two points lie within `tol` of each other (max-norm).
inline bool has_duplicates(const Raster& r, double tol = 1e-12) {
  std::vector<Point> pts = r.points;
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size() && pts[j][0] - pts[i][0] <= tol; ++j) {
      if (std::abs(pts[j][1] - pts[i][1]) <= tol) return true;
    }
  }
  return false;
}

/// Integer grid |n_i| <= N_i with each coordinate displaced uniformly in
/// [-jitter, jitter]. One extent gives a 1D raster, two give 2D.
inline Raster jittered_grid(std::span<const int> extents, double jitter, std::uint64_t seed) {
  if (extents.empty() || extents.size() > 2)
    throw ParameterError("jittered_grid needs one or two extents");
  for (int n : extents)
    if (n < 1) throw ParameterError("jittered_grid extents must be >= 1");
  if (!(jitter >= 0.0 && jitter < 0.5))
    throw ParameterError("jitter must lie in [0, 1/2); larger values lose the frame guarantee");

  Raster r;
  r.dim = static_cast<int>(extents.size());
  r.kind = RasterKind::jittered_grid;
  r.seed = seed;
  r.extents = std::array<int, 2>{extents[0], r.dim == 2 ? extents[1] : 0};
  CounterRng rng(seed);
  const int n1 = extents[0];
  const int n2 = r.dim == 2 ? extents[1] : 0;
  r.points.reserve(static_cast<std::size_t>(2 * n1 + 1) * (2 * n2 + 1));
  for (int i = -n1; i <= n1; ++i) {
    for (int j = -n2; j <= n2; ++j) {
      Point p{double(i), 0.0};
      p[0] += rng.uniform(-jitter, jitter);
      if (r.dim == 2) p[1] = double(j) + rng.uniform(-jitter, jitter);
      r.points.push_back(p);
    }
  }
  return r;
}

inline Raster jittered_grid(std::initializer_list<int> extents, double jitter, std::uint64_t seed) {
  return jittered_grid(std::span<const int>(extents.begin(), extents.size()), jitter, seed);
}

/// S spokes through the origin at angles pi s / S, J samples per half-spoke at
/// radii jR/J, plus the origin: 2SJ+1 points. Order: origin, then spoke by
/// spoke with radius increasing from -R to R.
inline Raster asterisk(int spokes, int radial_count, double max_radius) {
  if (spokes < 2) throw ParameterError("asterisk needs at least 2 spokes");
  if (radial_count < 1) throw ParameterError("asterisk radial_count must be >= 1");
  if (!(max_radius > 0.0)) throw ParameterError("asterisk max_radius must be > 0");
  Raster r;
  r.dim = 2;
  r.kind = RasterKind::asterisk;
  r.points.reserve(2 * static_cast<std::size_t>(spokes) * radial_count + 1);
  r.points.push_back({0.0, 0.0});
  for (int s = 0; s < spokes; ++s) {
    const double theta = std::numbers::pi * s / spokes;
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    for (int j = -radial_count; j <= radial_count; ++j) {
      if (j == 0) continue;
      const double rad = j * max_radius / radial_count;
      r.points.push_back({rad * c, rad * sn});
    }
  }
  return r;
}

namespace detail {
inline std::vector<double> uniform_grid(double lo, double hi, int count, double single) {
  std::vector<double> v(static_cast<std::size_t>(count));
  if (count == 1) {
    v[0] = single;
    return v;
  }
  for (int i = 0; i < count; ++i) v[i] = lo + (hi - lo) * i / (count - 1);
  return v;
}
}  // namespace detail

/// Side-scan wavenumber coverage: for range wavenumber k on a uniform grid over
/// [k_min, k_max] and along-track k_u on a uniform grid over [-ku_max, ku_max],
/// emit (k_u, sqrt(4k^2 - k_u^2)). A single-count grid uses k_min (resp. 0).
inline Raster sas_wedge(double k_min, double k_max, int k_count, double ku_max, int ku_count) {
  if (!(k_min > 0.0)) throw ParameterError("sas_wedge needs k_min > 0");
  if (k_count < 1 || ku_count < 1) throw ParameterError("sas_wedge counts must be >= 1");
  if (k_count > 1 && !(k_max > k_min)) throw ParameterError("sas_wedge needs k_min < k_max");
  if (!(ku_max >= 0.0)) throw ParameterError("sas_wedge needs ku_max >= 0");
  if (!(ku_max < 2.0 * k_min))
    throw ParameterError("sas_wedge needs ku_max < 2 k_min (k_y would be imaginary)");
  Raster r;
  r.dim = 2;
  r.kind = RasterKind::sas_wedge;
  const auto ks = detail::uniform_grid(k_min, k_max, k_count, k_min);
  const auto kus = detail::uniform_grid(-ku_max, ku_max, ku_count, 0.0);
  r.points.reserve(ks.size() * kus.size());
  for (double k : ks)
    for (double ku : kus) r.points.push_back({ku, std::sqrt(4.0 * k * k - ku * ku)});
  return r;
}

/// Affine per-axis map x -> scale * x + offset.
struct AffineMap {
  std::array<double, 2> scale{1.0, 1.0};
  std::array<double, 2> offset{0.0, 0.0};

  Point apply(const Point& p) const noexcept {
    return {scale[0] * p[0] + offset[0], scale[1] * p[1] + offset[1]};
  }

  friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

/// Maps the bounding box of `r` affinely onto [-box_i, box_i] per axis.
/// A degenerate axis is only translated to 0.
inline std::pair<Raster, AffineMap> rescale_to_box(const Raster& r, std::array<int, 2> box) {
  if (r.points.empty()) throw ParameterError("cannot rescale an empty raster");
  AffineMap map;
  for (int a = 0; a < r.dim; ++a) {
    if (box[a] < 1) throw ParameterError("rescale box half-extents must be >= 1");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : r.points) {
      lo = std::min(lo, p[a]);
      hi = std::max(hi, p[a]);
    }
    if (hi - lo > 0.0) {
      map.scale[a] = 2.0 * box[a] / (hi - lo);
      map.offset[a] = -box[a] - map.scale[a] * lo;
    } else {
      map.scale[a] = 1.0;
      map.offset[a] = -lo;
    }
  }
  Raster out = r;
  for (auto& p : out.points) {
    p = map.apply(p);
    if (r.dim == 1) p[1] = 0.0;
  }
  return {out, map};
}

// ---------------------------------------------------------------------------
// Raster CSV
//
//   # gridfr-raster v1, dim=<d>, kind=<k>, seed=<s|none>[, extents=<N1>[x<N2>]]
//   kx[,ky]
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || s.empty())
    throw ParseError("cannot parse number '" + s + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + s + "'", line);
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("cannot parse integer '" + s + "'", line);
  return v;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Parses "# <magic>, key=value, ..." into key/value pairs.
inline std::vector<std::pair<std::string, std::string>> parse_header(const std::string& line,
                                                                     std::string_view magic) {
  if (line.rfind("#", 0) != 0) throw ParseError("missing header line", 1);
  const auto fields = split(std::string_view(line).substr(1), ',');
  if (fields.empty() || fields[0] != magic)
    throw ParseError("expected header '# " + std::string(magic) + "'", 1);
  std::vector<std::pair<std::string, std::string>> kv;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string::npos) throw ParseError("malformed header field '" + fields[i] + "'", 1);
    kv.emplace_back(trim(std::string_view(fields[i]).substr(0, eq)),
                    trim(std::string_view(fields[i]).substr(eq + 1)));
  }
  return kv;
}

}  // namespace detail

inline void write_raster(std::ostream& os, const Raster& r) {
  os << "# gridfr-raster v1, dim=" << r.dim << ", kind=" << to_string(r.kind) << ", seed=";
  if (r.seed)
    os << *r.seed;
  else
    os << "none";
  if (r.extents) {
    os << ", extents=" << (*r.extents)[0];
    if (r.dim == 2) os << 'x' << (*r.extents)[1];
  }
  os << '\n';
  for (const auto& p : r.points) {
    os << detail::format_double(p[0]);
    if (r.dim == 2) os << ',' << detail::format_double(p[1]);
    os << '\n';
  }
}

/// Reads a raster CSV. `expected_dim` of 1 or 2 rejects files of the other dimension.
inline Raster read_raster(std::istream& is, int expected_dim = 0) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty raster file", 1);
  Raster r;
  bool have_dim = false;
  for (const auto& [k, v] : detail::parse_header(line, "gridfr-raster v1")) {
    if (k == "dim") {
      r.dim = static_cast<int>(detail::parse_u64(v, 1));
      have_dim = true;
    } else if (k == "kind") {
      try {
        r.kind = raster_kind_from_string(v);
      } catch (const ParameterError& e) {
        throw ParseError(e.what(), 1);
      }
    } else if (k == "seed") {
      if (v != "none") r.seed = detail::parse_u64(v, 1);
    } else if (k == "extents") {
      const auto parts = detail::split(v, 'x');
      std::array<int, 2> ext{0, 0};
      for (std::size_t i = 0; i < parts.size() && i < 2; ++i)
        ext[i] = static_cast<int>(detail::parse_u64(parts[i], 1));
      r.extents = ext;
    }
  }
  if (!have_dim || (r.dim != 1 && r.dim != 2)) throw ParseError("header needs dim=1 or dim=2", 1);
  if (expected_dim != 0 && expected_dim != r.dim)
    throw DimensionError("raster has dim=" + std::to_string(r.dim) + ", expected dim=" +
                         std::to_string(expected_dim));
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cols = detail::split(t, ',');
    if (static_cast<int>(cols.size()) != r.dim)
      throw ParseError("expected " + std::to_string(r.dim) + " columns", lineno);
    Point p{0.0, 0.0};
    for (int a = 0; a < r.dim; ++a) p[a] = detail::parse_double(cols[a], lineno);
    r.points.push_back(p);
  }
  return r;
}

inline void save_raster(const Raster& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ParameterError("cannot open '" + path + "' for writing");
  write_raster(os, r);
}

inline Raster load_raster(const std::string& path, int expected_dim = 0) {
  std::ifstream is(path);
  if (!is) throw ParameterError("cannot open '" + path + "'");
  return read_raster(is, expected_dim);
}

}  // namespace gridfr

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gridfr/error.hpp"
#include "gridfr/quadrature.hpp"
#include "gridfr/raster.hpp"
#include "gridfr/rng.hpp"
#include "gridfr/window.hpp"

namespace gridfr {

enum class SceneKind { sine_product, trig_poly, grid_image };

/// One term c * exp(2 pi i <k, x>) of a trigonometric polynomial.
struct TrigTerm {
  std::array<int, 2> freq{0, 0};
  complex coef{0.0, 0.0};
};

/// A function on [0,1]^d whose Fourier data are sampled.
///
/// sine_product is sin(4 pi x1) sin(2 pi x2) in 2D and sin(4 pi x) in 1D.
/// grid_image is piecewise constant on a G1 x G2 pixel grid (row-major).
struct Scene {
  SceneKind kind = SceneKind::sine_product;
  int dim = 2;
  std::vector<TrigTerm> terms;
  std::array<int, 2> shape{0, 0};
  std::vector<complex> pixels;

  static Scene sine_product(int dim = 2) {
    if (dim != 1 && dim != 2) throw ParameterError("scene dim must be 1 or 2");
    Scene s;
    s.kind = SceneKind::sine_product;
    s.dim = dim;
    return s;
  }

  static Scene trig_poly(int dim, std::vector<TrigTerm> terms) {
    if (dim != 1 && dim != 2) throw ParameterError("scene dim must be 1 or 2");
    for (const auto& t : terms)
      if (!std::isfinite(t.coef.real()) || !std::isfinite(t.coef.imag()))
        throw ParameterError("trig_poly coefficients must be finite");
    Scene s;
    s.kind = SceneKind::trig_poly;
    s.dim = dim;
    s.terms = std::move(terms);
    return s;
  }

  static Scene grid_image(int dim, std::array<int, 2> shape, std::vector<complex> pixels) {
    if (dim != 1 && dim != 2) throw ParameterError("scene dim must be 1 or 2");
    if (dim == 1) shape[1] = 1;
    if (shape[0] < 1 || shape[1] < 1 ||
        pixels.size() != static_cast<std::size_t>(shape[0]) * shape[1])
      throw DimensionError("grid_image pixel count does not match its shape");
    for (const auto& p : pixels)
      if (!std::isfinite(p.real()) || !std::isfinite(p.imag()))
        throw ParameterError("grid_image values must be finite");
    Scene s;
    s.kind = SceneKind::grid_image;
    s.dim = dim;
    s.shape = shape;
    s.pixels = std::move(pixels);
    return s;
  }

  complex eval(const Point& x) const {
    const double pi = std::numbers::pi;
    switch (kind) {
      case SceneKind::sine_product:
        return dim == 1 ? std::sin(4 * pi * x[0]) : std::sin(4 * pi * x[0]) * std::sin(2 * pi * x[1]);
      case SceneKind::trig_poly: {
        complex v{0.0, 0.0};
        for (const auto& t : terms) {
          double phase = t.freq[0] * x[0];
          if (dim == 2) phase += t.freq[1] * x[1];
          v += t.coef * std::polar(1.0, 2 * pi * phase);
        }
        return v;
      }
      case SceneKind::grid_image: {
        auto cell = [](double u, int n) {
          return std::clamp(static_cast<int>(std::floor(u * n)), 0, n - 1);
        };
        const int i = cell(x[0], shape[0]);
        const int j = dim == 2 ? cell(x[1], shape[1]) : 0;
        return pixels[static_cast<std::size_t>(i) * shape[1] + j];
      }
    }
    return {};
  }

  /// Highest integer frequency present (pixel Nyquist for grid images).
  int bandwidth() const noexcept {
    switch (kind) {
      case SceneKind::sine_product: return 2;
      case SceneKind::trig_poly: {
        int b = 0;
        for (const auto& t : terms) b = std::max({b, std::abs(t.freq[0]), std::abs(t.freq[1])});
        return b;
      }
      case SceneKind::grid_image: return std::max(shape[0], shape[1]) / 2;
    }
    return 0;
  }
};

enum class Provenance { analytic, quadrature, file };

/// Fourier data fhat(lambda_n), one value per raster point in raster order.
struct SampleSet {
  std::uint64_t raster_id = 0;
  std::vector<complex> values;
  Provenance provenance = Provenance::analytic;
  std::optional<std::uint64_t> noise_seed;
  bool under_resolved = false;

  std::size_t size() const noexcept { return values.size(); }
};

/// E(theta) = int_0^1 exp(i theta x) dx, evaluated without cancellation near 0.
inline complex exp_integral(double theta) {
  if (theta == 0.0) return {1.0, 0.0};
  const double s = std::sin(0.5 * theta);
  return {std::sin(theta) / theta, 2.0 * s * s / theta};
}

/// int_0^1 sin(a pi x) exp(-2 pi i lambda x) dx, from sin = (e^{i..} - e^{-i..}) / 2i.
inline complex sine_coefficient(double lambda, double a) {
  const double pi = std::numbers::pi;
  const complex plus = exp_integral(pi * (a - 2.0 * lambda));
  const complex minus = exp_integral(-pi * (a + 2.0 * lambda));
  return (plus - minus) / complex(0.0, 2.0);
}

/// Closed-form Fourier data of sine_product and trig_poly scenes.
inline SampleSet analytic_coeffs(const Scene& scene, const Raster& raster) {
  if (scene.dim != raster.dim) throw DimensionError("scene and raster dimensions differ");
  if (scene.kind == SceneKind::grid_image)
    throw ParameterError("analytic coefficients unsupported for grid_image; use quadrature_coeffs");
  SampleSet s;
  s.raster_id = raster.id();
  s.provenance = Provenance::analytic;
  s.values.reserve(raster.size());
  const double pi = std::numbers::pi;
  for (const auto& p : raster.points) {
    if (scene.kind == SceneKind::sine_product) {
      complex v = sine_coefficient(p[0], 4.0);
      if (scene.dim == 2) v *= sine_coefficient(p[1], 2.0);
      s.values.push_back(v);
    } else {
      complex v{0.0, 0.0};
      for (const auto& t : scene.terms) {
        complex term = t.coef * exp_integral(2 * pi * (t.freq[0] - p[0]));
        if (scene.dim == 2) term *= exp_integral(2 * pi * (t.freq[1] - p[1]));
        v += term;
      }
      s.values.push_back(v);
    }
  }
  return s;
}

/// Brute-force tensor Gauss-Legendre quadrature of int f(x) exp(-2 pi i <lambda,x>) dx.
/// Flags the result under-resolved when nodes < 4 (max|lambda| + bandwidth).
inline SampleSet quadrature_coeffs(const Scene& scene, const Raster& raster, int nodes_per_axis) {
  if (scene.dim != raster.dim) throw DimensionError("scene and raster dimensions differ");
  if (nodes_per_axis < 1) throw ParameterError("nodes_per_axis must be >= 1");
  const auto rule = gauss_legendre(static_cast<std::size_t>(nodes_per_axis));
  const std::size_t n = rule.size();
  const auto lam = raster.max_abs();
  const double need = 4.0 * (std::max(lam[0], lam[1]) + scene.bandwidth());

  SampleSet s;
  s.raster_id = raster.id();
  s.provenance = Provenance::quadrature;
  s.under_resolved = nodes_per_axis < need;
  s.values.reserve(raster.size());
  const double pi = std::numbers::pi;

  if (scene.dim == 1) {
    std::vector<complex> fw(n);
    for (std::size_t i = 0; i < n; ++i) fw[i] = scene.eval({rule.nodes[i], 0.0}) * rule.weights[i];
    for (const auto& p : raster.points) {
      complex acc{0.0, 0.0};
      for (std::size_t i = 0; i < n; ++i) acc += fw[i] * std::polar(1.0, -2 * pi * p[0] * rule.nodes[i]);
      s.values.push_back(acc);
    }
    return s;
  }

  std::vector<complex> fw(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      fw[i * n + j] = scene.eval({rule.nodes[i], rule.nodes[j]}) * rule.weights[i] * rule.weights[j];
  std::vector<complex> e2(n);
  for (const auto& p : raster.points) {
    for (std::size_t j = 0; j < n; ++j) e2[j] = std::polar(1.0, -2 * pi * p[1] * rule.nodes[j]);
    complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      complex inner{0.0, 0.0};
      for (std::size_t j = 0; j < n; ++j) inner += fw[i * n + j] * e2[j];
      acc += inner * std::polar(1.0, -2 * pi * p[0] * rule.nodes[i]);
    }
    s.values.push_back(acc);
  }
  return s;
}

/// Adds circular complex Gaussian noise at the given SNR (dB); +inf returns a copy.
inline SampleSet add_noise(const SampleSet& s, double snr_db, std::uint64_t seed) {
  if (s.values.empty()) throw ParameterError("cannot add noise to an empty sample set");
  if (std::isinf(snr_db) && snr_db > 0) return s;
  if (std::isnan(snr_db)) throw ParameterError("snr must be a number or +inf");
  double power = 0.0;
  for (const auto& v : s.values) power += std::norm(v);
  power /= static_cast<double>(s.values.size());
  if (power == 0.0) throw ParameterError("signal power is zero; finite SNR is undefined");
  const double noise_power = power / std::pow(10.0, snr_db / 10.0);
  const double sd = std::sqrt(noise_power / 2.0);
  CounterRng rng(seed);
  SampleSet out = s;
  out.noise_seed = seed;
  for (auto& v : out.values) {
    const double re = rng.normal();
    const double im = rng.normal();
    v += complex(sd * re, sd * im);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sample CSV
//
//   # gridfr-samples v1, raster=<file>
//   kx[,ky],re,im
// ---------------------------------------------------------------------------

/// Parsed contents of a sample CSV, before binding to a raster.
struct SampleFile {
  std::string raster_file;
  int dim = 0;
  std::vector<Point> points;
  std::vector<complex> values;
};

inline void write_samples(std::ostream& os, const Raster& raster, const SampleSet& s,
                          const std::string& raster_file) {
  if (s.raster_id != raster.id() || s.size() != raster.size())
    throw DimensionError("sample set does not belong to this raster");
  os << "# gridfr-samples v1, raster=" << raster_file << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& p = raster.points[i];
    os << detail::format_double(p[0]);
    if (raster.dim == 2) os << ',' << detail::format_double(p[1]);
    os << ',' << detail::format_double(s.values[i].real()) << ','
       << detail::format_double(s.values[i].imag()) << '\n';
  }
}

inline SampleFile read_samples(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty samples file", 1);
  SampleFile f;
  for (const auto& [k, v] : detail::parse_header(line, "gridfr-samples v1"))
    if (k == "raster") f.raster_file = v;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cols = detail::split(t, ',');
    const int dim = static_cast<int>(cols.size()) - 2;
    if (dim != 1 && dim != 2) throw ParseError("expected 3 or 4 columns", lineno);
    if (f.dim == 0) f.dim = dim;
    if (dim != f.dim) throw ParseError("inconsistent column count", lineno);
    Point p{0.0, 0.0};
    for (int a = 0; a < dim; ++a) p[a] = detail::parse_double(cols[a], lineno);
    f.points.push_back(p);
    f.values.emplace_back(detail::parse_double(cols[dim], lineno),
                          detail::parse_double(cols[dim + 1], lineno));
  }
  return f;
}

/// Attaches parsed samples to `raster`, checking that the points coincide.
inline SampleSet bind_samples(const SampleFile& f, const Raster& raster, double tol = 1e-12) {
  if (f.dim != raster.dim) throw DimensionError("sample file and raster dimensions differ");
  if (f.points.size() != raster.size())
    throw DimensionError("sample file has " + std::to_string(f.points.size()) +
                         " rows, raster has " + std::to_string(raster.size()) + " points");
  for (std::size_t i = 0; i < f.points.size(); ++i)
    for (int a = 0; a < raster.dim; ++a)
      if (std::abs(f.points[i][a] - raster.points[i][a]) > tol * std::max(1.0, std::abs(raster.points[i][a])))
        throw DimensionError("sample point " + std::to_string(i) + " does not match the raster");
  SampleSet s;
  s.raster_id = raster.id();
  s.values = f.values;
  s.provenance = Provenance::file;
  return s;
}

inline void save_samples(const Raster& raster, const SampleSet& s, const std::string& path,
                         const std::string& raster_file) {
  std::ofstream os(path);
  if (!os) throw ParameterError("cannot open '" + path + "' for writing");
  write_samples(os, raster, s, raster_file);
}

inline SampleFile load_samples(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParameterError("cannot open '" + path + "'");
  return read_samples(is);
}

}  // namespace gridfr

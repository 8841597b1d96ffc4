#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstddef>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gridfr/error.hpp"
#include "gridfr/raster.hpp"

namespace gridfr {

using complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline double default_rtol(Eigen::Index rows, Eigen::Index cols) {
  return 1e-10 * static_cast<double>(std::max(rows, cols));
}

/// Moore-Penrose pseudo-inverse together with the SVD facts it was built from.
struct PseudoInverse {
  Matrix matrix;
  RealVector singular_values;  // of the input, descending
  Eigen::Index rank = 0;       // singular values kept
  double cutoff = 0.0;         // rtol * sigma_max

  /// 2-norm condition of the rank-truncated input (equal to that of `matrix`).
  double kappa() const {
    if (rank == 0) throw NumericalError("pseudo-inverse retained no singular values");
    return singular_values(0) / singular_values(rank - 1);
  }
  double smallest_retained() const { return rank == 0 ? 0.0 : singular_values(rank - 1); }
};

namespace detail {

inline void require_finite(const Matrix& a, const char* what) {
  if (a.size() == 0) throw DimensionError(std::string(what) + ": empty matrix");
  if (!a.allFinite()) throw DomainError(std::string(what) + ": non-finite entries");
}

}  // namespace detail

/// Singular values below rtol * sigma_max are treated as zero.
inline PseudoInverse pseudo_inverse_ex(const Matrix& a, double rtol) {
  detail::require_finite(a, "pseudo_inverse");
  if (!(rtol >= 0.0)) throw ParameterError("rtol must be >= 0");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  PseudoInverse out;
  out.singular_values = svd.singularValues();
  const double smax = out.singular_values.size() ? out.singular_values(0) : 0.0;
  out.cutoff = rtol * smax;
  Eigen::Index k = 0;
  while (k < out.singular_values.size() && out.singular_values(k) > out.cutoff &&
         out.singular_values(k) > 0.0)
    ++k;
  out.rank = k;
  const auto& u = svd.matrixU();
  const auto& v = svd.matrixV();
  RealVector inv = out.singular_values.head(k).cwiseInverse();
  out.matrix = v.leftCols(k) * inv.asDiagonal() * u.leftCols(k).adjoint();
  return out;
}

inline PseudoInverse pseudo_inverse_ex(const Matrix& a) {
  return pseudo_inverse_ex(a, default_rtol(a.rows(), a.cols()));
}

inline Matrix pseudo_inverse(const Matrix& a, double rtol) { return pseudo_inverse_ex(a, rtol).matrix; }
inline Matrix pseudo_inverse(const Matrix& a) { return pseudo_inverse_ex(a).matrix; }

/// Half-band r: entries with |i - j| <= r - 1 survive, total width 2r - 1.
struct BandSpec {
  int r = 1;

  explicit BandSpec(int half) : r(half) {
    if (half < 1) throw ParameterError("band half-width r must be >= 1");
  }
  int width() const noexcept { return 2 * r - 1; }
};

inline Matrix band_mask(const Matrix& a, BandSpec band) {
  if (a.rows() != a.cols())
    throw DimensionError("band_mask needs a square matrix, got " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  Matrix out = a;
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(i - j) > band.r - 1) out(i, j) = 0.0;
  return out;
}

/// Entries kept by a width-(2r-1) band of an order-n matrix, as a fraction of n^2.
inline double kept_fraction(long long n, int r) {
  if (n < 1) throw ParameterError("matrix order must be >= 1");
  if (r < 1) throw ParameterError("band half-width r must be >= 1");
  const long long rr = std::min<long long>(r, n);
  const long long kept = (2 * rr - 1) * n - rr * (rr - 1);
  return static_cast<double>(kept) / static_cast<double>(n * n);
}

struct Conditioning {
  double kappa = 0.0;
  double smallest_retained = 0.0;
  Eigen::Index rank = 0;
};

/// Largest over smallest retained singular value; "retained" uses the pinv threshold.
inline Conditioning condition_number_ex(const Matrix& a, double rtol) {
  detail::require_finite(a, "condition_number");
  Eigen::BDCSVD<Matrix> svd(a);
  const RealVector s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) throw NumericalError("condition number of an all-zero matrix");
  const double cutoff = rtol * s(0);
  Eigen::Index k = 0;
  while (k < s.size() && s(k) > cutoff && s(k) > 0.0) ++k;
  return {s(0) / s(k - 1), s(k - 1), k};
}

inline Conditioning condition_number_ex(const Matrix& a) {
  return condition_number_ex(a, default_rtol(a.rows(), a.cols()));
}

inline double condition_number(const Matrix& a) { return condition_number_ex(a).kappa; }

/// End treatment of 1D density weights. full_gap gives unit weights on uniform
/// rasters; half_gap is the plain trapezoid (ends get half their gap).
enum class EndRule { full_gap, half_gap };

namespace detail {

/// alpha_i = (x_{i+1} - x_{i-1}) / 2 over sorted order, reported in input order.
inline std::vector<double> spacing_weights(const std::vector<double>& x, EndRule ends) {
  const std::size_t n = x.size();
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  for (std::size_t k = 1; k + 1 < n; ++k) w[idx[k]] = 0.5 * (x[idx[k + 1]] - x[idx[k - 1]]);
  const double lo = x[idx[1]] - x[idx[0]];
  const double hi = x[idx[n - 1]] - x[idx[n - 2]];
  const double f = ends == EndRule::full_gap ? 1.0 : 0.5;
  w[idx[0]] = f * lo;
  w[idx[n - 1]] = f * hi;
  return w;
}

inline bool is_grid_indexed(const Raster& r) {
  if (r.dim != 2 || !r.extents) return false;
  const auto [n1, n2] = *r.extents;
  return r.size() == static_cast<std::size_t>(2 * n1 + 1) * (2 * n2 + 1);
}

}  // namespace detail

/// Quadrature weights alpha_n for the CG estimator.
///
/// 1D: spacing weights on the sorted raster. 2D grid-indexed (row-major
/// (2N1+1) x (2N2+1)): product of the 1D weights along each grid line.
/// 2D unstructured: 1 / (number of points whose rounded position shares the
/// integer cell), i.e. each unit cell's area is split among its points.
inline std::vector<double> density_weights(const Raster& r, EndRule ends = EndRule::full_gap) {
  if (r.size() == 0) throw ParameterError("density_weights needs a nonempty raster");
  if (r.dim == 1) {
    std::vector<double> x(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) x[i] = r.points[i][0];
    return detail::spacing_weights(x, ends);
  }
  if (detail::is_grid_indexed(r)) {
    const auto [n1, n2] = *r.extents;
    const std::size_t c1 = 2 * n1 + 1;
    const std::size_t c2 = 2 * n2 + 1;
    std::vector<double> w(r.size(), 1.0);
    std::vector<double> line;
    for (std::size_t j = 0; j < c2; ++j) {
      line.clear();
      for (std::size_t i = 0; i < c1; ++i) line.push_back(r.points[i * c2 + j][0]);
      const auto a = detail::spacing_weights(line, ends);
      for (std::size_t i = 0; i < c1; ++i) w[i * c2 + j] *= a[i];
    }
    for (std::size_t i = 0; i < c1; ++i) {
      line.clear();
      for (std::size_t j = 0; j < c2; ++j) line.push_back(r.points[i * c2 + j][1]);
      const auto a = detail::spacing_weights(line, ends);
      for (std::size_t j = 0; j < c2; ++j) w[i * c2 + j] *= a[j];
    }
    return w;
  }
  std::map<std::pair<long long, long long>, int> count;
  auto cell = [](const Point& p) {
    return std::pair<long long, long long>{std::llround(p[0]), std::llround(p[1])};
  };
  for (const auto& p : r.points) ++count[cell(p)];
  std::vector<double> w;
  w.reserve(r.size());
  for (const auto& p : r.points) w.push_back(1.0 / count[cell(p)]);
  return w;
}

/// One CSV row per matrix row, entries |a_ij| with `digits` significant digits.
inline void write_magnitude_csv(std::ostream& os, const Matrix& a, int digits = 8) {
  char buf[32];
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) os << ',';
      std::snprintf(buf, sizeof buf, "%.*g", digits, std::abs(a(i, j)));
      os << buf;
    }
    os << '\n';
  }
}

inline void save_magnitude_csv(const Matrix& a, const std::string& path, int digits = 8) {
  std::ofstream os(path);
  if (!os) throw ParameterError("cannot open '" + path + "' for writing");
  write_magnitude_csv(os, a, digits);
}

}  // namespace gridfr

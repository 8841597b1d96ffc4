#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gridfr/error.hpp"
#include "gridfr/recon.hpp"

namespace gridfr {

struct Psnr {
  double db = 0.0;
  bool infinite = false;
};

namespace detail {

inline void check_same_grid(const ImageGrid& a, const ImageGrid& b) {
  if (a.dim != b.dim || a.shape != b.shape || a.values.size() != b.values.size())
    throw DimensionError("images are on different grids");
  if (a.values.empty()) throw DimensionError("image is empty");
}

inline Psnr psnr_from(double peak, double sum_sq, std::size_t n) {
  if (sum_sq == 0.0) return {std::numeric_limits<double>::infinity(), true};
  if (peak == 0.0) throw NumericalError("reference image is identically zero; PSNR undefined");
  return {20.0 * std::log10(peak / std::sqrt(sum_sq / static_cast<double>(n))), false};
}

}  // namespace detail

/// 20 log10(peak / sqrt(MSE)) on magnitude differences, peak = max |reference|.
inline Psnr psnr(const ImageGrid& recon, const ImageGrid& ref) {
  detail::check_same_grid(recon, ref);
  double peak = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double r = std::abs(ref.values[i]);
    const double e = std::abs(recon.values[i]) - r;
    peak = std::max(peak, r);
    ss += e * e;
  }
  return detail::psnr_from(peak, ss, ref.size());
}

/// As psnr, but on the complex difference (phase errors count).
inline Psnr psnr_complex(const ImageGrid& recon, const ImageGrid& ref) {
  detail::check_same_grid(recon, ref);
  double peak = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    peak = std::max(peak, std::abs(ref.values[i]));
    ss += std::norm(recon.values[i] - ref.values[i]);
  }
  return detail::psnr_from(peak, ss, ref.size());
}

/// ||recon - ref||_2 / ||ref||_2 over the grid.
inline double l2_rel(const ImageGrid& recon, const ImageGrid& ref) {
  detail::check_same_grid(recon, ref);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += std::norm(recon.values[i] - ref.values[i]);
    den += std::norm(ref.values[i]);
  }
  if (den == 0.0) throw NumericalError("reference image is identically zero; relative error undefined");
  return std::sqrt(num / den);
}

inline double linf(const ImageGrid& recon, const ImageGrid& ref) {
  detail::check_same_grid(recon, ref);
  double m = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) m = std::max(m, std::abs(recon.values[i] - ref.values[i]));
  return m;
}

/// Pointwise log10 |recon - ref|, floored at -16; stored in the real part.
inline ImageGrid error_map(const ImageGrid& recon, const ImageGrid& ref) {
  detail::check_same_grid(recon, ref);
  ImageGrid out;
  out.dim = ref.dim;
  out.shape = ref.shape;
  out.method = recon.method + "-log10err";
  out.raster_id = recon.raster_id;
  out.values.reserve(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double e = std::abs(recon.values[i] - ref.values[i]);
    out.values.emplace_back(e > 0.0 ? std::max(-16.0, std::log10(e)) : -16.0, 0.0);
  }
  return out;
}

}  // namespace gridfr

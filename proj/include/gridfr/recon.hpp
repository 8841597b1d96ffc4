#pragma once

#include <unsupported/Eigen/FFT>

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridfr/error.hpp"
#include "gridfr/numerics.hpp"
#include "gridfr/quadrature.hpp"
#include "gridfr/raster.hpp"
#include "gridfr/sampling.hpp"
#include "gridfr/window.hpp"

namespace gridfr {

enum class Method { cg, frame, ftcg };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::cg: return "cg";
    case Method::frame: return "frame";
    case Method::ftcg: return "ftcg";
  }
  return "cg";
}

inline Method method_from_string(std::string_view s) {
  if (s == "cg") return Method::cg;
  if (s == "frame") return Method::frame;
  if (s == "ftcg") return Method::ftcg;
  throw ParameterError("unknown method '" + std::string(s) + "' (expected cg, frame or ftcg)");
}

/// Output modes m in [-M1, M1] x [-M2, M2], flattened row-major over (m1, m2).
struct ModeExtents {
  int dim = 1;
  std::array<int, 2> m{0, 0};

  ModeExtents() = default;
  ModeExtents(int d, std::array<int, 2> ext) : dim(d), m(ext) {
    if (d != 1 && d != 2) throw ParameterError("mode extents dim must be 1 or 2");
    if (d == 1) m[1] = 0;
    if (m[0] < 0 || m[1] < 0) throw ParameterError("mode extents must be >= 0");
  }
  static ModeExtents one(int m1) { return ModeExtents(1, {m1, 0}); }
  static ModeExtents two(int m1, int m2) { return ModeExtents(2, {m1, m2}); }

  int axis_count(int a) const noexcept { return 2 * m[a] + 1; }
  Eigen::Index count() const noexcept {
    return static_cast<Eigen::Index>(axis_count(0)) * (dim == 2 ? axis_count(1) : 1);
  }
  int max_extent() const noexcept { return std::max(m[0], m[1]); }

  friend bool operator==(const ModeExtents&, const ModeExtents&) = default;
};

/// M = N per axis for grid-indexed rasters, otherwise ceil(max |lambda|) per axis.
inline ModeExtents default_modes(const Raster& r) {
  if (r.extents && r.kind == RasterKind::jittered_grid) return ModeExtents(r.dim, *r.extents);
  const auto lam = r.max_abs();
  return ModeExtents(r.dim, {static_cast<int>(std::ceil(lam[0] - 1e-9)),
                             static_cast<int>(std::ceil(lam[1] - 1e-9))});
}

/// Band heuristic r = ceil(ln(2N + 1)).
inline int default_band(int n) {
  if (n < 0) throw ParameterError("N must be >= 0");
  return std::max(1, static_cast<int>(std::ceil(std::log(2.0 * n + 1.0))));
}

/// Gauss-Legendre order for Psi entries: 8 (M + max |lambda|).
inline int default_quad_nodes(const Raster& r, const ModeExtents& modes) {
  const auto lam = r.max_abs();
  return std::max(16, static_cast<int>(std::ceil(8.0 * (modes.max_extent() + std::max(lam[0], lam[1])))));
}

namespace detail {

inline void check_dims(const Raster& r, const ModeExtents& modes) {
  if (r.size() == 0) throw ParameterError("raster is empty");
  if (r.dim != modes.dim) throw DimensionError("raster and mode extents dimensions differ");
}

/// Per-axis Omega factor: (2M+1) x P, what(m - lambda_n), zero beyond radius K.
template <Window W>
Matrix omega_axis(const Raster& r, int axis, int m_ext, const W& w) {
  const Eigen::Index p = static_cast<Eigen::Index>(r.size());
  Matrix o = Matrix::Zero(2 * m_ext + 1, p);
  const double k = w.radius();
  for (Eigen::Index n = 0; n < p; ++n) {
    const double lam = r.points[n][axis];
    for (int m = -m_ext; m <= m_ext; ++m) {
      const double d = m - lam;
      if (std::abs(d) <= k) o(m + m_ext, n) = w.spectrum(d);
    }
  }
  return o;
}

/// Per-axis Psi factor: P x (2M+1), vhat(lambda_n - m) with
/// vhat(t) = int_0^1 exp(-2 pi i t x) / w(x) dx on the given rule.
template <Window W>
Matrix psi_axis(const Raster& r, int axis, int m_ext, const W& w, const QuadratureRule& rule) {
  const Eigen::Index p = static_cast<Eigen::Index>(r.size());
  const Eigen::Index q = static_cast<Eigen::Index>(rule.size());
  const double tau = 2.0 * std::numbers::pi;
  Matrix el(p, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const double x = rule.nodes[k];
    const double g = rule.weights[k] / w.value(x);
    for (Eigen::Index n = 0; n < p; ++n) el(n, k) = std::polar(g, -tau * r.points[n][axis] * x);
  }
  Matrix em(q, 2 * m_ext + 1);
  for (Eigen::Index k = 0; k < q; ++k)
    for (int m = -m_ext; m <= m_ext; ++m) em(k, m + m_ext) = std::polar(1.0, tau * m * rule.nodes[k]);
  return el * em;
}

/// Row-major tensor combination: out(n, (i,j)) = a(n,i) b(n,j) or, transposed, out((i,j), n).
inline Matrix rowwise_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      out.col(i * b.cols() + j) = a.col(i).cwiseProduct(b.col(j));
  return out;
}

inline Matrix colwise_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      out.row(i * b.rows() + j) = a.row(i).cwiseProduct(b.row(j));
  return out;
}

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace detail

/// Omega: modes x points, entry what(m - lambda_n) (per-axis product in 2D).
template <Window W>
Matrix build_omega(const Raster& r, const W& w, const ModeExtents& modes) {
  detail::check_dims(r, modes);
  Matrix o1 = detail::omega_axis(r, 0, modes.m[0], w);
  if (r.dim == 1) return o1;
  return detail::colwise_product(o1, detail::omega_axis(r, 1, modes.m[1], w));
}

struct PsiBuild {
  Matrix psi;
  int nodes = 0;
  double doubling_residual = 0.0;  // max |Psi(n) - Psi(2n)| / max |Psi(2n)|
};

/// Psi: points x modes, entry <phi_n, psi_m> = vhat(lambda_n - m) per axis.
/// The node count is checked by recomputing the per-axis factors with twice the nodes.
template <Window W>
PsiBuild build_psi_ex(const Raster& r, const W& w, const ModeExtents& modes, int quad_nodes) {
  detail::check_dims(r, modes);
  if (quad_nodes < 1) throw ParameterError("quad_nodes must be >= 1");
  const auto rule = gauss_legendre(static_cast<std::size_t>(quad_nodes));
  const auto rule2 = gauss_legendre(2 * static_cast<std::size_t>(quad_nodes));
  PsiBuild out;
  out.nodes = quad_nodes;
  std::array<Matrix, 2> f;
  for (int a = 0; a < r.dim; ++a) {
    f[a] = detail::psi_axis(r, a, modes.m[a], w, rule);
    const Matrix fine = detail::psi_axis(r, a, modes.m[a], w, rule2);
    const double scale = fine.cwiseAbs().maxCoeff();
    const double res = (f[a] - fine).cwiseAbs().maxCoeff() / (scale > 0 ? scale : 1.0);
    out.doubling_residual = std::max(out.doubling_residual, res);
  }
  out.psi = r.dim == 1 ? f[0] : detail::rowwise_product(f[0], f[1]);
  return out;
}

template <Window W>
Matrix build_psi(const Raster& r, const W& w, const ModeExtents& modes, int quad_nodes) {
  return build_psi_ex(r, w, modes, quad_nodes).psi;
}

/// Build facts recorded on every plan.
struct PlanInfo {
  std::optional<AffineMap> rescale;
  std::map<std::string, double> timings;  // seconds per phase
  int quad_nodes = 0;
  double psi_doubling_residual = 0.0;
  double rtol = 0.0;
  std::optional<Eigen::Index> rank_b;
  std::optional<Eigen::Index> rank_c;
  std::optional<double> kappa_psi;
  std::optional<double> kappa_masked_t;  // rank-truncated, shares the SVD used for C
  std::optional<double> kappa_c;         // from an independent SVD of C
  std::optional<double> kept_fraction;
  std::vector<std::string> warnings;
};

/// Immutable reconstruction operator for one raster, window and mode box.
template <Window W>
struct ReconPlan {
  Method method = Method::cg;
  std::uint64_t raster_id = 0;
  std::size_t raster_size = 0;
  int dim = 1;
  W window{};
  ModeExtents modes;
  std::optional<BandSpec> band;
  Matrix omega;        // modes x points (cg, ftcg)
  RealVector weights;  // D diagonal (cg)
  Matrix psi;          // points x modes (frame, ftcg)
  Matrix b;            // Psi^+ (frame)
  Matrix t;            // Psi Omega (ftcg)
  Matrix c;            // (T masked)^+ (ftcg)
  PlanInfo info;
};

namespace detail {

template <Window W>
ReconPlan<W> plan_skeleton(Method m, const Raster& r, const W& w, const ModeExtents& modes) {
  detail::check_dims(r, modes);
  ReconPlan<W> p;
  p.method = m;
  p.raster_id = r.id();
  p.raster_size = r.size();
  p.dim = r.dim;
  p.window = w;
  p.modes = modes;
  const auto lam = r.max_abs();
  for (int a = 0; a < r.dim; ++a)
    if (lam[a] > modes.m[a] + 1e-9)
      p.info.warnings.push_back("axis " + std::to_string(a) + ": max |lambda| = " + format_double(lam[a]) +
                                " exceeds M = " + std::to_string(modes.m[a]));
  return p;
}

template <Window W>
void attach_psi(ReconPlan<W>& p, const Raster& r, int quad_nodes, const PsiBuild* pre) {
  if (quad_nodes <= 0) quad_nodes = default_quad_nodes(r, p.modes);
  const auto t0 = Clock::now();
  PsiBuild built;
  if (pre) {
    if (pre->psi.rows() != static_cast<Eigen::Index>(r.size()) || pre->psi.cols() != p.modes.count())
      throw DimensionError("prebuilt Psi does not match the raster and mode box");
    built = *pre;
  } else {
    built = build_psi_ex(r, p.window, p.modes, quad_nodes);
  }
  p.info.timings["psi"] = seconds_since(t0);
  p.psi = std::move(built.psi);
  p.info.quad_nodes = built.nodes;
  p.info.psi_doubling_residual = built.doubling_residual;
  if (built.doubling_residual > 1e-8)
    p.info.warnings.push_back("Psi quadrature under-resolved: node-doubling residual " +
                              format_double(built.doubling_residual));
}

}  // namespace detail

template <Window W>
ReconPlan<W> build_cg_plan(const Raster& r, const W& w, const ModeExtents& modes) {
  auto p = detail::plan_skeleton(Method::cg, r, w, modes);
  const auto t0 = detail::Clock::now();
  p.omega = build_omega(r, w, modes);
  p.info.timings["omega"] = detail::seconds_since(t0);
  const auto d = density_weights(r);
  p.weights = Eigen::Map<const RealVector>(d.data(), static_cast<Eigen::Index>(d.size()));
  return p;
}

/// quad_nodes <= 0 and rtol < 0 select the defaults. `pre` reuses a Psi built
/// for the same raster, window and modes.
template <Window W>
ReconPlan<W> build_frame_plan(const Raster& r, const W& w, const ModeExtents& modes, int quad_nodes = 0,
                              double rtol = -1.0, const PsiBuild* pre = nullptr) {
  auto p = detail::plan_skeleton(Method::frame, r, w, modes);
  detail::attach_psi(p, r, quad_nodes, pre);
  p.info.rtol = rtol < 0 ? default_rtol(p.psi.rows(), p.psi.cols()) : rtol;
  const auto t0 = detail::Clock::now();
  auto pinv = pseudo_inverse_ex(p.psi, p.info.rtol);
  p.info.timings["pinv_psi"] = detail::seconds_since(t0);
  p.b = std::move(pinv.matrix);
  p.info.rank_b = pinv.rank;
  p.info.kappa_psi = pinv.kappa();
  if (pinv.rank < std::min(p.psi.rows(), p.psi.cols()))
    p.info.warnings.push_back("Psi pseudo-inverse truncated to rank " + std::to_string(pinv.rank) + " of " +
                              std::to_string(std::min(p.psi.rows(), p.psi.cols())));
  return p;
}

/// r <= 0 selects the full band.
template <Window W>
ReconPlan<W> build_ftcg_plan(const Raster& r, const W& w, const ModeExtents& modes, int band, int quad_nodes = 0,
                             double rtol = -1.0, const PsiBuild* pre = nullptr) {
  const auto order = static_cast<int>(r.size());
  if (band <= 0) band = order;
  if (band > order)
    throw ParameterError("band r = " + std::to_string(band) + " exceeds the order " + std::to_string(order) +
                         " of Psi Omega");
  auto p = detail::plan_skeleton(Method::ftcg, r, w, modes);
  p.band = BandSpec(band);
  auto t0 = detail::Clock::now();
  p.omega = build_omega(r, w, modes);
  p.info.timings["omega"] = detail::seconds_since(t0);
  detail::attach_psi(p, r, quad_nodes, pre);
  t0 = detail::Clock::now();
  p.t = p.psi * p.omega;
  const Matrix masked = band_mask(p.t, *p.band);
  p.info.timings["t"] = detail::seconds_since(t0);
  p.info.rtol = rtol < 0 ? default_rtol(masked.rows(), masked.cols()) : rtol;
  t0 = detail::Clock::now();
  auto pinv = pseudo_inverse_ex(masked, p.info.rtol);
  p.info.timings["pinv_t"] = detail::seconds_since(t0);
  p.c = std::move(pinv.matrix);
  p.info.rank_c = pinv.rank;
  p.info.kappa_masked_t = pinv.kappa();
  t0 = detail::Clock::now();
  p.info.kappa_c = condition_number_ex(p.c).kappa;
  p.info.timings["kappa_c"] = detail::seconds_since(t0);
  p.info.kept_fraction = kept_fraction(order, band);
  if (pinv.rank < order)
    p.info.warnings.push_back("banded T pseudo-inverse truncated to rank " + std::to_string(pinv.rank) + " of " +
                              std::to_string(order));
  return p;
}

/// gamma = Omega D fhat, beta = Psi^+ fhat, or tau = Omega C fhat.
template <Window W>
Vector coefficients(const ReconPlan<W>& p, const SampleSet& s) {
  if (s.raster_id != p.raster_id || s.size() != p.raster_size)
    throw DimensionError("samples were not taken on the plan's raster");
  const Vector f = Eigen::Map<const Vector>(s.values.data(), static_cast<Eigen::Index>(s.size()));
  switch (p.method) {
    case Method::cg: return p.omega * (p.weights.template cast<complex>().cwiseProduct(f));
    case Method::frame: return p.b * f;
    case Method::ftcg: return p.omega * (p.c * f);
  }
  return {};
}

/// Values on the uniform grid x_g = g / G over [0,1)^d, row-major (G1 x G2; G2 = 1 in 1D).
struct ImageGrid {
  int dim = 1;
  std::array<int, 2> shape{0, 1};
  std::vector<complex> values;
  std::string method;
  std::uint64_t raster_id = 0;

  std::size_t size() const noexcept { return values.size(); }
  complex at(int i, int j = 0) const { return values[static_cast<std::size_t>(i) * shape[1] + j]; }
};

/// Next power of two >= 4 (2M + 1).
inline int default_grid(int m) {
  int g = 1;
  while (g < 4 * (2 * m + 1)) g *= 2;
  return g;
}

/// sum_m c_m exp(2 pi i <m, x_g>) / w(x_g) by zero-padded unscaled inverse FFT.
template <Window W>
ImageGrid synthesize(const Vector& c, const ModeExtents& modes, const W& w, std::array<int, 2> grid) {
  if (c.size() != modes.count())
    throw DimensionError("coefficient count " + std::to_string(c.size()) + " does not match " +
                         std::to_string(modes.count()) + " modes");
  if (modes.dim == 1) grid[1] = 1;
  for (int a = 0; a < modes.dim; ++a)
    if (grid[a] < modes.axis_count(a))
      throw ParameterError("synthesis grid G = " + std::to_string(grid[a]) + " aliases " +
                           std::to_string(modes.axis_count(a)) + " modes (need G >= 2M+1)");
  const int g1 = grid[0];
  const int g2 = grid[1];
  const int n2 = modes.dim == 2 ? modes.axis_count(1) : 1;
  std::vector<complex> buf(static_cast<std::size_t>(g1) * g2, complex{});
  auto wrap = [](int m, int g) { return ((m % g) + g) % g; };
  for (int i = 0; i < modes.axis_count(0); ++i)
    for (int j = 0; j < n2; ++j) {
      const int m1 = i - modes.m[0];
      const int m2 = j - modes.m[1];
      buf[static_cast<std::size_t>(wrap(m1, g1)) * g2 + wrap(m2, g2)] = c(static_cast<Eigen::Index>(i) * n2 + j);
    }

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<complex> in;
  std::vector<complex> out;
  if (g2 > 1) {
    for (int i = 0; i < g1; ++i) {
      in.assign(buf.begin() + static_cast<std::ptrdiff_t>(i) * g2, buf.begin() + static_cast<std::ptrdiff_t>(i + 1) * g2);
      fft.inv(out, in);
      std::copy(out.begin(), out.end(), buf.begin() + static_cast<std::ptrdiff_t>(i) * g2);
    }
  }
  in.resize(g1);
  for (int j = 0; j < g2; ++j) {
    for (int i = 0; i < g1; ++i) in[i] = buf[static_cast<std::size_t>(i) * g2 + j];
    fft.inv(out, in);
    for (int i = 0; i < g1; ++i) buf[static_cast<std::size_t>(i) * g2 + j] = out[i];
  }

  std::vector<double> w1(g1);
  std::vector<double> w2(g2, 1.0);
  for (int i = 0; i < g1; ++i) w1[i] = w.value(double(i) / g1);
  if (modes.dim == 2)
    for (int j = 0; j < g2; ++j) w2[j] = w.value(double(j) / g2);
  for (int i = 0; i < g1; ++i)
    for (int j = 0; j < g2; ++j) buf[static_cast<std::size_t>(i) * g2 + j] /= (w1[i] * w2[j]);

  ImageGrid img;
  img.dim = modes.dim;
  img.shape = {g1, g2};
  img.values = std::move(buf);
  return img;
}

template <Window W>
ImageGrid synthesize(const Vector& c, const ReconPlan<W>& p, std::array<int, 2> grid) {
  auto img = synthesize(c, p.modes, p.window, grid);
  img.method = std::string(to_string(p.method));
  img.raster_id = p.raster_id;
  return img;
}

template <Window W>
ImageGrid reconstruct(const ReconPlan<W>& p, const SampleSet& s, std::array<int, 2> grid) {
  return synthesize(coefficients(p, s), p, grid);
}

/// Fourier coefficients of f w on the mode box by tensor Gauss-Legendre quadrature.
template <Window W>
Vector windowed_coeffs(const Scene& scene, const W& w, const ModeExtents& modes, int nodes) {
  if (scene.dim != modes.dim) throw DimensionError("scene and mode extents dimensions differ");
  if (nodes < 1) throw ParameterError("nodes must be >= 1");
  const auto rule = gauss_legendre(static_cast<std::size_t>(nodes));
  const int q = nodes;
  const double tau = 2.0 * std::numbers::pi;
  const int n1 = modes.axis_count(0);
  const int n2 = modes.dim == 2 ? modes.axis_count(1) : 1;
  // e_a(m, k) = weight_k w(x_k) exp(-2 pi i m x_k)
  auto axis = [&](int m_ext) {
    Matrix e(2 * m_ext + 1, q);
    for (int k = 0; k < q; ++k) {
      const double g = rule.weights[k] * w.value(rule.nodes[k]);
      for (int m = -m_ext; m <= m_ext; ++m) e(m + m_ext, k) = std::polar(g, -tau * m * rule.nodes[k]);
    }
    return e;
  };
  const Matrix e1 = axis(modes.m[0]);
  Vector out(modes.count());
  if (modes.dim == 1) {
    Vector f(q);
    for (int k = 0; k < q; ++k) f(k) = scene.eval({rule.nodes[k], 0.0});
    out = e1 * f;
    return out;
  }
  const Matrix e2 = axis(modes.m[1]);
  Matrix f(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) f(i, j) = scene.eval({rule.nodes[i], rule.nodes[j]});
  const Matrix c = e1 * f * e2.transpose();  // n1 x n2
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) out(static_cast<Eigen::Index>(i) * n2 + j) = c(i, j);
  return out;
}

/// Default node count for the reference: resolves the mode box, the scene and the window.
inline int default_reference_nodes(const Scene& scene, const ModeExtents& modes) {
  return std::max(256, 8 * (modes.max_extent() + scene.bandwidth()));
}

/// Windowed Fourier partial sum S_M[f w] / w: the error yardstick for all estimators.
template <Window W>
ImageGrid windowed_reference(const Scene& scene, const W& w, const ModeExtents& modes, std::array<int, 2> grid,
                             int nodes = 0) {
  if (nodes <= 0) nodes = default_reference_nodes(scene, modes);
  auto img = synthesize(windowed_coeffs(scene, w, modes, nodes), modes, w, grid);
  img.method = "reference";
  return img;
}

/// The scene itself sampled on the grid.
inline ImageGrid raw_reference(const Scene& scene, std::array<int, 2> grid) {
  if (scene.dim == 1) grid[1] = 1;
  if (grid[0] < 1 || grid[1] < 1) throw ParameterError("grid sizes must be >= 1");
  ImageGrid img;
  img.dim = scene.dim;
  img.shape = grid;
  img.method = "scene";
  img.values.reserve(static_cast<std::size_t>(grid[0]) * grid[1]);
  for (int i = 0; i < grid[0]; ++i)
    for (int j = 0; j < grid[1]; ++j)
      img.values.push_back(scene.eval({double(i) / grid[0], scene.dim == 2 ? double(j) / grid[1] : 0.0}));
  return img;
}

// ---------------------------------------------------------------------------
// Admissible frame zeta_n = exp(2 pi i <n, x>) / w(x) at integer n.
// ---------------------------------------------------------------------------

/// |<zeta_n, zeta_l>| along one axis: |int_0^1 exp(2 pi i d x) / w(x)^2 dx| for d = n - l.
template <Window W>
double zeta_inner_abs(int d, const W& w, const QuadratureRule& rule) {
  complex acc{0.0, 0.0};
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double v = w.value(rule.nodes[k]);
    acc += std::polar(rule.weights[k] / (v * v), 2.0 * std::numbers::pi * d * rule.nodes[k]);
  }
  return std::abs(acc);
}

/// Least-squares slope of log |<zeta_n, zeta_l>| against log(1 + |n - l|) over all
/// ordered pairs n, l in [-N, N]^dim.
template <Window W>
double admissibility_slope(const W& w, int dim, int n, int nodes = 400) {
  if (dim != 1 && dim != 2) throw ParameterError("dim must be 1 or 2");
  if (n < 1) throw ParameterError("N must be >= 1");
  const auto rule = gauss_legendre(static_cast<std::size_t>(nodes));
  std::vector<double> u(4 * n + 1);
  for (int d = -2 * n; d <= 2 * n; ++d) u[d + 2 * n] = std::log(zeta_inner_abs(d, w, rule));
  // Pairs only enter through the offset d = n - l; weight each offset by its multiplicity.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int span = 2 * n + 1;
  const int d2max = dim == 2 ? 2 * n : 0;
  for (int d1 = -2 * n; d1 <= 2 * n; ++d1)
    for (int d2 = -d2max; d2 <= d2max; ++d2) {
      double mult = span - std::abs(d1);
      if (dim == 2) mult *= span - std::abs(d2);
      const double x = std::log1p(std::hypot(double(d1), double(d2)));
      double y = u[d1 + 2 * n];
      if (dim == 2) y += u[d2 + 2 * n];
      sw += mult;
      sx += mult * x;
      sy += mult * y;
      sxx += mult * x * x;
      sxy += mult * x * y;
    }
  return (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
}

}  // namespace gridfr

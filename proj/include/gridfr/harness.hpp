#pragma once

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gridfr/error.hpp"
#include "gridfr/image_io.hpp"
#include "gridfr/metrics.hpp"
#include "gridfr/numerics.hpp"
#include "gridfr/raster.hpp"
#include "gridfr/recon.hpp"
#include "gridfr/rng.hpp"
#include "gridfr/sampling.hpp"
#include "gridfr/window.hpp"

namespace gridfr {

using json = nlohmann::json;

inline constexpr std::string_view kReconstructedSetup = "reconstructed setup";
inline constexpr std::string_view kPsnrNote =
    "psnr_db: magnitudes vs windowed partial sum S_M[f w]/w, peak = max|reference|; "
    "psnr_complex_db: complex differences vs the same reference; psnr_raw_db: magnitudes vs the raw scene";

inline std::string_view to_string(SceneKind k) {
  switch (k) {
    case SceneKind::sine_product: return "sine_product";
    case SceneKind::trig_poly: return "trig_poly";
    case SceneKind::grid_image: return "grid_image";
  }
  return "sine_product";
}

inline SceneKind scene_kind_from_string(std::string_view s) {
  if (s == "sine_product") return SceneKind::sine_product;
  if (s == "trig_poly") return SceneKind::trig_poly;
  if (s == "grid_image") return SceneKind::grid_image;
  throw ParameterError("unknown scene kind '" + std::string(s) + "'");
}

struct SceneConfig {
  SceneKind kind = SceneKind::sine_product;
  std::vector<TrigTerm> terms;       // trig_poly
  std::array<int, 2> shape{0, 0};    // grid_image
  std::vector<double> pixels;        // grid_image, real, row-major

  friend bool operator==(const SceneConfig& a, const SceneConfig& b) {
    if (a.kind != b.kind || a.shape != b.shape || a.pixels != b.pixels || a.terms.size() != b.terms.size())
      return false;
    for (std::size_t i = 0; i < a.terms.size(); ++i)
      if (a.terms[i].freq != b.terms[i].freq || a.terms[i].coef != b.terms[i].coef) return false;
    return true;
  }
};

/// Generator parameters; only those of `kind` are used, all are serialized.
struct RasterConfig {
  RasterKind kind = RasterKind::jittered_grid;
  std::array<int, 2> extents{8, 8};  // jittered_grid
  double jitter = 0.25;
  int spokes = 16;                   // asterisk
  int radial_count = 14;
  double max_radius = 10.0;
  double k_min = 1.0;                // sas_wedge
  double k_max = 2.0;
  int k_count = 30;
  double ku_max = 1.0;
  int ku_count = 30;
  std::optional<std::array<int, 2>> rescale_box;
  std::string file;                  // custom

  friend bool operator==(const RasterConfig&, const RasterConfig&) = default;
};

enum class SweepAxis { none, n, r };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::n: return "N";
    case SweepAxis::r: return "r";
  }
  return "none";
}

inline SweepAxis sweep_axis_from_string(std::string_view s) {
  if (s == "none") return SweepAxis::none;
  if (s == "N") return SweepAxis::n;
  if (s == "r") return SweepAxis::r;
  throw ParameterError("unknown sweep axis '" + std::string(s) + "' (expected none, N or r)");
}

/// Everything a run depends on. Optional fields are filled by resolve(); the
/// resolved copy is what gets written next to the results.
///
/// band 0 means the full band. In an N sweep the per-size fields (modes, band,
/// grid, quad_nodes, reference_nodes) stay unset and are resolved per point.
struct ExperimentConfig {
  std::string name = "custom";
  std::string setup = "user";
  int dim = 2;
  SceneConfig scene;
  RasterConfig raster;
  double sigma = 0.125;
  double trunc_eps = 1e-12;
  std::optional<std::array<int, 2>> modes;
  std::vector<Method> methods{Method::cg, Method::frame, Method::ftcg};
  std::optional<int> band;
  std::optional<std::array<int, 2>> grid;
  std::optional<int> quad_nodes;
  std::optional<int> reference_nodes;
  double rtol_scale = 1e-10;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  int repeats = 1;
  std::string output_dir;
  bool write_matrices = true;
  SweepAxis sweep_axis = SweepAxis::none;
  std::vector<int> sweep_values;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json snr_json(double snr) {
  if (std::isinf(snr) && snr > 0) return "inf";
  return snr;
}

inline double snr_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    throw ParameterError("snr_db must be a number or \"inf\"");
  }
  return j.get<double>();
}

inline json band_json(const std::optional<int>& b) {
  if (!b) return nullptr;
  if (*b <= 0) return "full";
  return *b;
}

inline std::optional<int> band_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) {
    if (j.get<std::string>() == "full") return 0;
    throw ParameterError("band must be an integer or \"full\"");
  }
  const int b = j.get<int>();
  return b <= 0 ? 0 : b;
}

inline void check_keys(const json& j, std::initializer_list<std::string_view> known, const char* where) {
  if (!j.is_object()) throw ParameterError(std::string(where) + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ParameterError(std::string("unknown key '") + k + "' in " + where);
  }
}

}  // namespace detail

inline void to_json(json& j, const SceneConfig& s) {
  json terms = json::array();
  for (const auto& t : s.terms)
    terms.push_back({{"freq", t.freq}, {"re", t.coef.real()}, {"im", t.coef.imag()}});
  j = {{"kind", to_string(s.kind)}, {"terms", terms}, {"shape", s.shape}, {"pixels", s.pixels}};
}

inline void from_json(const json& j, SceneConfig& s) {
  detail::check_keys(j, {"kind", "terms", "shape", "pixels"}, "scene");
  s = SceneConfig{};
  s.kind = scene_kind_from_string(detail::get_or<std::string>(j, "kind", "sine_product"));
  if (j.contains("terms"))
    for (const auto& t : j.at("terms")) {
      detail::check_keys(t, {"freq", "re", "im"}, "scene term");
      s.terms.push_back({t.at("freq").get<std::array<int, 2>>(),
                         {detail::get_or<double>(t, "re", 0.0), detail::get_or<double>(t, "im", 0.0)}});
    }
  s.shape = detail::get_or<std::array<int, 2>>(j, "shape", {0, 0});
  s.pixels = detail::get_or<std::vector<double>>(j, "pixels", {});
}

inline void to_json(json& j, const RasterConfig& r) {
  j = {{"kind", to_string(r.kind)}, {"extents", r.extents},       {"jitter", r.jitter},
       {"spokes", r.spokes},        {"radial_count", r.radial_count}, {"max_radius", r.max_radius},
       {"k_min", r.k_min},          {"k_max", r.k_max},           {"k_count", r.k_count},
       {"ku_max", r.ku_max},        {"ku_count", r.ku_count},     {"rescale_box", detail::opt_json(r.rescale_box)},
       {"file", r.file}};
}

inline void from_json(const json& j, RasterConfig& r) {
  detail::check_keys(j,
                     {"kind", "extents", "jitter", "spokes", "radial_count", "max_radius", "k_min", "k_max",
                      "k_count", "ku_max", "ku_count", "rescale_box", "file"},
                     "raster");
  const RasterConfig d;
  r.kind = raster_kind_from_string(detail::get_or<std::string>(j, "kind", std::string(to_string(d.kind))));
  r.extents = detail::get_or(j, "extents", d.extents);
  r.jitter = detail::get_or(j, "jitter", d.jitter);
  r.spokes = detail::get_or(j, "spokes", d.spokes);
  r.radial_count = detail::get_or(j, "radial_count", d.radial_count);
  r.max_radius = detail::get_or(j, "max_radius", d.max_radius);
  r.k_min = detail::get_or(j, "k_min", d.k_min);
  r.k_max = detail::get_or(j, "k_max", d.k_max);
  r.k_count = detail::get_or(j, "k_count", d.k_count);
  r.ku_max = detail::get_or(j, "ku_max", d.ku_max);
  r.ku_count = detail::get_or(j, "ku_count", d.ku_count);
  r.rescale_box = detail::get_opt<std::array<int, 2>>(j, "rescale_box");
  r.file = detail::get_or<std::string>(j, "file", "");
}

inline void to_json(json& j, const ExperimentConfig& c) {
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(to_string(m));
  j = {{"name", c.name},
       {"setup", c.setup},
       {"dim", c.dim},
       {"scene", c.scene},
       {"raster", c.raster},
       {"window", {{"sigma", c.sigma}, {"trunc_eps", c.trunc_eps}}},
       {"modes", detail::opt_json(c.modes)},
       {"methods", methods},
       {"band", detail::band_json(c.band)},
       {"grid", detail::opt_json(c.grid)},
       {"quad_nodes", detail::opt_json(c.quad_nodes)},
       {"reference_nodes", detail::opt_json(c.reference_nodes)},
       {"rtol_scale", c.rtol_scale},
       {"snr_db", detail::snr_json(c.snr_db)},
       {"seed", c.seed},
       {"repeats", c.repeats},
       {"output_dir", c.output_dir},
       {"write_matrices", c.write_matrices},
       {"sweep", {{"axis", to_string(c.sweep_axis)}, {"values", c.sweep_values}}}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
  detail::check_keys(j,
                     {"name", "setup", "dim", "scene", "raster", "window", "modes", "methods", "band", "grid",
                      "quad_nodes", "reference_nodes", "rtol_scale", "snr_db", "seed", "repeats", "output_dir",
                      "write_matrices", "sweep"},
                     "config");
  const ExperimentConfig d;
  c = ExperimentConfig{};
  c.name = detail::get_or(j, "name", d.name);
  c.setup = detail::get_or(j, "setup", d.setup);
  c.dim = detail::get_or(j, "dim", d.dim);
  if (j.contains("scene")) c.scene = j.at("scene").get<SceneConfig>();
  if (j.contains("raster")) c.raster = j.at("raster").get<RasterConfig>();
  if (j.contains("window")) {
    const auto& w = j.at("window");
    detail::check_keys(w, {"sigma", "trunc_eps"}, "window");
    c.sigma = detail::get_or(w, "sigma", d.sigma);
    c.trunc_eps = detail::get_or(w, "trunc_eps", d.trunc_eps);
  }
  c.modes = detail::get_opt<std::array<int, 2>>(j, "modes");
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
  }
  c.band = j.contains("band") ? detail::band_from_json(j.at("band")) : std::nullopt;
  c.grid = detail::get_opt<std::array<int, 2>>(j, "grid");
  c.quad_nodes = detail::get_opt<int>(j, "quad_nodes");
  c.reference_nodes = detail::get_opt<int>(j, "reference_nodes");
  c.rtol_scale = detail::get_or(j, "rtol_scale", d.rtol_scale);
  c.snr_db = j.contains("snr_db") && !j.at("snr_db").is_null() ? detail::snr_from_json(j.at("snr_db")) : d.snr_db;
  c.seed = detail::get_or(j, "seed", d.seed);
  c.repeats = detail::get_or(j, "repeats", d.repeats);
  c.output_dir = detail::get_or(j, "output_dir", d.output_dir);
  c.write_matrices = detail::get_or(j, "write_matrices", d.write_matrices);
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    detail::check_keys(s, {"axis", "values"}, "sweep");
    c.sweep_axis = sweep_axis_from_string(detail::get_or<std::string>(s, "axis", "none"));
    c.sweep_values = detail::get_or<std::vector<int>>(s, "values", {});
  }
}

/// Library JSON failures surface as ParameterError so callers see one error family.
inline ExperimentConfig parse_config(std::string_view text) {
  try {
    return json::parse(text).get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParameterError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ParameterError& e) {
    throw ParameterError(path + ": " + e.what());
  }
}

inline std::string dump_config(const ExperimentConfig& c) { return json(c).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

inline std::vector<std::string> preset_names() {
  return {"noisy-grid", "asterisk", "sas-wedge", "size-sweep", "band-sweep", "smoke-1d"};
}

inline ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.name = std::string(name);
  c.setup = std::string(kReconstructedSetup);
  if (name == "noisy-grid") {
    // 841 points / 841 modes, band 15.
    c.dim = 2;
    c.raster.kind = RasterKind::jittered_grid;
    c.raster.extents = {14, 14};
    c.raster.jitter = 0.1;
    c.sigma = 0.2;
    c.modes = std::array<int, 2>{14, 14};
    c.band = 8;
    c.repeats = 5;
  } else if (name == "asterisk") {
    // 449 points / 225 modes, band 23; spokes reach the mode-box corners.
    c.dim = 2;
    c.raster.kind = RasterKind::asterisk;
    c.raster.spokes = 16;
    c.raster.radial_count = 14;
    c.raster.max_radius = 10.0;
    c.sigma = 0.2;
    c.modes = std::array<int, 2>{7, 7};
    c.band = 12;
    c.repeats = 5;
  } else if (name == "sas-wedge") {
    // 30 x 30 wedge mapped onto [-14, 14]^2, band 15.
    c.dim = 2;
    c.raster.kind = RasterKind::sas_wedge;
    c.raster.k_min = 1.0;
    c.raster.k_max = 2.0;
    c.raster.k_count = 30;
    c.raster.ku_max = 1.0;
    c.raster.ku_count = 30;
    c.raster.rescale_box = std::array<int, 2>{14, 14};
    c.sigma = 0.2;
    c.modes = std::array<int, 2>{14, 14};
    c.band = 8;
    c.repeats = 1;
  } else if (name == "size-sweep" || name == "band-sweep" || name == "smoke-1d") {
    c.dim = 1;
    c.raster.kind = RasterKind::jittered_grid;
    c.raster.extents = {16, 0};
    c.raster.jitter = 0.25;
    c.sigma = 0.125;
    if (name == "size-sweep") {
      c.repeats = 5;
      c.sweep_axis = SweepAxis::n;
      c.sweep_values = {8, 16, 32, 64};
      c.write_matrices = false;
    } else if (name == "band-sweep") {
      c.methods = {Method::ftcg};
      c.repeats = 5;
      c.sweep_axis = SweepAxis::r;
      c.sweep_values = {2, 4, 8, 0};
      c.write_matrices = false;
    } else {
      c.raster.extents = {8, 0};
    }
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ParameterError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Construction from a config
// ---------------------------------------------------------------------------

inline GaussianWindow make_window(const ExperimentConfig& c) { return GaussianWindow(c.sigma, c.trunc_eps); }

inline Scene make_scene(const ExperimentConfig& c) {
  switch (c.scene.kind) {
    case SceneKind::sine_product: return Scene::sine_product(c.dim);
    case SceneKind::trig_poly: return Scene::trig_poly(c.dim, c.scene.terms);
    case SceneKind::grid_image: {
      std::vector<complex> px(c.scene.pixels.begin(), c.scene.pixels.end());
      return Scene::grid_image(c.dim, c.scene.shape, std::move(px));
    }
  }
  throw ParameterError("unknown scene kind");
}

struct GeneratedRaster {
  Raster raster;
  std::optional<AffineMap> rescale;
};

inline GeneratedRaster make_raster(const ExperimentConfig& c, std::uint64_t seed) {
  const auto& rc = c.raster;
  if (c.dim != 1 && c.dim != 2) throw ParameterError("dim must be 1 or 2");
  GeneratedRaster g;
  switch (rc.kind) {
    case RasterKind::jittered_grid: {
      const std::vector<int> ext(rc.extents.begin(), rc.extents.begin() + c.dim);
      g.raster = jittered_grid(std::span<const int>(ext), rc.jitter, seed);
      break;
    }
    case RasterKind::asterisk:
      if (c.dim != 2) throw ParameterError("asterisk rasters are 2D");
      g.raster = asterisk(rc.spokes, rc.radial_count, rc.max_radius);
      break;
    case RasterKind::sas_wedge:
      if (c.dim != 2) throw ParameterError("sas_wedge rasters are 2D");
      g.raster = sas_wedge(rc.k_min, rc.k_max, rc.k_count, rc.ku_max, rc.ku_count);
      break;
    case RasterKind::custom:
      if (rc.file.empty()) throw ParameterError("custom raster needs raster.file");
      g.raster = load_raster(rc.file, c.dim);
      break;
  }
  if (rc.rescale_box) {
    auto [scaled, map] = rescale_to_box(g.raster, *rc.rescale_box);
    g.raster = std::move(scaled);
    g.rescale = map;
  }
  return g;
}

inline ModeExtents config_modes(const ExperimentConfig& c) {
  if (!c.modes) throw ParameterError("config is not resolved: modes unset");
  return ModeExtents(c.dim, *c.modes);
}

inline std::array<int, 2> config_grid(const ExperimentConfig& c) {
  if (!c.grid) throw ParameterError("config is not resolved: grid unset");
  auto g = *c.grid;
  if (c.dim == 1) g[1] = 1;
  return g;
}

/// Validates `c` and fills every defaulted field explicitly.
inline ExperimentConfig resolve(ExperimentConfig c) {
  if (c.dim != 1 && c.dim != 2) throw ParameterError("dim must be 1 or 2");
  if (c.methods.empty()) throw ParameterError("methods must not be empty");
  for (std::size_t i = 0; i < c.methods.size(); ++i)
    for (std::size_t k = i + 1; k < c.methods.size(); ++k)
      if (c.methods[i] == c.methods[k]) throw ParameterError("methods must not repeat");
  if (c.repeats < 1) throw ParameterError("repeats must be >= 1");
  if (!(c.rtol_scale >= 0.0)) throw ParameterError("rtol_scale must be >= 0");
  if (std::isnan(c.snr_db) || (std::isinf(c.snr_db) && c.snr_db < 0)) throw ParameterError("snr_db must be a number or inf");
  if (c.dim == 1) {
    c.raster.extents[1] = 0;
    if (c.modes) (*c.modes)[1] = 0;
    if (c.grid) (*c.grid)[1] = 1;
  }
  (void)make_window(c);
  (void)make_scene(c);

  if (c.sweep_axis != SweepAxis::none) {
    if (c.sweep_values.empty()) throw ParameterError("sweep needs values");
    if (c.sweep_axis == SweepAxis::n) {
      if (c.raster.kind != RasterKind::jittered_grid) throw ParameterError("an N sweep needs a jittered_grid raster");
      if (c.modes || c.band || c.grid || c.quad_nodes || c.reference_nodes)
        throw ParameterError("an N sweep derives modes, band, grid and node counts per point; leave them unset");
      for (int v : c.sweep_values)
        if (v < 1) throw ParameterError("N sweep values must be >= 1");
      return c;
    }
    for (int v : c.sweep_values)
      if (v < 0) throw ParameterError("r sweep values must be >= 0 (0 = full band)");
  } else if (!c.sweep_values.empty()) {
    throw ParameterError("sweep values given without a sweep axis");
  }

  const auto probe = make_raster(c, c.seed).raster;
  if (!c.modes) {
    if (c.raster.kind == RasterKind::jittered_grid) {
      c.modes = c.raster.extents;
    } else if (c.raster.rescale_box) {
      c.modes = *c.raster.rescale_box;
    } else {
      c.modes = default_modes(probe).m;
    }
  }
  const auto modes = config_modes(c);
  if (!c.band) c.band = default_band(modes.max_extent());
  if (*c.band > static_cast<int>(probe.size()))
    throw ParameterError("band " + std::to_string(*c.band) + " exceeds the raster size " +
                         std::to_string(probe.size()));
  if (!c.grid) {
    const int g = default_grid(modes.max_extent());
    c.grid = std::array<int, 2>{g, c.dim == 2 ? g : 1};
  }
  if (!c.quad_nodes) {
    // Seed-independent: jittered points satisfy |lambda| <= N + jitter.
    double lam = 0.0;
    if (c.raster.kind == RasterKind::jittered_grid && !c.raster.rescale_box) {
      for (int a = 0; a < c.dim; ++a) lam = std::max(lam, c.raster.extents[a] + c.raster.jitter);
    } else {
      const auto m = probe.max_abs();
      lam = std::max(m[0], m[1]);
    }
    c.quad_nodes = std::max(16, static_cast<int>(std::ceil(8.0 * (modes.max_extent() + lam))));
  }
  if (!c.reference_nodes) c.reference_nodes = default_reference_nodes(make_scene(c), modes);
  if (*c.quad_nodes < 1 || *c.reference_nodes < 1) throw ParameterError("node counts must be >= 1");
  return c;
}

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

/// One method on one seed, or (seed unset) the median over seeds.
struct MetricsReport {
  Method method = Method::cg;
  std::optional<std::uint64_t> seed;
  double psnr_db = 0.0;
  bool psnr_infinite = false;
  double psnr_complex_db = 0.0;
  double psnr_raw_db = 0.0;
  double l2_rel = 0.0;
  double linf = 0.0;
  std::map<std::string, double> kappa;  // psi, masked_t, c
  std::optional<double> kept_fraction;
  std::optional<long long> rank;
  std::map<std::string, double> timings;
};

struct ExperimentResult {
  ExperimentConfig config;  // resolved
  std::vector<MetricsReport> runs;
  std::vector<MetricsReport> summary;  // per method, medians over seeds
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;

  const MetricsReport& median(Method m) const {
    for (const auto& r : summary)
      if (r.method == m) return r;
    throw ParameterError("method '" + std::string(to_string(m)) + "' was not run");
  }
};

/// Median; the mean of the middle pair for even counts.
inline double median_over_seeds(std::vector<double> v) {
  if (v.empty()) throw ParameterError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  const double a = v[n / 2 - 1];
  const double b = v[n / 2];
  if (std::isinf(a) && std::isinf(b) && a == b) return a;
  return 0.5 * (a + b);
}

namespace detail {

/// Re-raises the active gridfr error with `ctx` prefixed, keeping its type.
[[noreturn]] inline void rethrow_with_context(const std::string& ctx) {
  try {
    throw;
  } catch (const ParseError& e) {
    throw ParseError(ctx + ": " + e.what(), 0);
  } catch (const DomainError& e) {
    throw DomainError(ctx + ": " + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(ctx + ": " + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(ctx + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(ctx + ": " + e.what());
  }
}

inline std::uint64_t noise_seed(std::uint64_t run_seed) { return CounterRng::mix(run_seed ^ 0x6E6F697365ULL); }

inline SampleSet make_samples(const ExperimentConfig& c, const Scene& scene, const Raster& raster,
                              std::uint64_t run_seed) {
  SampleSet s;
  if (scene.kind == SceneKind::grid_image) {
    const auto lam = raster.max_abs();
    s = quadrature_coeffs(scene, raster,
                          std::max(64, static_cast<int>(std::ceil(8.0 * (std::max(lam[0], lam[1]) + scene.bandwidth())))));
  } else {
    s = analytic_coeffs(scene, raster);
  }
  return add_noise(s, c.snr_db, noise_seed(run_seed));
}

inline std::string csv_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

inline std::string csv_opt(const std::map<std::string, double>& m, const std::string& k) {
  auto it = m.find(k);
  return it == m.end() ? "" : csv_num(it->second);
}

inline void write_metrics_csv(std::ostream& os, const ExperimentResult& r) {
  os << "# gridfr-metrics v1, name=" << r.config.name << ", setup=" << r.config.setup << '\n';
  os << "# " << kPsnrNote << '\n';
  os << "row,seed,method,psnr_db,psnr_infinite,psnr_complex_db,psnr_raw_db,l2_rel,linf,"
        "kappa_psi,kappa_masked_t,kappa_c,kept_fraction,rank\n";
  auto line = [&os](const char* row, const MetricsReport& m) {
    os << row << ',' << (m.seed ? std::to_string(*m.seed) : std::string("median")) << ',' << to_string(m.method)
       << ',' << csv_num(m.psnr_db) << ',' << (m.psnr_infinite ? 1 : 0) << ',' << csv_num(m.psnr_complex_db) << ','
       << csv_num(m.psnr_raw_db) << ',' << csv_num(m.l2_rel) << ',' << csv_num(m.linf) << ','
       << csv_opt(m.kappa, "psi") << ',' << csv_opt(m.kappa, "masked_t") << ',' << csv_opt(m.kappa, "c") << ','
       << (m.kept_fraction ? csv_num(*m.kept_fraction) : "") << ',' << (m.rank ? std::to_string(*m.rank) : "")
       << '\n';
  };
  for (const auto& m : r.runs) line("run", m);
  for (const auto& m : r.summary) line("median", m);
}

inline void write_timings_csv(std::ostream& os, const ExperimentResult& r) {
  os << "seed,method,phase,seconds\n";
  for (const auto& m : r.runs)
    for (const auto& [phase, s] : m.timings)
      os << (m.seed ? std::to_string(*m.seed) : "") << ',' << to_string(m.method) << ',' << phase << ','
         << format_double(s) << '\n';
  os << ",,wall," << format_double(r.wall_seconds) << '\n';
}

template <class F>
void write_file(const std::filesystem::path& p, F&& body) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ParameterError("cannot open '" + p.string() + "' for writing");
  body(os);
  if (!os) throw ParameterError("failed writing '" + p.string() + "'");
}

inline void set_median(MetricsReport& out, const std::vector<const MetricsReport*>& rs) {
  auto med = [&](auto get) {
    std::vector<double> v;
    for (const auto* r : rs) v.push_back(get(*r));
    return median_over_seeds(std::move(v));
  };
  out.psnr_db = med([](const MetricsReport& r) { return r.psnr_db; });
  out.psnr_infinite = std::isinf(out.psnr_db);
  out.psnr_complex_db = med([](const MetricsReport& r) { return r.psnr_complex_db; });
  out.psnr_raw_db = med([](const MetricsReport& r) { return r.psnr_raw_db; });
  out.l2_rel = med([](const MetricsReport& r) { return r.l2_rel; });
  out.linf = med([](const MetricsReport& r) { return r.linf; });
  for (const auto& [k, v] : rs.front()->kappa) out.kappa[k] = med([&k](const MetricsReport& r) { return r.kappa.at(k); });
  if (rs.front()->kept_fraction) out.kept_fraction = rs.front()->kept_fraction;
  for (const auto& [k, v] : rs.front()->timings)
    out.timings[k] = med([&k](const MetricsReport& r) {
      auto it = r.timings.find(k);
      return it == r.timings.end() ? 0.0 : it->second;
    });
}

inline std::string seed_tag(std::uint64_t seed) { return "seed " + std::to_string(seed) + ": "; }

}  // namespace detail

/// Plan for one method of a resolved config; `psi` may share one Psi across methods.
inline ReconPlan<GaussianWindow> build_plan(const ExperimentConfig& c, Method m, const Raster& raster,
                                            const GaussianWindow& w, const PsiBuild* psi = nullptr) {
  const auto modes = config_modes(c);
  if (!c.band || !c.quad_nodes) throw ParameterError("config is not resolved");
  const auto p = static_cast<double>(raster.size());
  switch (m) {
    case Method::cg: return build_cg_plan(raster, w, modes);
    case Method::frame:
      return build_frame_plan(raster, w, modes, *c.quad_nodes,
                              c.rtol_scale * std::max(p, static_cast<double>(modes.count())), psi);
    case Method::ftcg: return build_ftcg_plan(raster, w, modes, *c.band, *c.quad_nodes, c.rtol_scale * p, psi);
  }
  throw ParameterError("unknown method");
}

/// Builds plans, reconstructs with each method for `repeats` consecutive seeds,
/// and (when output_dir is set) writes the run directory.
inline ExperimentResult run_experiment(const ExperimentConfig& input) {
  namespace fs = std::filesystem;
  const auto wall0 = detail::Clock::now();
  ExperimentResult res;
  try {
    if (input.sweep_axis != SweepAxis::none) throw ParameterError("config describes a sweep; use run_sweep");
    res.config = resolve(input);
    const auto& c = res.config;
    const auto w = make_window(c);
    const auto scene = make_scene(c);
    const auto modes = config_modes(c);
    const auto grid = config_grid(c);
    const bool want_psi = std::any_of(c.methods.begin(), c.methods.end(), [](Method m) { return m != Method::cg; });

    auto t0 = detail::Clock::now();
    const ImageGrid ref = windowed_reference(scene, w, modes, grid, *c.reference_nodes);
    const ImageGrid raw = raw_reference(scene, grid);
    const double ref_seconds = detail::seconds_since(t0);
    double peak = 0.0;
    for (const auto& v : ref.values) peak = std::max(peak, std::abs(v));

    const bool write = !c.output_dir.empty();
    const fs::path out(c.output_dir);
    if (write) {
      fs::create_directories(out);
      detail::write_file(out / "config.json", [&](std::ostream& os) { os << dump_config(c); });
      save_grid_csv(ref, (out / "reference.csv").string());
      save_magnitude_pgm(ref, peak, (out / "reference.pgm").string());
      save_magnitude_pgm(raw, peak, (out / "scene.pgm").string());
    }

    for (int rep = 0; rep < c.repeats; ++rep) {
      const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(rep);
      const auto gen = make_raster(c, seed);
      const Raster& raster = gen.raster;
      const SampleSet samples = detail::make_samples(c, scene, raster, seed);
      const bool first = rep == 0;
      if (first && write) {
        save_raster(raster, (out / "raster.csv").string());
        save_samples(raster, samples, (out / "samples.csv").string(), "raster.csv");
      }
      std::optional<PsiBuild> psi;
      double psi_seconds = 0.0;
      if (want_psi) {
        t0 = detail::Clock::now();
        psi = build_psi_ex(raster, w, modes, *c.quad_nodes);
        psi_seconds = detail::seconds_since(t0);
      }
      for (Method m : c.methods) {
        auto plan = build_plan(c, m, raster, w, psi ? &*psi : nullptr);
        plan.info.rescale = gen.rescale;
        if (m != Method::cg) plan.info.timings["psi"] = psi_seconds;
        t0 = detail::Clock::now();
        const Vector coef = coefficients(plan, samples);
        plan.info.timings["coefficients"] = detail::seconds_since(t0);
        t0 = detail::Clock::now();
        const ImageGrid img = synthesize(coef, plan, grid);
        plan.info.timings["synthesis"] = detail::seconds_since(t0);
        plan.info.timings["reference"] = ref_seconds;

        MetricsReport r;
        r.method = m;
        r.seed = seed;
        const auto ps = psnr(img, ref);
        r.psnr_db = ps.db;
        r.psnr_infinite = ps.infinite;
        r.psnr_complex_db = psnr_complex(img, ref).db;
        r.psnr_raw_db = psnr(img, raw).db;
        r.l2_rel = l2_rel(img, ref);
        r.linf = linf(img, ref);
        if (plan.info.kappa_psi) r.kappa["psi"] = *plan.info.kappa_psi;
        if (plan.info.kappa_masked_t) r.kappa["masked_t"] = *plan.info.kappa_masked_t;
        if (plan.info.kappa_c) r.kappa["c"] = *plan.info.kappa_c;
        r.kept_fraction = plan.info.kept_fraction;
        if (plan.info.rank_b) r.rank = static_cast<long long>(*plan.info.rank_b);
        if (plan.info.rank_c) r.rank = static_cast<long long>(*plan.info.rank_c);
        r.timings = plan.info.timings;
        for (const auto& msg : plan.info.warnings)
          res.warnings.push_back(detail::seed_tag(seed) + std::string(to_string(m)) + ": " + msg);
        res.runs.push_back(std::move(r));

        if (first && write) {
          const std::string stem(to_string(m));
          save_grid_csv(img, (out / (stem + ".csv")).string());
          save_magnitude_pgm(img, peak, (out / (stem + ".pgm")).string());
          save_error_pgm(error_map(img, ref), (out / (stem + "_log10err.pgm")).string());
          if (m == Method::ftcg && c.write_matrices) {
            detail::write_file(out / "T_magnitude.csv", [&](std::ostream& os) { write_magnitude_csv(os, plan.t); });
            save_matrix_pgm(plan.t, (out / "T_magnitude.pgm").string());
          }
        }
      }
      if (samples.under_resolved) res.warnings.push_back(detail::seed_tag(seed) + "sample quadrature under-resolved");
    }

    for (Method m : c.methods) {
      std::vector<const MetricsReport*> rs;
      for (const auto& r : res.runs)
        if (r.method == m) rs.push_back(&r);
      MetricsReport s;
      s.method = m;
      detail::set_median(s, rs);
      res.summary.push_back(std::move(s));
    }
    res.wall_seconds = detail::seconds_since(wall0);

    if (write) {
      detail::write_file(out / "metrics.csv", [&](std::ostream& os) { detail::write_metrics_csv(os, res); });
      detail::write_file(out / "timings.csv", [&](std::ostream& os) { detail::write_timings_csv(os, res); });
      detail::write_file(out / "warnings.txt", [&](std::ostream& os) {
        for (const auto& msg : res.warnings) os << msg << '\n';
      });
    }
  } catch (const Error&) {
    detail::rethrow_with_context("experiment '" + input.name + "'");
  } catch (const std::filesystem::filesystem_error& e) {
    throw ParameterError("experiment '" + input.name + "': " + e.what());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepPoint {
  int value = 0;
  std::uint64_t seed = 0;
  Method method = Method::cg;
  double l2_rel = 0.0;
  double psnr_db = 0.0;
  std::array<int, 2> modes{0, 0};
  int band = 0;
  std::array<int, 2> grid{0, 1};
};

struct SweepTable {
  SweepAxis axis = SweepAxis::none;
  std::vector<int> values;
  std::vector<Method> methods;
  std::vector<std::vector<double>> median_l2;  // [method][value]
  std::vector<SweepPoint> points;

  double at(Method m, int value) const {
    const auto mi = std::find(methods.begin(), methods.end(), m);
    const auto vi = std::find(values.begin(), values.end(), value);
    if (mi == methods.end() || vi == values.end()) throw ParameterError("no such sweep cell");
    return median_l2[mi - methods.begin()][vi - values.begin()];
  }
};

/// The single-run config for one sweep value.
inline ExperimentConfig sweep_point_config(const ExperimentConfig& base, int value) {
  ExperimentConfig c = base;
  c.sweep_axis = SweepAxis::none;
  c.sweep_values.clear();
  c.output_dir.clear();
  c.write_matrices = false;
  if (base.sweep_axis == SweepAxis::n) {
    c.raster.extents = {value, base.dim == 2 ? value : 0};
  } else if (base.sweep_axis == SweepAxis::r) {
    c.band = value;
  } else {
    throw ParameterError("config has no sweep axis");
  }
  return resolve(c);
}

inline std::string sweep_label(SweepAxis axis, int v) {
  return axis == SweepAxis::r && v == 0 ? "full" : std::to_string(v);
}

/// Median relative l2 error (vs the windowed reference) per method and sweep value.
inline SweepTable run_sweep(const ExperimentConfig& input) {
  namespace fs = std::filesystem;
  SweepTable t;
  try {
    const ExperimentConfig base = resolve(input);
    if (base.sweep_axis == SweepAxis::none) throw ParameterError("config has no sweep axis");
    t.axis = base.sweep_axis;
    t.values = base.sweep_values;
    t.methods = base.methods;
    t.median_l2.assign(t.methods.size(), std::vector<double>(t.values.size(), 0.0));
    for (std::size_t vi = 0; vi < t.values.size(); ++vi) {
      const auto pc = sweep_point_config(base, t.values[vi]);
      const auto r = run_experiment(pc);
      for (const auto& run : r.runs)
        t.points.push_back({t.values[vi], *run.seed, run.method, run.l2_rel, run.psnr_db, *pc.modes,
                            *pc.band, config_grid(pc)});
      for (std::size_t mi = 0; mi < t.methods.size(); ++mi) t.median_l2[mi][vi] = r.median(t.methods[mi]).l2_rel;
    }
    if (!base.output_dir.empty()) {
      const fs::path out(base.output_dir);
      fs::create_directories(out);
      detail::write_file(out / "config.json", [&](std::ostream& os) { os << dump_config(base); });
      detail::write_file(out / "sweep.csv", [&](std::ostream& os) {
        os << "# gridfr-sweep v1, name=" << base.name << ", axis=" << to_string(t.axis)
           << ", cell=median rel-l2 vs windowed partial sum over " << base.repeats << " seeds\n";
        os << "method";
        for (int v : t.values) os << ',' << sweep_label(t.axis, v);
        os << '\n';
        for (std::size_t mi = 0; mi < t.methods.size(); ++mi) {
          os << to_string(t.methods[mi]);
          for (double e : t.median_l2[mi]) os << ',' << detail::csv_num(e);
          os << '\n';
        }
      });
      detail::write_file(out / "sweep_points.csv", [&](std::ostream& os) {
        os << to_string(t.axis) << ",seed,method,l2_rel,psnr_db,M1,M2,band,G1,G2\n";
        for (const auto& p : t.points)
          os << sweep_label(t.axis, p.value) << ',' << p.seed << ',' << to_string(p.method) << ','
             << detail::csv_num(p.l2_rel) << ',' << detail::csv_num(p.psnr_db) << ',' << p.modes[0] << ','
             << p.modes[1] << ',' << sweep_label(SweepAxis::r, p.band) << ',' << p.grid[0] << ',' << p.grid[1]
             << '\n';
      });
    }
  } catch (const Error&) {
    detail::rethrow_with_context("sweep '" + input.name + "'");
  } catch (const std::filesystem::filesystem_error& e) {
    throw ParameterError("sweep '" + input.name + "': " + e.what());
  }
  return t;
}

}  // namespace gridfr

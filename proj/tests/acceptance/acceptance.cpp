// Acceptance gate. One PASS/FAIL line per criterion; `--criterion k` runs one.
// Exit status is nonzero when any selected criterion fails.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gridfr/gridfr.hpp"

using namespace gridfr;
namespace fs = std::filesystem;

namespace tol {
// 1: noisy grid
constexpr double kFrameMinDb = 35.0;
constexpr double kFtcgLoDb = 20.0;
constexpr double kFtcgHiDb = 33.0;
constexpr double kGapMinDb = 5.0;
constexpr double kRuntimeMaxS = 120.0;
// 2: asterisk
constexpr double kAsteriskFrameMinDb = 35.0;
constexpr double kAsteriskGapMaxDb = 5.0;
// 3: sas wedge
constexpr double kKappaCMax = 1e3;
constexpr double kKappaPsiMin = 1e4;
constexpr double kKappaSeparation = 10.0;
// 4: full-band collapse
constexpr double kCollapseMaxRel = 1e-6;
// 6: kept fraction
constexpr double kKeptLo = 0.016;
constexpr double kKeptHi = 0.018;
// 7: oracles
constexpr double kCoeffTol = 1e-8;
constexpr double kPinvTol = 1e-10;
constexpr double kSpectrumTol = 1e-10;
// 8: admissibility
constexpr double kSlopeMax = -2.0;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string f(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome noisy_grid() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_experiment(preset("noisy-grid"));
  const double secs = seconds_since(t0);
  const double fr = r.median(Method::frame).psnr_db;
  const double ft = r.median(Method::ftcg).psnr_db;
  const bool pass = fr >= tol::kFrameMinDb && ft >= tol::kFtcgLoDb && ft <= tol::kFtcgHiDb &&
                    fr - ft >= tol::kGapMinDb && secs <= tol::kRuntimeMaxS;
  return {pass, "frame " + f(fr, "%.2f") + " dB (>= 35), ftcg " + f(ft, "%.2f") + " dB (in [20, 33]), gap " +
                    f(fr - ft, "%.2f") + " dB (>= 5), runtime " + f(secs, "%.1f") + " s (<= 120), order " +
                    std::to_string(config_modes(r.config).count()) + ", band " +
                    std::to_string(2 * *r.config.band - 1) + ", " + std::to_string(r.config.repeats) + " seeds"};
}

Outcome asterisk_parity() {
  const auto r = run_experiment(preset("asterisk"));
  const double fr = r.median(Method::frame).psnr_db;
  const double ft = r.median(Method::ftcg).psnr_db;
  const bool pass = fr >= tol::kAsteriskFrameMinDb && fr - ft <= tol::kAsteriskGapMaxDb;
  return {pass, "frame " + f(fr, "%.2f") + " dB (>= 35), ftcg " + f(ft, "%.2f") + " dB, gap " + f(fr - ft, "%.2f") +
                    " dB (<= 5), band " + std::to_string(2 * *r.config.band - 1) + ", " +
                    std::to_string(r.config.repeats) + " seeds"};
}

Outcome sas_crossover() {
  const auto r = run_experiment(preset("sas-wedge"));
  const auto& fr = r.median(Method::frame);
  const auto& ft = r.median(Method::ftcg);
  const double kpsi = fr.kappa.at("psi");
  const double kc = ft.kappa.at("c");
  const bool pass = ft.psnr_db > fr.psnr_db && kc <= tol::kKappaCMax && kpsi >= tol::kKappaPsiMin &&
                    kpsi >= tol::kKappaSeparation * kc;
  return {pass, "ftcg " + f(ft.psnr_db, "%.2f") + " dB > frame " + f(fr.psnr_db, "%.2f") + " dB, kappa(C2) " +
                    f(kc, "%.3g") + " (<= 1e3), kappa(Psi2) " + f(kpsi, "%.3g") + " (>= 1e4), band " +
                    std::to_string(2 * *r.config.band - 1)};
}

Outcome full_band_collapse() {
  double worst = 0.0;
  const GaussianWindow w;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto raster = jittered_grid({16}, 0.25, seed);
    const auto modes = default_modes(raster);
    const auto samples = analytic_coeffs(Scene::sine_product(1), raster);
    const auto psi = build_psi_ex(raster, w, modes, default_quad_nodes(raster, modes));
    const auto frame = build_frame_plan(raster, w, modes, 0, -1.0, &psi);
    const auto ftcg = build_ftcg_plan(raster, w, modes, 0, 0, -1.0, &psi);
    const std::array<int, 2> grid{default_grid(modes.m[0]), 1};
    worst = std::max(worst, l2_rel(reconstruct(ftcg, samples, grid), reconstruct(frame, samples, grid)));
  }
  return {worst <= tol::kCollapseMaxRel,
          "max over 5 seeds of rel-l2(ftcg full band, frame) = " + f(worst, "%.3e") + " (<= 1e-6), N = 16"};
}

Outcome size_sweep_trends() {
  const auto t = run_sweep(preset("size-sweep"));
  const auto& v = t.values;
  auto row = [&](Method m) {
    std::vector<double> e;
    for (int n : v) e.push_back(t.at(m, n));
    return e;
  };
  const auto cg = row(Method::cg);
  const auto fr = row(Method::frame);
  const auto ft = row(Method::ftcg);
  bool frame_nonincreasing = true;
  for (std::size_t i = 1; i < fr.size(); ++i) frame_nonincreasing = frame_nonincreasing && fr[i] <= fr[i - 1];
  const double cg_min = *std::min_element(cg.begin(), cg.end());
  bool cg_strictly_decreasing = true;
  for (std::size_t i = 1; i < cg.size(); ++i) cg_strictly_decreasing = cg_strictly_decreasing && cg[i] < cg[i - 1];
  const bool cg_ok = cg.back() >= cg_min && !cg_strictly_decreasing;
  const bool ft_between = ft.back() <= cg.back() && ft.back() >= fr.back();
  std::string d = "N";
  for (int n : v) d += " " + std::to_string(n);
  auto list = [](const char* name, const std::vector<double>& e) {
    std::string s = std::string("; ") + name;
    for (double x : e) s += " " + f(x, "%.3e");
    return s;
  };
  d += list("cg", cg) + list("frame", fr) + list("ftcg", ft);
  d += std::string("; frame non-increasing ") + (frame_nonincreasing ? "yes" : "no") + ", cg not monotone decreasing " +
       (cg_ok ? "yes" : "no") + ", ftcg(64) between cg and frame " + (ft_between ? "yes" : "no");
  return {frame_nonincreasing && cg_ok && ft_between, d};
}

Outcome kept_fraction_accounting() {
  const double k900 = kept_fraction(900, 8);
  // Formula against a direct count of the retained entries.
  const Matrix ones = Matrix::Constant(900, 900, complex(1.0, 0.0));
  const double counted = band_mask(ones, BandSpec(8)).cwiseAbs().sum() / (900.0 * 900.0);
  const auto c = resolve(preset("asterisk"));
  const auto raster = make_raster(c, c.seed).raster;
  const auto plan = build_plan(c, Method::ftcg, raster, make_window(c));
  const Matrix masked = band_mask(plan.t, *plan.band);
  Eigen::Index nnz = 0;
  for (Eigen::Index i = 0; i < masked.rows(); ++i)
    for (Eigen::Index j = 0; j < masked.cols(); ++j) nnz += masked(i, j) != complex(0.0, 0.0);
  const auto n = static_cast<double>(masked.rows());
  const double ast_counted = static_cast<double>(nnz) / (n * n);
  const double ast_formula = *plan.info.kept_fraction;
  const bool pass =
      k900 >= tol::kKeptLo && k900 <= tol::kKeptHi && counted == k900 && ast_counted == ast_formula;
  return {pass, "900x900 band 15: " + f(100 * k900, "%.3f") + "% (in [1.6, 1.8]), counted " + f(100 * counted, "%.3f") +
                    "%; asterisk " + std::to_string(masked.rows()) + "x" + std::to_string(masked.cols()) +
                    " band 23: formula " + f(100 * ast_formula, "%.4f") + "%, counted " + f(100 * ast_counted, "%.4f") +
                    "% (must agree exactly)"};
}

Outcome oracle_suite() {
  std::string d;
  bool pass = true;

  // Analytic vs quadrature coefficients on 100 random 2D points.
  {
    CounterRng rng(7);
    Raster r;
    r.dim = 2;
    for (int i = 0; i < 100; ++i) r.points.push_back({rng.uniform(-14.0, 14.0), rng.uniform(-14.0, 14.0)});
    const auto scene = Scene::sine_product(2);
    const auto a = analytic_coeffs(scene, r);
    const auto q = quadrature_coeffs(scene, r, 256);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - q.values[i]));
    pass = pass && worst <= tol::kCoeffTol && !q.under_resolved;
    d += "coeffs max err " + f(worst, "%.2e") + " (<= 1e-8)";
  }

  // Moore-Penrose identities on 50 random matrices, a third rank-deficient.
  {
    CounterRng rng(11);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const int m = 3 + static_cast<int>(rng.next() % 40);
      const int n = 3 + static_cast<int>(rng.next() % 40);
      auto rnd = [&](int a, int b) {
        Matrix x(a, b);
        for (int i = 0; i < a; ++i)
          for (int j = 0; j < b; ++j) x(i, j) = complex(rng.normal(), rng.normal());
        return x;
      };
      Matrix a = rnd(m, n);
      if (k % 3 == 0) {
        const int rk = 1 + static_cast<int>(rng.next() % std::min(m, n));
        a = rnd(m, rk) * rnd(rk, n);
      }
      const Matrix p = pseudo_inverse(a);
      const double na = a.norm();
      const double np = p.norm();
      worst = std::max({worst, (a * p * a - a).norm() / na, (p * a * p - p).norm() / np,
                        (a * p - (a * p).adjoint()).norm() / (na * np), (p * a - (p * a).adjoint()).norm() / (na * np)});
    }
    pass = pass && worst <= tol::kPinvTol;
    d += "; Moore-Penrose max rel residual " + f(worst, "%.2e") + " (<= 1e-10)";
  }

  // Closed-form window spectrum vs adaptive quadrature of the defining integral.
  {
    using boost::math::quadrature::gauss_kronrod;
    CounterRng rng(13);
    double worst = 0.0;
    for (double sigma : {0.125, 0.2}) {
      const GaussianWindow w(sigma, 1e-12);
      for (int k = 0; k < 10; ++k) {
        const double xi = rng.uniform(-10.0, 10.0);
        const double tau = 2.0 * std::numbers::pi;
        auto re = [&](double x) { return w.unchecked_value(x) * std::cos(tau * xi * x); };
        auto im = [&](double x) { return -w.unchecked_value(x) * std::sin(tau * xi * x); };
        const complex q(gauss_kronrod<double, 61>::integrate(re, -3.0, 4.0, 6, 1e-14),
                        gauss_kronrod<double, 61>::integrate(im, -3.0, 4.0, 6, 1e-14));
        worst = std::max(worst, std::abs(w.spectrum(xi) - q));
      }
    }
    pass = pass && worst <= tol::kSpectrumTol;
    d += "; spectrum max err " + f(worst, "%.2e") + " (<= 1e-10, 20 random xi)";
  }

  // Bit-reproducibility of a noisy multi-seed run.
  {
    auto c = preset("smoke-1d");
    c.repeats = 3;
    c.snr_db = 25.0;
    const auto base = fs::temp_directory_path() / "gridfr_acceptance_repro";
    fs::remove_all(base);
    c.output_dir = (base / "a").string();
    run_experiment(c);
    c.output_dir = (base / "b").string();
    run_experiment(c);
    bool same = true;
    for (const char* file : {"metrics.csv", "samples.csv", "raster.csv", "ftcg.csv"})
      same = same && slurp(base / "a" / file) == slurp(base / "b" / file);
    fs::remove_all(base);
    pass = pass && same;
    d += std::string("; rerun metrics identical ") + (same ? "yes" : "no");
  }
  return {pass, d};
}

Outcome admissibility() {
  const double slope = admissibility_slope(GaussianWindow(0.2, 1e-12), 2, 8);
  return {slope <= tol::kSlopeMax, "2D N = 8, sigma = 0.2: slope " + f(slope, "%.3f") + " (<= -2)"};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> c{
      {"noisy-grid ordering", noisy_grid},
      {"asterisk near-parity", asterisk_parity},
      {"sas-wedge crossover", sas_crossover},
      {"full-band collapse", full_band_collapse},
      {"size-sweep trends", size_sweep_trends},
      {"kept-fraction accounting", kept_fraction_accounting},
      {"oracle suite", oracle_suite},
      {"admissibility decay", admissibility},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion 1..%zu]\n", criteria().size());
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(criteria().size())) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  int failed = 0;
  for (std::size_t k = 0; k < criteria().size(); ++k) {
    if (only != 0 && static_cast<int>(k + 1) != only) continue;
    const auto& [name, fn] = criteria()[k];
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

// gridfr: raster generation, sampling, reconstruction and experiment runs.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "gridfr/gridfr.hpp"

namespace fs = std::filesystem;
using namespace gridfr;

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string band;
  std::string method;
  std::string snr;
  std::string out;
  std::optional<int> repeats;
};

void add_common(CLI::App* app, Common& o, bool with_out = true) {
  auto* cfg = app->add_option("--config", o.config, "experiment config (JSON)");
  auto* pre = app->add_option("--preset", o.preset, "named preset: noisy-grid, asterisk, sas-wedge, size-sweep, band-sweep, smoke-1d");
  cfg->excludes(pre);
  app->add_option("--seed", o.seed, "base seed (u64)");
  app->add_option("--band", o.band, "band half-width r, or 'full'");
  app->add_option("--method", o.method, "cg|frame|ftcg (restricts the run to one method)");
  app->add_option("--snr", o.snr, "data SNR in dB, or 'inf'");
  app->add_option("--repeats", o.repeats, "number of consecutive seeds");
  if (with_out) app->add_option("--out", o.out, "output directory");
}

ExperimentConfig load(const Common& o) {
  ExperimentConfig c;
  if (!o.config.empty()) {
    c = load_config(o.config);
  } else if (!o.preset.empty()) {
    c = preset(o.preset);
  } else {
    throw ParameterError("one of --config or --preset is required");
  }
  if (o.seed) c.seed = *o.seed;
  if (!o.band.empty()) {
    if (o.band == "full") {
      c.band = 0;
    } else {
      try {
        std::size_t used = 0;
        const int b = std::stoi(o.band, &used);
        if (used != o.band.size() || b < 1) throw ParameterError("");
        c.band = b;
      } catch (const std::exception&) {
        throw ParameterError("--band must be a positive integer or 'full'");
      }
    }
  }
  if (!o.method.empty()) c.methods = {method_from_string(o.method)};
  if (!o.snr.empty()) {
    if (o.snr == "inf") {
      c.snr_db = std::numeric_limits<double>::infinity();
    } else {
      try {
        std::size_t used = 0;
        c.snr_db = std::stod(o.snr, &used);
        if (used != o.snr.size()) throw ParameterError("");
      } catch (const std::exception&) {
        throw ParameterError("--snr must be a number of dB or 'inf'");
      }
    }
  }
  if (o.repeats) c.repeats = *o.repeats;
  if (!o.out.empty()) c.output_dir = o.out;
  return c;
}

fs::path require_out(const Common& o, const ExperimentConfig& c) {
  const std::string dir = !o.out.empty() ? o.out : c.output_dir;
  if (dir.empty()) throw ParameterError("--out is required (or set output_dir in the config)");
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v, const char* spec = "%.4f") {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void print_summary(const ExperimentResult& r) {
  std::cout << r.config.name << " (" << r.config.setup << "), " << r.config.repeats << " seed(s) from "
            << r.config.seed << ", median over seeds\n";
  std::cout << "method  psnr_db  psnr_raw_db  l2_rel      kappa\n";
  for (const auto& m : r.summary) {
    std::string kap;
    for (const auto& [k, v] : m.kappa) kap += k + "=" + fmt(v, "%.3g") + " ";
    std::printf("%-6s  %7s  %11s  %-10s  %s\n", std::string(to_string(m.method)).c_str(), fmt(m.psnr_db, "%.2f").c_str(),
                fmt(m.psnr_raw_db, "%.2f").c_str(), fmt(m.l2_rel, "%.3e").c_str(), kap.c_str());
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_gen_raster(const Common& o) {
  const auto c = load(o);
  const auto out = require_out(o, c);
  const auto g = make_raster(c, c.seed);
  save_raster(g.raster, (out / "raster.csv").string());
  std::cout << "wrote " << (out / "raster.csv").string() << " (" << g.raster.size() << " points)\n";
  return 0;
}

int cmd_sample(const Common& o) {
  const auto c = load(o);
  const auto out = require_out(o, c);
  const auto g = make_raster(c, c.seed);
  const auto s = detail::make_samples(c, make_scene(c), g.raster, c.seed);
  save_raster(g.raster, (out / "raster.csv").string());
  save_samples(g.raster, s, (out / "samples.csv").string(), "raster.csv");
  std::cout << "wrote " << (out / "samples.csv").string() << " (" << s.size() << " samples, snr "
            << fmt(c.snr_db, "%.2f") << " dB)\n";
  return 0;
}

int cmd_reconstruct(const Common& o, const std::string& raster_path, const std::string& samples_path) {
  auto c = load(o);
  if (c.sweep_axis != SweepAxis::none) throw ParameterError("reconstruct needs a single-run config");
  const auto out = require_out(o, c);
  Raster raster;
  SampleSet samples;
  if (!samples_path.empty()) {
    const auto file = load_samples(samples_path);
    std::string rp = raster_path;
    if (rp.empty()) {
      if (file.raster_file.empty()) throw ParameterError("samples file names no raster; pass --raster");
      rp = (fs::path(samples_path).parent_path() / file.raster_file).string();
    }
    raster = load_raster(rp, c.dim);
    samples = bind_samples(file, raster);
    c.raster.kind = RasterKind::custom;
    c.raster.file = rp;
  } else {
    if (!raster_path.empty()) {
      c.raster.kind = RasterKind::custom;
      c.raster.file = raster_path;
    }
    raster = make_raster(c, c.seed).raster;
    samples = detail::make_samples(c, make_scene(c), raster, c.seed);
  }
  c.output_dir = out.string();
  c = resolve(c);
  const auto w = make_window(c);
  const auto grid = config_grid(c);
  const auto ref = windowed_reference(make_scene(c), w, config_modes(c), grid, *c.reference_nodes);
  double peak = 0.0;
  for (const auto& v : ref.values) peak = std::max(peak, std::abs(v));
  save_grid_csv(ref, (out / "reference.csv").string());
  {
    std::ofstream os(out / "config.json");
    os << dump_config(c);
  }
  for (Method m : c.methods) {
    const auto plan = build_plan(c, m, raster, w);
    const auto img = reconstruct(plan, samples, grid);
    const std::string stem(to_string(m));
    save_grid_csv(img, (out / (stem + ".csv")).string());
    save_magnitude_pgm(img, peak, (out / (stem + ".pgm")).string());
    std::cout << stem << ": psnr " << fmt(psnr(img, ref).db, "%.2f") << " dB vs windowed reference, wrote "
              << (out / (stem + ".csv")).string() << '\n';
    for (const auto& msg : plan.info.warnings) std::cerr << "warning: " << stem << ": " << msg << '\n';
  }
  return 0;
}

int cmd_metrics(const std::string& recon, const std::string& reference, const std::string& out) {
  const auto a = load_grid_csv(recon);
  const auto b = load_grid_csv(reference);
  const auto p = psnr(a, b);
  std::cout << "psnr_db," << (p.infinite ? "inf" : fmt(p.db, "%.6f")) << '\n'
            << "psnr_complex_db," << fmt(psnr_complex(a, b).db, "%.6f") << '\n'
            << "l2_rel," << fmt(l2_rel(a, b), "%.6e") << '\n'
            << "linf," << fmt(linf(a, b), "%.6e") << '\n';
  if (!out.empty()) {
    fs::create_directories(out);
    save_error_pgm(error_map(a, b), (fs::path(out) / "log10err.pgm").string());
  }
  return 0;
}

int cmd_run(const Common& o) {
  auto c = load(o);
  if (c.output_dir.empty()) throw ParameterError("--out is required (or set output_dir in the config)");
  const auto r = run_experiment(c);
  print_summary(r);
  std::cout << "wrote " << c.output_dir << '\n';
  return 0;
}

int cmd_sweep(const Common& o) {
  auto c = load(o);
  if (c.output_dir.empty()) throw ParameterError("--out is required (or set output_dir in the config)");
  const auto t = run_sweep(c);
  std::cout << "median rel-l2 over " << c.repeats << " seed(s), axis " << to_string(t.axis) << '\n' << "method";
  for (int v : t.values) std::cout << '\t' << sweep_label(t.axis, v);
  std::cout << '\n';
  for (std::size_t mi = 0; mi < t.methods.size(); ++mi) {
    std::cout << to_string(t.methods[mi]);
    for (double e : t.median_l2[mi]) std::cout << '\t' << fmt(e, "%.3e");
    std::cout << '\n';
  }
  std::cout << "wrote " << c.output_dir << '\n';
  return 0;
}

int cmd_show_config(const Common& o) {
  std::cout << dump_config(resolve(load(o)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridfr: reconstruction from non-uniform Fourier samples"};
  app.require_subcommand(1);
  Common o;
  std::string raster_path, samples_path, recon_path, reference_path, metrics_out;

  auto* gen = app.add_subcommand("gen-raster", "generate a raster and write raster.csv");
  add_common(gen, o);
  auto* sample = app.add_subcommand("sample", "generate a raster and its Fourier samples");
  add_common(sample, o);
  auto* rec = app.add_subcommand("reconstruct", "reconstruct with each configured method");
  add_common(rec, o);
  rec->add_option("--raster", raster_path, "raster CSV (overrides the config raster)");
  rec->add_option("--samples", samples_path, "sample CSV (its raster is read from the header unless --raster)");
  auto* met = app.add_subcommand("metrics", "compare two grid CSVs");
  met->add_option("--recon", recon_path, "reconstruction grid CSV")->required();
  met->add_option("--reference", reference_path, "reference grid CSV")->required();
  met->add_option("--out", metrics_out, "directory for the log10 error map");
  auto* run = app.add_subcommand("run", "run a preset or config and write its result directory");
  add_common(run, o);
  auto* sweep = app.add_subcommand("sweep", "run a sweep over N or r");
  add_common(sweep, o);
  auto* show = app.add_subcommand("show-config", "print the resolved config as JSON");
  add_common(show, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*gen) return cmd_gen_raster(o);
    if (*sample) return cmd_sample(o);
    if (*rec) return cmd_reconstruct(o, raster_path, samples_path);
    if (*met) return cmd_metrics(recon_path, reference_path, metrics_out);
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*show) return cmd_show_config(o);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

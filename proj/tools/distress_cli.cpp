#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "distress/acceptance.hpp"
#include "distress/error.hpp"
#include "distress/harness.hpp"
#include "distress/interp.hpp"

namespace fs = std::filesystem;
using namespace distress;

namespace {

constexpr int kExitAcceptanceFailed = 1;
constexpr int kExitUsage = 2;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return kExitUsage;
    case ErrorKind::kIo: return 3;
    case ErrorKind::kParameter: return 4;
    case ErrorKind::kDimension: return 5;
    case ErrorKind::kOutOfDomain: return 6;
    case ErrorKind::kResource: return 7;
    case ErrorKind::kDegenerateSubset: return 8;
    case ErrorKind::kAggregation: return 9;
  }
  return 10;
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

ExperimentConfig load_config(const std::string& path, const ExperimentConfig& fallback) {
  return path.empty() ? fallback : ExperimentConfig::load(path);
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int workers = 0;
  std::string engine;
};

void apply_overrides(ExperimentConfig& c, const Common& o) {
  if (o.seed) c.speckle.seed = *o.seed;
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  if (o.workers > 0) c.workers = o.workers;
  if (!o.engine.empty()) c.engine = engine_choice_from_string(o.engine);
  c.validate();
}

int cmd_synth(const Common& o) {
  ExperimentConfig c = load_config(o.config, ExperimentConfig{});
  apply_overrides(c, o);
  const FieldPtr field = field_from_json(c.field);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  for (int size : c.image_sizes) {
    const ImagePair pair = make_image_pair(c.speckle, field, PixelMapping{size, c.y_offset});
    const std::string stem = "pair_" + std::to_string(size);
    write_pgm(pair.reference, dir / (stem + "_reference.pgm"));
    write_pgm(pair.deformed, dir / (stem + "_deformed.pgm"));
    write_metadata(describe_pair(c.speckle, pair), dir / (stem + ".meta"));
    std::cout << (dir / (stem + "_reference.pgm")).string() << '\n'
              << (dir / (stem + "_deformed.pgm")).string() << '\n'
              << (dir / (stem + ".meta")).string() << '\n';
  }
  return 0;
}

struct MatchArgs {
  std::string reference, deformed, meta;
  int subset = 41;
  int stride = 10;
  int search_radius = 0;
  int seed_radius = -1;
};

int cmd_match(const Common& o, const MatchArgs& a) {
  const GrayImage ref = read_pgm(a.reference);
  const GrayImage def = read_pgm(a.deformed);
  if (a.subset < 3 || a.subset % 2 == 0) throw Error(ErrorKind::kUsage, "--subset must be odd and >= 3");
  if (a.stride < 1) throw Error(ErrorKind::kUsage, "--stride must be positive");
  const Engine engine = engine_from_string(o.engine.empty() ? "extended" : o.engine);

  std::optional<PairMetadata> meta;
  FieldPtr truth;
  PixelMapping mapping{ref.width(), 0.5};
  if (!a.meta.empty()) {
    meta = read_metadata(a.meta);
    truth = field_from_json(meta->field);
    mapping = PixelMapping{meta->image_size, meta->y_offset};
    if (meta->image_size != ref.width() || ref.width() != ref.height()) {
      throw Error(ErrorKind::kDimension, "metadata image size does not match the images");
    }
  }
  int radius = a.search_radius;
  if (radius == 0) radius = truth ? auto_search_radius(*truth, mapping) : 5;

  const MeasurementGrid grid = make_grid(ref.width(), ref.height(), a.subset / 2, a.stride, radius);
  if (grid.size() == 0) throw Error(ErrorKind::kDimension, "no subset fits inside the image");
  FullFieldOptions ff;
  ff.search_radius = radius;
  ff.seed_radius = a.seed_radius;
  ff.workers = o.workers > 0 ? o.workers : 1;
  const FullFieldResult res = full_field(ref, def, grid, engine, ff);

  const fs::path dir = o.out_dir.empty() ? fs::path(".") : fs::path(o.out_dir);
  write_points_csv(dir / "points.csv", grid, res.points);
  nlohmann::json summary = {{"engine", std::string(to_string(engine))},
                            {"subset_size", a.subset},
                            {"grid_stride", a.stride},
                            {"search_radius", radius},
                            {"grid_points", grid.size()},
                            {"matching_seconds", res.matching_seconds},
                            {"interpolation_seconds", res.interpolation_seconds}};
  std::size_t converged = 0;
  for (const MatchResult& m : res.points) converged += m.converged() ? 1 : 0;
  summary["converged_points"] = converged;
  std::cout << "points: " << (dir / "points.csv").string() << " (" << converged << '/'
            << grid.size() << " converged)\n";
  if (truth) {
    const ErrorSet errors = collect_errors(grid, res.points, *truth, mapping);
    const ErrorStats s = aggregate(errors.errors, errors.n_failed,
                                   {res.matching_seconds, res.interpolation_seconds, grid.size()});
    summary["errors"] = {{"mean_abs_u", s.mean_abs_u}, {"std_u", s.std_u},
                         {"mean_abs_v", s.mean_abs_v}, {"std_v", s.std_v},
                         {"mean_e2e", s.mean_e2e},     {"std_e2e", s.std_e2e},
                         {"n_points", s.n_points},     {"n_failed", s.n_failed},
                         {"flagged", s.flagged()},     {"mean_iterations", s.mean_iterations}};
    std::cout << "mean abs error u " << s.mean_abs_u << " px, v " << s.mean_abs_v
              << " px, end-to-end " << s.mean_e2e << " px\n";
    if (s.flagged()) std::cout << "WARNING: more than 5% of the points failed\n";
  }
  write_json(dir / "match_summary.json", summary);
  return 0;
}

int cmd_bench(const Common& o, bool full) {
  ExperimentConfig c = load_config(o.config, ExperimentConfig::desk_protocol());
  if (full) {
    const ExperimentConfig f = ExperimentConfig::full_protocol();
    c.image_sizes = f.image_sizes;
    c.subset_sizes = f.subset_sizes;
    c.grid_stride = f.grid_stride;
  }
  apply_overrides(c, o);
  RunOptions ro;
  ro.persist = true;
  ro.log = log_line;
  const RunRecord record = run_experiment(c, ro);
  const fs::path dir = c.output_dir;
  write_json(dir / "run_record.json", record.to_json());
  write_json(dir / "config.json", c.to_json());
  emit_plot_data(record, dir);
  std::cout << "run record: " << (dir / "run_record.json").string() << " (config " << record.config_hash
            << ", " << record.total_seconds << " s)\n";
  for (const CellRecord& cell : record.cells) {
    if (!cell.error.empty()) {
      std::cout << "cell " << to_string(cell.engine) << ' ' << cell.image_size << '/'
                << cell.subset_size << " failed: " << cell.error << '\n';
    }
  }
  return 0;
}

struct StrainArgs {
  std::string points, meta, method = "gradients";
  int subset = 0;
  int window = 0;
};

int cmd_strain(const Common& o, const StrainArgs& a) {
  if (a.subset < 3 || a.subset % 2 == 0) throw Error(ErrorKind::kUsage, "--subset must be odd and >= 3");
  const StrainMethod method = strain_method_from_string(a.method);
  const LoadedPoints loaded = read_points_csv(a.points, a.subset / 2);
  const FieldGrid strain = strain_pipeline(method, loaded.grid, loaded.results, a.subset, a.window);
  const fs::path dir = o.out_dir.empty() ? fs::path(".") : fs::path(o.out_dir);
  const fs::path out = dir / ("strain_" + std::string(to_string(method)) + ".csv");
  write_strain_csv(out, strain);
  std::cout << "strain: " << out.string() << " (" << strain.valid_count() << " valid nodes)\n";
  if (!a.meta.empty()) {
    const PairMetadata meta = read_metadata(a.meta);
    const FieldPtr truth = field_from_json(meta.field);
    const StrainRms rms = strain_errors(strain, *truth, PixelMapping{meta.image_size, meta.y_offset});
    std::cout << "RMS error ex " << rms.ex << ", ey " << rms.ey << ", gxy " << rms.gxy << '\n';
    write_json(dir / ("strain_" + std::string(to_string(method)) + "_rms.json"),
               {{"method", a.method}, {"rms_ex", rms.ex}, {"rms_ey", rms.ey}, {"rms_gxy", rms.gxy}});
  }
  return 0;
}

int cmd_verify(const Common& o, const std::vector<int>& only, bool verbose) {
  AcceptanceOptions options;
  if (o.seed) options.seed = *o.seed;
  if (o.workers > 0) options.workers = o.workers;
  options.only = only;
  if (verbose) options.log = [](const std::string& m) { std::cerr << "  " << m << '\n'; };
  int failed = 0;
  run_acceptance(options, [&](const CriterionResult& r) {
    std::cout << format_result(r) << std::endl;
    if (!r.passed) ++failed;
  });
  return failed == 0 ? 0 : kExitAcceptanceFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic speckle images and digital image correlation benchmarks"};
  app.require_subcommand(1);
  Common common;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Experiment config (JSON)");
    sub->add_option("--seed", seed, "Speckle seed (overrides the config)");
    sub->add_option("--out-dir", common.out_dir, "Output directory");
    sub->add_option("--workers", common.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--engine", common.engine, "basic | extended | both");
  };

  auto* synth = app.add_subcommand("synth", "Generate image pairs and metadata from a config");
  add_common(synth);

  MatchArgs match_args;
  auto* match = app.add_subcommand("match", "Run one DIC engine on an image pair");
  add_common(match);
  match->add_option("--reference", match_args.reference, "Reference PGM")->required();
  match->add_option("--deformed", match_args.deformed, "Deformed PGM")->required();
  match->add_option("--meta", match_args.meta, "Truth metadata sidecar (optional)");
  match->add_option("--subset", match_args.subset, "Subset side in px (odd)");
  match->add_option("--stride", match_args.stride, "Grid stride in px");
  match->add_option("--search-radius", match_args.search_radius, "Integer search radius (0: auto)");
  match->add_option("--seed-radius", match_args.seed_radius,
                    "Extended seed search radius (negative: whole image)");

  bool full_protocol = false;
  auto* bench = app.add_subcommand("bench", "Run the benchmark protocol");
  add_common(bench);
  bench->add_flag("--full-protocol", full_protocol, "Image sizes 500/1000/2000, subsets 21..101");

  StrainArgs strain_args;
  auto* strain = app.add_subcommand("strain", "Reconstruct strain from saved match results");
  add_common(strain);
  strain->add_option("--points", strain_args.points, "points.csv from match or bench")->required();
  strain->add_option("--subset", strain_args.subset, "Subset side used for matching")->required();
  strain->add_option("--method", strain_args.method,
                     "diff | smooth-then-diff | gradients | gradients-then-smooth");
  strain->add_option("--window", strain_args.window, "Smoothing window in px (0: subset/2)");
  strain->add_option("--meta", strain_args.meta, "Truth metadata sidecar (optional)");

  std::vector<int> only;
  bool verbose = false;
  auto* verify = app.add_subcommand("verify", "Run the acceptance criteria");
  add_common(verify);
  verify->add_option("--only", only, "Criterion numbers to run");
  verify->add_flag("--verbose", verbose, "Log benchmark progress");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    for (CLI::App* sub : {synth, match, bench, strain, verify}) {
      if (sub->count("--seed")) common.seed = seed;
    }
    if (*synth) return cmd_synth(common);
    if (*match) return cmd_match(common, match_args);
    if (*bench) return cmd_bench(common, full_protocol);
    if (*strain) return cmd_strain(common, strain_args);
    if (*verify) return cmd_verify(common, only, verbose);
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error[io]: " << e.what() << '\n';
    return exit_code(ErrorKind::kIo);
  }
  return kExitUsage;
}

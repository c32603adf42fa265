#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "distress/error.hpp"
#include "distress/harness.hpp"
#include "distress/interp.hpp"

namespace distress {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

nlohmann::json stats_json(const ErrorStats& s) {
  return {{"mean_abs_u", s.mean_abs_u},
          {"mean_abs_v", s.mean_abs_v},
          {"std_u", s.std_u},
          {"std_v", s.std_v},
          {"mean_e2e", s.mean_e2e},
          {"std_e2e", s.std_e2e},
          {"n_points", s.n_points},
          {"n_failed", s.n_failed},
          {"flagged", s.flagged()},
          {"wall_time_per_subset", s.wall_time_per_subset},
          {"interpolation_time", s.interpolation_time},
          {"mean_iterations", s.mean_iterations}};
}

std::string cell_name(Engine engine, int image_size, int subset_size) {
  std::ostringstream os;
  os << to_string(engine) << '_' << image_size << '_' << subset_size;
  return os.str();
}

}  // namespace

const CellRecord* RunRecord::find(int image_size, int subset_size, Engine engine) const {
  for (const CellRecord& c : cells) {
    if (c.image_size == image_size && c.subset_size == subset_size && c.engine == engine) {
      return &c;
    }
  }
  return nullptr;
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json out_cells = nlohmann::json::array();
  for (const CellRecord& c : cells) {
    nlohmann::json strain = nlohmann::json::object();
    for (const auto& [m, rms] : c.strain) {
      strain[std::string(distress::to_string(m))] = {
          {"rms_ex", rms.ex}, {"rms_ey", rms.ey}, {"rms_gxy", rms.gxy}};
    }
    for (const auto& [m, msg] : c.strain_errors) {
      strain[std::string(distress::to_string(m))] = {{"error", msg}};
    }
    out_cells.push_back({{"image_size", c.image_size},
                         {"subset_size", c.subset_size},
                         {"engine", std::string(distress::to_string(c.engine))},
                         {"search_radius", c.search_radius},
                         {"grid_points", c.grid_points},
                         {"subset_warning", c.subset_warning},
                         {"stats", c.stats ? stats_json(*c.stats) : nlohmann::json()},
                         {"strain", strain},
                         {"matching_seconds", c.matching_seconds},
                         {"error", c.error}});
  }
  nlohmann::json synth = nlohmann::json::object();
  for (const auto& [n, s] : synthesis_seconds) synth[std::to_string(n)] = s;
  return {{"config_hash", config_hash},
          {"config", config},
          {"cells", out_cells},
          {"synthesis_seconds", synth},
          {"total_seconds", total_seconds},
          {"tool_version", tool_version},
          {"platform", platform}};
}

int auto_search_radius(const DeformationField& field, const PixelMapping& mapping) {
  const int n = 201;
  const double lo = 0.5;
  const double hi = mapping.size - 0.5;
  double peak = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double px = lo + (hi - lo) * i / (n - 1);
      const double py = lo + (hi - lo) * j / (n - 1);
      const Displacement d = field.displacement(px / mapping.size, py / mapping.size - mapping.y_offset);
      peak = std::max({peak, std::abs(mapping.to_px(d.u)), std::abs(mapping.to_px(d.v))});
    }
  }
  return static_cast<int>(std::ceil(peak)) + 2;
}

std::string platform_string() {
  std::ostringstream os;
  utsname u{};
  if (uname(&u) == 0) os << u.sysname << ' ' << u.release << ' ' << u.machine;
#if defined(__clang__)
  os << "; clang " << __clang_version__;
#elif defined(__GNUC__)
  os << "; gcc " << __VERSION__;
#endif
  return os.str();
}

RunRecord run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto run_start = Clock::now();
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  RunRecord record;
  record.config = config.to_json();
  record.config_hash = config.hash();
  record.platform = platform_string();
  const FieldPtr field = field_from_json(config.field);
  const std::filesystem::path out_dir = config.output_dir;
  if (options.persist) {
    std::filesystem::create_directories(out_dir / "pairs");
    std::filesystem::create_directories(out_dir / "points");
  }
  const std::vector<Engine> engines = config.engines();

  for (int size : config.image_sizes) {
    const PixelMapping mapping{size, config.y_offset};
    auto fail_all = [&](const std::string& msg) {
      for (int subset : config.subset_sizes) {
        for (Engine e : engines) {
          CellRecord cell;
          cell.image_size = size;
          cell.subset_size = subset;
          cell.engine = e;
          cell.error = msg;
          record.cells.push_back(std::move(cell));
        }
      }
      log("image " + std::to_string(size) + ": " + msg);
    };

    ImagePair pair;
    int radius = config.search_radius;
    try {
      const auto t0 = Clock::now();
      pair = make_image_pair(config.speckle, field, mapping);
      record.synthesis_seconds[size] = seconds_since(t0);
      if (radius == 0) radius = auto_search_radius(*field, mapping);
      if (options.persist) {
        const std::string stem = "pair_" + std::to_string(size);
        write_pgm(pair.reference, out_dir / "pairs" / (stem + "_reference.pgm"));
        write_pgm(pair.deformed, out_dir / "pairs" / (stem + "_deformed.pgm"));
        write_metadata(describe_pair(config.speckle, pair), out_dir / "pairs" / (stem + ".meta"));
      }
    } catch (const Error& e) {
      fail_all(std::string(to_string(e.kind())) + ": " + e.what());
      continue;
    }

    int min_size = 0;
    try {
      min_size = min_subset_size(size, config.speckle.r_a, config.speckle.r_d).size;
    } catch (const Error&) {
    }

    for (int subset : config.subset_sizes) {
      const MeasurementGrid grid = make_grid(size, size, subset / 2, config.grid_stride, radius);
      for (Engine engine : engines) {
        CellRecord cell;
        cell.image_size = size;
        cell.subset_size = subset;
        cell.engine = engine;
        cell.search_radius = radius;
        cell.grid_points = grid.size();
        cell.subset_warning = subset < min_size;
        if (cell.subset_warning) {
          log("WARNING: subset " + std::to_string(subset) + " is below the recommended minimum " +
              std::to_string(min_size) + " for " + std::to_string(size) + " px images");
        }
        try {
          if (grid.size() == 0) {
            throw Error(ErrorKind::kDimension, "no subset fits inside the image");
          }
          FullFieldOptions ff;
          ff.search_radius = radius;
          ff.seed_radius = config.extended_seed_radius;
          ff.workers = config.workers;
          FullFieldResult result;
          if (engine == Engine::kExtended) {
            double fastest = std::numeric_limits<double>::infinity();
            std::optional<SplineImage> spline;
            for (int r = 0; r < std::max(1, options.spline_repeats); ++r) {
              spline.emplace(pair.deformed);
              fastest = std::min(fastest, spline->build_seconds());
            }
            result = full_field_extended(pair.reference, *spline, pair.deformed, grid, ff);
            result.interpolation_seconds = fastest;
          } else {
            result = full_field(pair.reference, pair.deformed, grid, engine, ff);
          }
          cell.matching_seconds = result.matching_seconds;
          if (options.persist) {
            write_points_csv(out_dir / "points" / (cell_name(engine, size, subset) + ".csv"), grid,
                             result.points);
          }
          const ErrorSet errors = collect_errors(grid, result.points, *field, mapping);
          cell.stats = aggregate(errors.errors, errors.n_failed,
                                 {result.matching_seconds, result.interpolation_seconds, grid.size()});
          if (engine == Engine::kExtended) {
            for (StrainMethod m : config.strain_methods) {
              try {
                cell.strain[m] =
                    strain_errors(strain_pipeline(m, grid, result.points, subset), *field, mapping);
              } catch (const Error& e) {
                cell.strain_errors[m] = e.what();
              }
            }
          }
        } catch (const Error& e) {
          cell.error = std::string(to_string(e.kind())) + ": " + e.what();
        }
        std::ostringstream msg;
        msg << cell_name(engine, size, subset) << ": ";
        if (!cell.error.empty()) {
          msg << "error " << cell.error;
        } else {
          msg << "e2e " << cell.stats->mean_e2e << " px, failed " << cell.stats->n_failed << "/"
              << grid.size() << ", " << cell.matching_seconds << " s";
          if (cell.stats->flagged()) msg << " [FLAGGED: more than 5% of points failed]";
        }
        log(msg.str());
        record.cells.push_back(std::move(cell));
      }
    }
  }
  record.total_seconds = seconds_since(run_start);
  return record;
}

}  // namespace distress

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "distress/dic.hpp"
#include "distress/metrics.hpp"
#include "distress/strain.hpp"
#include "distress/synth.hpp"

namespace distress {

inline constexpr const char* kToolVersion = "0.1.0";

enum class EngineChoice { kBasic, kExtended, kBoth };

struct ExperimentConfig {
  nlohmann::json field = {{"type", "cantilever"}, {"strict_domain", false}};
  SpeckleSpec speckle;
  double y_offset = 0.5;
  std::vector<int> image_sizes{500, 1000};
  std::vector<int> subset_sizes{21, 41, 61, 101};
  int grid_stride = 10;
  EngineChoice engine = EngineChoice::kBoth;
  int search_radius = 0;          ///< 0: ceil(max |displacement| px) + 2
  int extended_seed_radius = -1;  ///< negative: whole-image seed search
  std::vector<StrainMethod> strain_methods{StrainMethod::kDiff, StrainMethod::kSmoothThenDiff,
                                           StrainMethod::kGradients,
                                           StrainMethod::kGradientsThenSmooth};
  int workers = 1;
  std::string output_dir = "out";

  /// Throws Error(kUsage) on unknown keys or malformed values.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Throws Error(kUsage) when an invariant is violated.
  void validate() const;

  /// Sorted-key serialization of everything that affects results (output
  /// directory and worker count excluded).
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;

  std::vector<Engine> engines() const;

  /// 500 and 1000 px, subsets {21, 41, 61, 101}, stride 25.
  static ExperimentConfig desk_protocol();
  /// 500, 1000 and 2000 px, subsets 21 to 101 in steps of 10, stride 10.
  static ExperimentConfig full_protocol();
};

std::string_view to_string(EngineChoice choice);
EngineChoice engine_choice_from_string(std::string_view name);

/// One (image size, subset size, engine) cell of a run.
struct CellRecord {
  int image_size = 0;
  int subset_size = 0;
  Engine engine = Engine::kBasic;
  int search_radius = 0;
  std::size_t grid_points = 0;
  bool subset_warning = false;  ///< subset below the recommended minimum
  std::optional<ErrorStats> stats;
  std::map<StrainMethod, StrainRms> strain;
  std::map<StrainMethod, std::string> strain_errors;
  std::string error;  ///< empty unless the cell failed as a whole
  double matching_seconds = 0.0;
};

struct RunRecord {
  std::string config_hash;
  nlohmann::json config;
  std::vector<CellRecord> cells;
  std::map<int, double> synthesis_seconds;  ///< per image size
  double total_seconds = 0.0;
  std::string tool_version = kToolVersion;
  std::string platform;

  const CellRecord* find(int image_size, int subset_size, Engine engine) const;
  nlohmann::json to_json() const;
};

/// Progress messages (one line each) from run_experiment.
using LogFn = std::function<void(const std::string&)>;

struct RunOptions {
  /// Write image pairs and per-point CSVs under the config's output_dir.
  bool persist = false;
  /// Spline builds per cell; the fastest is reported as interpolation time.
  int spline_repeats = 5;
  LogFn log;
};

/// Runs every (image size, subset size, engine) cell. Errors inside a cell
/// are recorded in that cell and the run continues.
RunRecord run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Pixel search radius covering the field's largest displacement.
int auto_search_radius(const DeformationField& field, const PixelMapping& mapping);

std::string platform_string();

// ---------------------------------------------------------------------------
// Files

/// Per-point results of one grid. Columns:
/// i,j,x,y,u,v,ux,uy,vx,vy,cc,iterations,status
void write_points_csv(const std::filesystem::path& path, const MeasurementGrid& grid,
                      const std::vector<MatchResult>& results);

struct LoadedPoints {
  MeasurementGrid grid;
  std::vector<MatchResult> results;
};
/// Reads write_points_csv output; the subset half size is not stored and
/// must be supplied.
LoadedPoints read_points_csv(const std::filesystem::path& path, int half_size);

/// Strain grid CSV: i,j,x,y,valid,ex,ey,gxy
void write_strain_csv(const std::filesystem::path& path, const FieldGrid& strain);

/// Plot-ready CSVs. Accuracy files are deterministic for a given config;
/// wall-clock figures go to the timing_*.csv files only.
std::vector<std::filesystem::path> emit_plot_data(const RunRecord& record,
                                                  const std::filesystem::path& dir);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace distress

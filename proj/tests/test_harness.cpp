#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "distress/error.hpp"
#include "distress/harness.hpp"

using namespace distress;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("distress_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config(nlohmann::json field) {
  ExperimentConfig c;
  c.field = std::move(field);
  c.image_sizes = {160};
  c.subset_sizes = {21, 31};
  c.grid_stride = 20;
  return c;
}

}  // namespace

TEST(Config, ParsesAndRejectsUnknownKeys) {
  const auto c = ExperimentConfig::from_json(
      {{"image_sizes", {300}}, {"engine", "extended"}, {"speckle", {{"seed", 9}}}});
  EXPECT_EQ(c.image_sizes, std::vector<int>{300});
  EXPECT_EQ(c.engine, EngineChoice::kExtended);
  EXPECT_EQ(c.speckle.seed, 9u);
  EXPECT_EQ(c.engines(), std::vector<Engine>{Engine::kExtended});
  try {
    ExperimentConfig::from_json({{"image_size", {300}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
  EXPECT_THROW(ExperimentConfig::from_json({{"grid_stride", "ten"}}), Error);
  EXPECT_THROW(ExperimentConfig::from_json({{"engine", "quick"}}), Error);
}

TEST(Config, RoundTripAndValidation) {
  ExperimentConfig c = ExperimentConfig::desk_protocol();
  const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_NO_THROW(c.validate());
  c.subset_sizes = {20};
  EXPECT_THROW(c.validate(), Error);
  c = ExperimentConfig{};
  c.grid_stride = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, HashIgnoresOutputSettings) {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.output_dir = "elsewhere";
  b.workers = 8;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.speckle.seed = 2;
  EXPECT_NE(a.hash(), b.hash());
  // Omitted field keys hash like their defaults.
  ExperimentConfig c = a;
  c.field = {{"type", "cantilever"}, {"strict_domain", false}, {"P", 1.0}};
  ExperimentConfig d = a;
  d.field = {{"type", "cantilever"}, {"P", 1.0}, {"strict_domain", false}};
  EXPECT_EQ(c.hash(), d.hash());
}

TEST(Config, Protocols) {
  const auto desk = ExperimentConfig::desk_protocol();
  EXPECT_EQ(desk.image_sizes, (std::vector<int>{500, 1000}));
  EXPECT_EQ(desk.subset_sizes, (std::vector<int>{21, 41, 61, 101}));
  EXPECT_EQ(desk.grid_stride, 25);
  const auto full = ExperimentConfig::full_protocol();
  EXPECT_EQ(full.image_sizes, (std::vector<int>{500, 1000, 2000}));
  EXPECT_EQ(full.subset_sizes.size(), 9u);
  EXPECT_EQ(full.grid_stride, 10);
}

TEST(Experiment, IdentityFieldHasNoError) {
  const ExperimentConfig c = small_config({{"type", "rigid"}, {"dx", 0.0}, {"dy", 0.0}});
  const RunRecord r = run_experiment(c);
  ASSERT_EQ(r.cells.size(), 4u);
  for (const CellRecord& cell : r.cells) {
    ASSERT_TRUE(cell.stats) << cell.error;
    EXPECT_EQ(cell.stats->n_failed, 0u);
    if (cell.engine == Engine::kExtended) {
      EXPECT_NEAR(cell.stats->mean_e2e, 0.0, 1e-8);
    } else {
      // The peak fit sees an asymmetric stencil even at zero shift.
      EXPECT_LT(cell.stats->mean_e2e, 0.05);
    }
  }
  const CellRecord* ext = r.find(160, 21, Engine::kExtended);
  ASSERT_NE(ext, nullptr);
  EXPECT_TRUE(ext->strain.count(StrainMethod::kDiff));
  EXPECT_EQ(r.find(160, 99, Engine::kBasic), nullptr);
  EXPECT_EQ(r.config_hash, c.hash());
  const nlohmann::json j = r.to_json();
  EXPECT_EQ(j.at("config_hash"), c.hash());
  EXPECT_EQ(j.at("tool_version"), kToolVersion);
}

TEST(Experiment, ArtifactsAreDeterministic) {
  auto run_into = [](const fs::path& dir) {
    ExperimentConfig c = small_config({{"type", "cantilever"}, {"strict_domain", false}});
    c.output_dir = dir.string();
    RunOptions o;
    o.persist = true;
    o.spline_repeats = 1;
    emit_plot_data(run_experiment(c, o), dir);
  };
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  run_into(a);
  run_into(b);
  for (const char* f : {"fig_displacement_error.csv", "fig_e2e_error.csv", "fig_iterations.csv",
                        "fig_strain_rms.csv", "points/extended_160_21.csv",
                        "points/basic_160_31.csv", "pairs/pair_160_reference.pgm",
                        "pairs/pair_160_deformed.pgm", "pairs/pair_160.meta"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Files, PointsCsvRoundTrip) {
  MeasurementGrid g;
  g.origin_x = 15;
  g.origin_y = 25;
  g.stride = 10;
  g.nx = 3;
  g.ny = 2;
  g.half_size = 7;
  std::vector<MatchResult> results(g.size());
  for (std::size_t k = 0; k < results.size(); ++k) {
    results[k].params.u = 0.125 * static_cast<double>(k) - 0.3;
    results[k].params.vy = 1e-4 * static_cast<double>(k);
    results[k].cc = 0.99;
    results[k].iterations = static_cast<int>(k);
  }
  results[4].status = MatchStatus::kMaxIterations;
  const fs::path p = scratch("points.csv");
  write_points_csv(p, g, results);
  const LoadedPoints back = read_points_csv(p, 7);
  fs::remove(p);
  EXPECT_EQ(back.grid.origin_x, 15);
  EXPECT_EQ(back.grid.origin_y, 25);
  EXPECT_EQ(back.grid.stride, 10);
  EXPECT_EQ(back.grid.nx, 3);
  EXPECT_EQ(back.grid.ny, 2);
  ASSERT_EQ(back.results.size(), results.size());
  for (std::size_t k = 0; k < results.size(); ++k) {
    EXPECT_NEAR(back.results[k].params.u, results[k].params.u, 1e-12);
    EXPECT_NEAR(back.results[k].params.vy, results[k].params.vy, 1e-14);
    EXPECT_EQ(back.results[k].iterations, results[k].iterations);
    EXPECT_EQ(back.results[k].status, results[k].status);
  }
  EXPECT_THROW(read_points_csv(scratch("absent.csv"), 7), Error);
}

TEST(Files, PlotDataToleratesFailedCells) {
  RunRecord r;
  r.config = ExperimentConfig{}.to_json();
  CellRecord failed;
  failed.image_size = 500;
  failed.subset_size = 21;
  failed.engine = Engine::kExtended;
  failed.error = "no subset fits inside the image";
  r.cells.push_back(failed);
  const fs::path dir = scratch("plots");
  const auto files = emit_plot_data(r, dir);
  EXPECT_EQ(files.size(), 6u);
  EXPECT_EQ(slurp(dir / "fig_e2e_error.csv"),
            "image_size,subset_size,engine,mean_e2e,std_e2e\n500,21,extended,,\n");
  fs::remove_all(dir);
}

TEST(Experiment, AutoSearchRadius) {
  EXPECT_EQ(auto_search_radius(*rigid_translation(0.01, -0.004), {500, 0.5}), 7);
  EXPECT_EQ(auto_search_radius(*rigid_translation(0.0, 0.0), {500, 0.5}), 2);
}

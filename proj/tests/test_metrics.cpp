#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "distress/error.hpp"
#include "distress/metrics.hpp"

using namespace distress;

namespace {

PointError pe(double eu, double ev, int iterations = 0) {
  PointError e;
  e.eu = eu;
  e.ev = ev;
  e.e2e = std::hypot(eu, ev);
  e.iterations = iterations;
  return e;
}

}  // namespace

TEST(PointErrors, ThreeFourFive) {
  ShapeParams m;
  m.u = 3.5;
  m.v = -1.0;
  const PointError e = point_errors(m, {0.5, 3.0});
  EXPECT_DOUBLE_EQ(e.eu, 3.0);
  EXPECT_DOUBLE_EQ(e.ev, 4.0);
  EXPECT_DOUBLE_EQ(e.e2e, 5.0);
}

TEST(Aggregate, MeansAndPopulationDeviation) {
  const std::vector<PointError> errors{pe(0.02, 0.0, 3), pe(0.04, 0.0, 5)};
  const ErrorStats s = aggregate(errors, 0, {2.0, 0.5, 4});
  EXPECT_DOUBLE_EQ(s.mean_e2e, 0.03);
  EXPECT_NEAR(s.std_e2e, 0.01, 1e-15);
  EXPECT_DOUBLE_EQ(s.mean_abs_u, 0.03);
  EXPECT_DOUBLE_EQ(s.mean_abs_v, 0.0);
  EXPECT_DOUBLE_EQ(s.std_v, 0.0);
  EXPECT_DOUBLE_EQ(s.mean_iterations, 4.0);
  EXPECT_DOUBLE_EQ(s.wall_time_per_subset, 0.5);
  EXPECT_DOUBLE_EQ(s.interpolation_time, 0.5);
  EXPECT_EQ(s.n_points, 2u);
}

TEST(Aggregate, EmptyInputThrows) {
  try {
    aggregate({}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAggregation);
  }
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> d(0.0, 0.1);
  std::vector<PointError> errors;
  for (int k = 0; k < 50; ++k) errors.push_back(pe(d(rng), d(rng), k % 7));
  const ErrorStats a = aggregate(errors, 2);
  std::shuffle(errors.begin(), errors.end(), rng);
  const ErrorStats b = aggregate(errors, 2);
  EXPECT_NEAR(a.mean_e2e, b.mean_e2e, 1e-15);
  EXPECT_NEAR(a.std_u, b.std_u, 1e-15);
  EXPECT_NEAR(a.mean_iterations, b.mean_iterations, 1e-12);
}

TEST(Aggregate, FailureFlag) {
  const std::vector<PointError> errors(95, pe(0.01, 0.01));
  EXPECT_FALSE(aggregate(errors, 5).flagged());
  EXPECT_TRUE(aggregate(errors, 6).flagged());
  EXPECT_NEAR(aggregate(errors, 5).failure_fraction(), 0.05, 1e-15);
}

TEST(CollectErrors, SkipsFailuresAndUsesPixelUnits) {
  MeasurementGrid g;
  g.origin_x = 10;
  g.origin_y = 10;
  g.stride = 10;
  g.nx = 2;
  g.ny = 2;
  const FieldPtr f = rigid_translation(0.01, -0.02);
  const PixelMapping m{100, 0.5};
  std::vector<MatchResult> results(4);
  for (auto& r : results) {
    r.params.u = 1.0;
    r.params.v = -2.0;
    r.iterations = 3;
  }
  results[1].params.u = 1.3;
  results[2].status = MatchStatus::kDiverged;
  const ErrorSet set = collect_errors(g, results, *f, m);
  ASSERT_EQ(set.errors.size(), 3u);
  EXPECT_EQ(set.n_failed, 1u);
  EXPECT_NEAR(set.errors[0].e2e, 0.0, 1e-12);
  EXPECT_NEAR(set.errors[1].eu, 0.3, 1e-12);
  EXPECT_EQ(set.errors[2].iterations, 3);
  results.pop_back();
  EXPECT_THROW(collect_errors(g, results, *f, m), Error);
}

TEST(StrainErrors, ZeroForExactReconstruction) {
  MeasurementGrid g;
  g.origin_x = 20;
  g.origin_y = 20;
  g.stride = 20;
  g.nx = 4;
  g.ny = 4;
  const FieldPtr f = affine_field(0.002, 0.001, -0.001, 0.003, 0.0, 0.0);
  FieldGrid recon(g, 3);
  for (std::size_t k = 0; k < g.size(); ++k) {
    recon.valid[k] = 1;
    recon.values[3 * k] = 0.002;
    recon.values[3 * k + 1] = 0.003;
    recon.values[3 * k + 2] = 0.0;
  }
  const StrainRms r = strain_errors(recon, *f, {100, 0.5});
  EXPECT_NEAR(r.ex, 0.0, 1e-15);
  EXPECT_NEAR(r.ey, 0.0, 1e-15);
  EXPECT_NEAR(r.gxy, 0.0, 1e-15);
  recon.values[0] += 0.004;
  EXPECT_NEAR(strain_errors(recon, *f, {100, 0.5}).ex, 0.001, 1e-15);
}

TEST(StrainErrors, RigidFieldAndEmptyGrid) {
  MeasurementGrid g;
  g.nx = 3;
  g.ny = 2;
  FieldGrid recon(g, 3);
  EXPECT_THROW(strain_errors(recon, *rigid_translation(0.1, 0.1), {100, 0.5}), Error);
  std::fill(recon.valid.begin(), recon.valid.end(), 1);
  const StrainRms r = strain_errors(recon, *rigid_translation(0.1, 0.1), {100, 0.5});
  EXPECT_EQ(r.ex, 0.0);
  EXPECT_EQ(r.gxy, 0.0);
}

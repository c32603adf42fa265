#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "distress/dic.hpp"
#include "distress/error.hpp"
#include "distress/synth.hpp"

using namespace distress;

namespace {

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 255.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

GrayImage random_image(int w, int h, unsigned seed) {
  GrayImage img(w, h);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> value(0, 255);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = static_cast<std::uint8_t>(value(rng));
  return img;
}

ImagePair speckle_pair(FieldPtr field, int size, std::uint64_t seed = 1) {
  SpeckleSpec spec;
  spec.seed = seed;
  return make_image_pair(spec, std::move(field), {size, 0.5});
}

std::array<double, 9> stencil(double a0, double a1, double a2, double a3, double a4, double a5) {
  std::array<double, 9> c{};
  for (int b = -1; b <= 1; ++b)
    for (int a = -1; a <= 1; ++a)
      c[static_cast<std::size_t>((b + 1) * 3 + (a + 1))] =
          a0 + a1 * a + a2 * b + a3 * a * a + a4 * b * b + a5 * a * b;
  return c;
}

}  // namespace

TEST(Criteria, ZnssdIsTwoMinusTwoZncc) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 200; ++k) {
    const auto f = random_values(49, rng), g = random_values(49, rng);
    EXPECT_NEAR(znssd(f, g), 2.0 - 2.0 * zncc(f, g), 1e-12);
    EXPECT_DOUBLE_EQ(zncc(f, g), zncc(g, f));
    EXPECT_LE(std::abs(zncc(f, g)), 1.0 + 1e-12);
  }
}

TEST(Criteria, AffineIntensityInvariance) {
  std::mt19937_64 rng(9);
  const auto f = random_values(121, rng), g = random_values(121, rng);
  std::vector<double> h(g.size()), neg(f.size());
  for (std::size_t k = 0; k < g.size(); ++k) h[k] = 3.5 * g[k] - 40.0;
  for (std::size_t k = 0; k < f.size(); ++k) neg[k] = -2.0 * f[k] + 1.0;
  EXPECT_NEAR(zncc(f, h), zncc(f, g), 1e-12);
  EXPECT_NEAR(zncc(f, f), 1.0, 1e-12);
  EXPECT_NEAR(zncc(f, neg), -1.0, 1e-12);
  EXPECT_NEAR(znssd(f, f), 0.0, 1e-12);
}

TEST(Criteria, RejectsFlatAndMismatched) {
  const std::vector<double> flat(25, 9.0), ramp = [] {
    std::vector<double> v(25);
    for (int k = 0; k < 25; ++k) v[static_cast<std::size_t>(k)] = k;
    return v;
  }();
  try {
    zncc(flat, ramp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateSubset);
  }
  EXPECT_THROW(znssd(ramp, flat), Error);
  try {
    zncc(ramp, std::vector<double>(24, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(Criteria, SumsFormMatchesDirect) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(0, 255);
  std::vector<double> f(81), g(81);
  std::int64_t sf = 0, sff = 0, sg = 0, sgg = 0, sfg = 0;
  for (std::size_t k = 0; k < 81; ++k) {
    const int a = d(rng), b = d(rng);
    f[k] = a;
    g[k] = b;
    sf += a;
    sff += a * a;
    sg += b;
    sgg += b * b;
    sfg += a * b;
  }
  EXPECT_NEAR(zncc_from_sums(81, sf, sff, sg, sgg, sfg), zncc(f, g), 1e-12);
  EXPECT_EQ(zncc_from_sums(81, sf, sff, 81 * 4, 81 * 16, sf * 4), 0.0);
}

TEST(SubsetSize, Examples) {
  EXPECT_EQ(min_subset_size(2000, 0.01, 0.01).size, 21);
  EXPECT_EQ(min_subset_size(500, 0.01, 0.01).size, 5);
  EXPECT_EQ(min_subset_size(1000, 0.01, 0.01).size, 11);
  EXPECT_FALSE(min_subset_size(1000, 0.01, 0.01).ratio_warning);
  const SubsetSizeRule r = min_subset_size(1000, 0.02, 0.005);
  EXPECT_EQ(r.size, 35);
  EXPECT_TRUE(r.ratio_warning);
  EXPECT_THROW(min_subset_size(1000, 0.01, 0.03), Error);
  EXPECT_THROW(min_subset_size(0, 0.01, 0.01), Error);
}

TEST(PeakFit, RecoversQuadraticPeak) {
  const double x0 = 0.3, y0 = -0.2;
  // c = 1 - 0.2 (x - x0)^2 - 0.1 (y - y0)^2 + 0.05 (x - x0)(y - y0)
  const double a3 = -0.2, a4 = -0.1, a5 = 0.05;
  const double a1 = -2 * a3 * x0 - a5 * y0, a2 = -2 * a4 * y0 - a5 * x0;
  const PeakFit fit = fit_biparabolic(stencil(0.9, a1, a2, a3, a4, a5));
  ASSERT_TRUE(fit.ok);
  EXPECT_NEAR(fit.dx, x0, 1e-12);
  EXPECT_NEAR(fit.dy, y0, 1e-12);
}

TEST(PeakFit, MatchesLeastSquaresOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> noise(-0.02, 0.02);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::array<double, 9> c = stencil(0.8, 0.05, -0.03, -0.15, -0.12, 0.02);
    for (double& v : c) v += noise(rng);
    Eigen::Matrix<double, 9, 6> A;
    Eigen::Matrix<double, 9, 1> b;
    for (int j = -1; j <= 1; ++j)
      for (int i = -1; i <= 1; ++i) {
        const int r = (j + 1) * 3 + (i + 1);
        A.row(r) << 1, i, j, i * i, j * j, i * j;
        b[r] = c[static_cast<std::size_t>(r)];
      }
    const Eigen::Matrix<double, 6, 1> a = A.colPivHouseholderQr().solve(b);
    Eigen::Matrix2d H;
    H << 2 * a[3], a[5], a[5], 2 * a[4];
    const Eigen::Vector2d peak = H.inverse() * (Eigen::Vector2d(-a[1], -a[2]));
    const PeakFit fit = fit_biparabolic(c);
    if (!fit.ok) continue;
    ++compared;
    EXPECT_NEAR(fit.dx, peak[0], 1e-10);
    EXPECT_NEAR(fit.dy, peak[1], 1e-10);
  }
  EXPECT_GT(compared, 150);
}

TEST(PeakFit, SymmetricStencilPeaksAtCenter) {
  const PeakFit fit = fit_biparabolic(stencil(1.0, 0.0, 0.0, -0.3, -0.3, 0.0));
  ASSERT_TRUE(fit.ok);
  EXPECT_NEAR(fit.dx, 0.0, 1e-15);
  EXPECT_NEAR(fit.dy, 0.0, 1e-15);
}

TEST(PeakFit, RejectsSaddleAndFarPeaks) {
  EXPECT_FALSE(fit_biparabolic(stencil(1.0, 0.0, 0.0, -0.3, 0.3, 0.0)).ok);
  EXPECT_FALSE(fit_biparabolic(stencil(1.0, 0.0, 0.0, 0.3, 0.3, 0.0)).ok);
  EXPECT_FALSE(fit_biparabolic(stencil(1.0, 0.9, 0.0, -0.3, -0.3, 0.0)).ok);
  std::array<double, 9> c = stencil(1.0, 0.0, 0.0, -0.3, -0.3, 0.0);
  c[0] = std::nan("");
  EXPECT_FALSE(fit_biparabolic(c).ok);
}

TEST(IntegerSearch, FindsIntegerShifts) {
  const int n = 200;
  for (auto [du, dv] : {std::pair{2, -1}, std::pair{-3, 3}, std::pair{0, 0}}) {
    const ImagePair p = speckle_pair(rigid_translation(double(du) / n, double(dv) / n), n);
    const IntegerPeak peak = integer_search(p.reference, p.deformed, {100, 100, 15}, 5);
    EXPECT_EQ(peak.du, du);
    EXPECT_EQ(peak.dv, dv);
    EXPECT_FALSE(peak.on_boundary);
    EXPECT_NEAR(peak.cc_map[4], 1.0, 1e-12);
  }
}

TEST(IntegerSearch, TiesPreferSmallestOffsetThenLexicographic) {
  // Period 4 in x: shifting by 2 makes du = -2 and du = +2 equally good.
  GrayImage ref(60, 60);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 60; ++x) ref(x, y) = static_cast<std::uint8_t>((x % 4) * 50 + (y * 7) % 13);
  GrayImage def(60, 60);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 60; ++x) def(x, y) = ref((x + 58) % 60, y);
  const IntegerPeak peak = integer_search(ref, def, {30, 30, 6}, 3);
  EXPECT_EQ(peak.du, -2);
  EXPECT_EQ(peak.dv, 0);
  // Identity: du = 0 beats the equally good +-4 shifts.
  const IntegerPeak self = integer_search(ref, ref, {30, 30, 6}, 5);
  EXPECT_EQ(self.du, 0);
  EXPECT_EQ(self.dv, 0);
}

TEST(IntegerSearch, Errors) {
  const GrayImage img = random_image(40, 40, 1);
  EXPECT_THROW(integer_search(img, img, {20, 20, 5}, 0), Error);
  try {
    integer_search(img, img, {6, 20, 5}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOutOfDomain);
  }
  try {
    integer_search(GrayImage(40, 40, 3), img, {20, 20, 5}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateSubset);
  }
  EXPECT_EQ(basic_dic(GrayImage(40, 40, 3), img, {20, 20, 5}, 3).status,
            MatchStatus::kDegenerateSubset);
  EXPECT_EQ(basic_dic(img, img, {6, 20, 5}, 3).status, MatchStatus::kOutOfSearchRange);
}

TEST(BasicDic, SubpixelShift) {
  const int n = 300;
  const ImagePair p = speckle_pair(rigid_translation(0.4 / n, -0.3 / n), n);
  const MatchResult r = basic_dic(p.reference, p.deformed, {150, 150, 20}, 4);
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.params.u, 0.4, 0.1);
  EXPECT_NEAR(r.params.v, -0.3, 0.1);
  EXPECT_EQ(r.params.ux, 0.0);
}

TEST(BasicDic, GridMatchesPointwise) {
  const int n = 200;
  const FieldPtr f = cantilever_field(CantileverParams{}, DomainPolicy::kRelaxed);
  const ImagePair p = speckle_pair(f, n);
  const MeasurementGrid grid = make_grid(n, n, 10, 17, 4);
  FullFieldOptions opt;
  opt.search_radius = 4;
  const FullFieldResult ff = full_field(p.reference, p.deformed, grid, Engine::kBasic, opt);
  ASSERT_EQ(ff.points.size(), grid.size());
  std::size_t k = 0;
  for (const SubsetSpec& s : grid.subsets()) {
    const MatchResult r = basic_dic(p.reference, p.deformed, s, 4);
    EXPECT_EQ(ff.points[k].status, r.status);
    EXPECT_EQ(ff.points[k].params.u, r.params.u);
    EXPECT_EQ(ff.points[k].params.v, r.params.v);
    EXPECT_EQ(ff.points[k].cc, r.cc);
    ++k;
  }
}

TEST(GlobalSearch, MatchesBruteForce) {
  const GrayImage ref = random_image(48, 40, 4);
  const GrayImage def = random_image(48, 40, 5);
  const SubsetSpec s{20, 18, 4};
  const GlobalPeak peak = global_search(ref, def, s);
  std::vector<double> f;
  for (int j = -4; j <= 4; ++j)
    for (int i = -4; i <= 4; ++i) f.push_back(ref(s.x + i, s.y + j));
  double best = -2.0;
  int bu = 0, bv = 0;
  for (int cy = 4; cy < 36; ++cy)
    for (int cx = 4; cx < 44; ++cx) {
      std::vector<double> g;
      for (int j = -4; j <= 4; ++j)
        for (int i = -4; i <= 4; ++i) g.push_back(def(cx + i, cy + j));
      const double c = zncc(f, g);
      if (c > best) {
        best = c;
        bu = cx - s.x;
        bv = cy - s.y;
      }
    }
  EXPECT_EQ(peak.du, bu);
  EXPECT_EQ(peak.dv, bv);
  EXPECT_NEAR(peak.cc, best, 1e-9);
}

TEST(GlobalSearch, FindsLargeShift) {
  const int n = 200;
  const ImagePair p = speckle_pair(rigid_translation(37.0 / n, -21.0 / n), n);
  const GlobalPeak peak = global_search(p.reference, p.deformed, {80, 100, 15});
  EXPECT_EQ(peak.du, 37);
  EXPECT_EQ(peak.dv, -21);
  EXPECT_NEAR(peak.cc, 1.0, 1e-9);
}

TEST(ExtendedDic, SelfMatchIsImmediate) {
  const ImagePair p = speckle_pair(rigid_translation(0, 0), 200);
  const SplineImage spline(p.deformed);
  const MatchResult r = extended_dic(p.reference, spline, {100, 100, 15}, {});
  ASSERT_TRUE(r.converged());
  EXPECT_LE(r.iterations, 3);
  EXPECT_NEAR(r.params.u, 0.0, 1e-9);
  EXPECT_NEAR(r.params.v, 0.0, 1e-9);
  EXPECT_NEAR(r.cc, 1.0, 1e-12);
}

TEST(ExtendedDic, RecoversSubpixelShiftFromRoundedGuess) {
  const int n = 300;
  const ImagePair p = speckle_pair(rigid_translation(2.3 / n, -1.6 / n), n);
  const SplineImage spline(p.deformed);
  ShapeParams guess;
  guess.u = 2;
  guess.v = -2;
  const MatchResult r = extended_dic(p.reference, spline, {150, 150, 20}, guess);
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.params.u, 2.3, 0.02);
  EXPECT_NEAR(r.params.v, -1.6, 0.02);
  EXPECT_LE(r.iterations, 8);
}

TEST(ExtendedDic, RecoversAffineGradients) {
  const int n = 400;
  const FieldPtr f = affine_field(0.01, -0.005, 0.004, -0.008, 0.0, 0.0);
  const ImagePair p = speckle_pair(f, n);
  const SplineImage spline(p.deformed);
  const SubsetSpec s{200, 200, 30};
  const PixelMapping m{n, 0.5};
  const Displacement d = f->displacement(m.phys_x(s.x), m.phys_y(s.y));
  ShapeParams guess;
  guess.u = std::round(m.to_px(d.u));
  guess.v = std::round(m.to_px(d.v));
  const MatchResult r = extended_dic(p.reference, spline, s, guess);
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.params.u, m.to_px(d.u), 0.02);
  EXPECT_NEAR(r.params.v, m.to_px(d.v), 0.02);
  EXPECT_NEAR(r.params.ux, 0.01, 1.5e-3);
  EXPECT_NEAR(r.params.uy, -0.005, 1.5e-3);
  EXPECT_NEAR(r.params.vx, 0.004, 1.5e-3);
  EXPECT_NEAR(r.params.vy, -0.008, 1.5e-3);
}

TEST(ExtendedDic, IterationCapHolds) {
  const GrayImage ref = speckle_pair(rigid_translation(0, 0), 120, 5).reference;
  const GrayImage other = speckle_pair(rigid_translation(0, 0), 120, 6).reference;
  const SplineImage spline(other);
  NewtonOptions opt;
  opt.max_iterations = 5;
  int capped = 0;
  for (int y = 30; y <= 90; y += 20) {
    for (int x = 30; x <= 90; x += 20) {
      const MatchResult r = extended_dic(ref, spline, {x, y, 10}, {}, opt);
      EXPECT_LE(r.iterations, 5);
      if (r.status == MatchStatus::kMaxIterations) {
        EXPECT_EQ(r.iterations, 5);
        ++capped;
      }
    }
  }
  EXPECT_GE(capped, 0);
}

TEST(ExtendedDic, DegenerateAndOutside) {
  const GrayImage flat(50, 50, 12);
  const SplineImage spline(random_image(50, 50, 3));
  EXPECT_EQ(extended_dic(flat, spline, {25, 25, 5}, {}).status, MatchStatus::kDegenerateSubset);
  const GrayImage img = random_image(50, 50, 3);
  EXPECT_THROW(extended_dic(img, spline, {3, 25, 5}, {}), Error);
  ShapeParams far;
  far.u = 30;
  EXPECT_EQ(extended_dic(img, spline, {25, 25, 5}, far).status, MatchStatus::kOutOfSearchRange);
}

TEST(FullField, ExtendedIdentityConverges) {
  const ImagePair p = speckle_pair(rigid_translation(0, 0), 200);
  const MeasurementGrid grid = make_grid(200, 200, 10, 20, 3);
  for (int workers : {1, 3}) {
    FullFieldOptions opt;
    opt.workers = workers;
    const FullFieldResult ff = full_field(p.reference, p.deformed, grid, Engine::kExtended, opt);
    ASSERT_EQ(ff.points.size(), grid.size());
    for (const MatchResult& r : ff.points) {
      ASSERT_TRUE(r.converged());
      EXPECT_NEAR(r.params.u, 0.0, 1e-8);
      EXPECT_NEAR(r.params.v, 0.0, 1e-8);
    }
    EXPECT_GT(ff.interpolation_seconds, 0.0);
  }
}

TEST(FullField, ExtendedDeterministicAcrossWorkers) {
  const FieldPtr f = cantilever_field(CantileverParams{}, DomainPolicy::kRelaxed);
  const ImagePair p = speckle_pair(f, 250);
  const MeasurementGrid grid = make_grid(250, 250, 12, 25, 3);
  FullFieldOptions one, many;
  many.workers = 4;
  const auto a = full_field(p.reference, p.deformed, grid, Engine::kExtended, one).points;
  const auto b = full_field(p.reference, p.deformed, grid, Engine::kExtended, many).points;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].params.u, b[k].params.u);
    EXPECT_EQ(a[k].params.vy, b[k].params.vy);
    EXPECT_EQ(a[k].iterations, b[k].iterations);
  }
}

TEST(FullField, SizeMismatch) {
  const GrayImage a = random_image(40, 40, 1), b = random_image(41, 40, 1);
  const MeasurementGrid grid = make_grid(40, 40, 5, 10, 3);
  try {
    full_field(a, b, grid, Engine::kBasic, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(Grid, CenteredAndInside) {
  const MeasurementGrid g = make_grid(100, 80, 10, 7, 3);
  EXPECT_GT(g.nx, 0);
  EXPECT_GT(g.ny, 0);
  for (const SubsetSpec& s : g.subsets()) {
    EXPECT_GE(s.x - 13, 0);
    EXPECT_LE(s.x + 13, 99);
    EXPECT_GE(s.y - 13, 0);
    EXPECT_LE(s.y + 13, 79);
  }
  const SubsetSpec last = g.at(g.nx - 1, g.ny - 1);
  EXPECT_LE(std::abs((99 - (last.x + 13)) - (g.origin_x - 13)), 1);
  EXPECT_EQ(make_grid(20, 20, 10, 5, 0).size(), 0u);
  EXPECT_THROW(make_grid(100, 100, 10, 0, 0), Error);
}

TEST(Names, RoundTrip) {
  for (auto s : {MatchStatus::kConverged, MatchStatus::kMaxIterations,
                 MatchStatus::kDegenerateSubset, MatchStatus::kOutOfSearchRange,
                 MatchStatus::kPeakFitFallback, MatchStatus::kDiverged}) {
    EXPECT_EQ(match_status_from_string(to_string(s)), s);
  }
  EXPECT_EQ(engine_from_string("basic"), Engine::kBasic);
  EXPECT_EQ(engine_from_string(to_string(Engine::kExtended)), Engine::kExtended);
  EXPECT_THROW(engine_from_string("fast"), Error);
}

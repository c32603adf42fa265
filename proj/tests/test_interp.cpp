#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "distress/error.hpp"
#include "distress/interp.hpp"

using namespace distress;

namespace {

GrayImage random_image(int w, int h, unsigned seed) {
  GrayImage img(w, h);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> value(0, 255);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = static_cast<std::uint8_t>(value(rng));
  return img;
}

}  // namespace

TEST(Spline, InterpolatesEveryNode) {
  const GrayImage img = random_image(23, 17, 5);
  const SplineImage s(img);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) EXPECT_NEAR(s.eval(x, y), img(x, y), 1e-9);
}

TEST(Spline, ReproducesLinearRamps) {
  GrayImage img(30, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 30; ++x) img(x, y) = static_cast<std::uint8_t>(3 * x + 5 * y + 7);
  const SplineImage s(img);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ux(0.0, 29.0), uy(0.0, 19.0);
  for (int k = 0; k < 200; ++k) {
    const double x = ux(rng), y = uy(rng);
    const SplineSample2 q = s.sample2_at(x, y);
    EXPECT_NEAR(q.value, 3 * x + 5 * y + 7, 1e-9);
    EXPECT_NEAR(q.dx, 3.0, 1e-9);
    EXPECT_NEAR(q.dy, 5.0, 1e-9);
    EXPECT_NEAR(q.dxx, 0.0, 1e-9);
    EXPECT_NEAR(q.dxy, 0.0, 1e-9);
    EXPECT_NEAR(q.dyy, 0.0, 1e-9);
  }
}

TEST(Spline, DerivativesMatchFiniteDifferences) {
  const GrayImage img = random_image(16, 16, 8);
  const SplineImage s(img);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(1.0, 14.0);
  const double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const double x = u(rng), y = u(rng);
    const SplineSample2 q = s.sample2_at(x, y);
    const SplineSample a = s.sample(x, y);
    EXPECT_EQ(a.value, q.value);
    EXPECT_NEAR(q.dx, (s.eval(x + h, y) - s.eval(x - h, y)) / (2 * h), 1e-4);
    EXPECT_NEAR(q.dy, (s.eval(x, y + h) - s.eval(x, y - h)) / (2 * h), 1e-4);
    const SplineSample px = s.sample(x + h, y), mx = s.sample(x - h, y);
    const SplineSample py = s.sample(x, y + h), my = s.sample(x, y - h);
    EXPECT_NEAR(q.dxx, (px.dx - mx.dx) / (2 * h), 1e-3);
    EXPECT_NEAR(q.dyy, (py.dy - my.dy) / (2 * h), 1e-3);
    EXPECT_NEAR(q.dxy, (py.dx - my.dx) / (2 * h), 1e-3);
    const auto [gx, gy] = s.eval_grad(x, y);
    EXPECT_EQ(gx, q.dx);
    EXPECT_EQ(gy, q.dy);
  }
}

TEST(Spline, ContinuousAcrossCellBoundaries) {
  const GrayImage img = random_image(12, 12, 21);
  const SplineImage s(img);
  const double e = 1e-9;
  for (int c = 1; c < 11; ++c) {
    const double y = 4.3;
    const SplineSample2 l = s.sample2_at(c - e, y), r = s.sample2_at(c + e, y);
    EXPECT_NEAR(l.value, r.value, 1e-6);
    EXPECT_NEAR(l.dx, r.dx, 1e-5);
    EXPECT_NEAR(l.dxx, r.dxx, 1e-4);
  }
}

TEST(Spline, NaturalEndConditions) {
  const GrayImage img = random_image(10, 10, 4);
  const SplineImage s(img);
  for (double y : {0.0, 3.5, 9.0}) {
    EXPECT_NEAR(s.sample2_at(0.0, y).dxx, 0.0, 1e-9);
    EXPECT_NEAR(s.sample2_at(9.0, y).dxx, 0.0, 1e-9);
  }
}

TEST(Spline, DomainAndSizeChecks) {
  EXPECT_THROW(SplineImage(GrayImage(3, 10)), Error);
  try {
    SplineImage bad(GrayImage(10, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
  const SplineImage s(random_image(8, 6, 1));
  EXPECT_NO_THROW(s.eval(7.0, 5.0));
  EXPECT_NO_THROW(s.eval(0.0, 0.0));
  try {
    s.eval(7.0001, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOutOfDomain);
  }
  EXPECT_THROW(s.eval(1.0, -0.1), Error);
  EXPECT_TRUE(s.contains(7.0, 5.0));
  EXPECT_FALSE(s.contains(-1e-12, 0.0));
}

TEST(Spline, ConstantImageIsFlat) {
  const SplineImage s(GrayImage(9, 9, 77));
  for (double x = 0.0; x <= 8.0; x += 0.37) {
    const SplineSample2 q = s.sample2_at(x, 8.0 - x);
    EXPECT_NEAR(q.value, 77.0, 1e-10);
    EXPECT_NEAR(q.dx, 0.0, 1e-10);
    EXPECT_NEAR(q.dyy, 0.0, 1e-10);
  }
}

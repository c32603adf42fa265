#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "distress/image.hpp"

namespace distress {

struct SplineSample {
  double value;
  double dx;
  double dy;
};

struct SplineSample2 {
  double value;
  double dx;
  double dy;
  double dxx;
  double dxy;
  double dyy;
};

/// C2 bicubic interpolating spline through every pixel center of a
/// GrayImage, with natural (zero second derivative) end conditions.
///
/// The spline is stored as uniform cubic B-spline coefficients on a grid
/// padded by one node on every side, so each query touches a fixed 4x4
/// neighbourhood. Pixel (i, j) sits at coordinate (i, j).
class SplineImage {
 public:
  /// Throws Error(kDimension) for images smaller than 4x4.
  explicit SplineImage(const GrayImage& image);

  int width() const { return width_; }
  int height() const { return height_; }
  /// Wall time spent fitting the coefficients, in seconds.
  double build_seconds() const { return build_seconds_; }

  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width_ - 1 && y <= height_ - 1;
  }

  /// Throws Error(kOutOfDomain) outside [0, w-1] x [0, h-1]. Values are not
  /// clamped to [0, 255].
  double eval(double x, double y) const;
  std::pair<double, double> eval_grad(double x, double y) const;
  SplineSample sample(double x, double y) const;

  // Unchecked variants for callers that validated the footprint already.
  double value_at(double x, double y) const;
  SplineSample sample_at(double x, double y) const;
  /// Value, gradient and second derivatives. Unchecked.
  SplineSample2 sample2_at(double x, double y) const;

 private:
  void locate(double x, int extent, int& cell, double& t) const {
    cell = static_cast<int>(std::floor(x));
    if (cell > extent - 2) cell = extent - 2;
    t = x - cell;
  }
  const double* node(int cx, int cy) const {
    // Padded grid: coefficient of node (cx, cy) lives at (cx + 1, cy + 1).
    return coeffs_.data() + static_cast<std::size_t>(cy + 1) * stride_ + (cx + 1);
  }

  int width_ = 0;
  int height_ = 0;
  std::size_t stride_ = 0;
  std::vector<double> coeffs_;
  double build_seconds_ = 0.0;
};

}  // namespace distress

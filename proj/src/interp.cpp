#include "distress/interp.hpp"

#include <chrono>
#include <sstream>

#include "distress/error.hpp"

namespace distress {

namespace {

// Solves for B-spline coefficients c[0..n) of a natural cubic spline through
// samples f (stored with the given stride, in place). Natural end conditions
// force c[0] = f[0] and c[n-1] = f[n-1]; the interior obeys
// c[i-1] + 4 c[i] + c[i+1] = 6 f[i].
void natural_bspline_1d(double* f, int n, std::size_t stride, std::vector<double>& cprime) {
  if (n < 3) return;
  const int m = n - 2;  // interior unknowns c[1..m]
  auto at = [&](int i) -> double& { return f[static_cast<std::size_t>(i) * stride]; };

  for (int i = 1; i <= m; ++i) at(i) *= 6.0;
  at(1) -= at(0);
  at(m) -= at(n - 1);

  // Thomas algorithm on the constant (1, 4, 1) tridiagonal system.
  cprime.resize(static_cast<std::size_t>(n));
  cprime[1] = 0.25;
  at(1) *= 0.25;
  for (int i = 2; i <= m; ++i) {
    const double denom = 4.0 - cprime[i - 1];
    cprime[i] = 1.0 / denom;
    at(i) = (at(i) - at(i - 1)) / denom;
  }
  for (int i = m - 1; i >= 1; --i) at(i) -= cprime[i] * at(i + 1);
}

inline void basis(double t, double w[4]) {
  const double s = 1.0 - t;
  const double t2 = t * t;
  const double t3 = t2 * t;
  w[0] = s * s * s / 6.0;
  w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
  w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
  w[3] = t3 / 6.0;
}

inline void basis_derivative(double t, double d[4]) {
  const double s = 1.0 - t;
  const double t2 = t * t;
  d[0] = -0.5 * s * s;
  d[1] = 1.5 * t2 - 2.0 * t;
  d[2] = -1.5 * t2 + t + 0.5;
  d[3] = 0.5 * t2;
}

inline void basis_second(double t, double d[4]) {
  d[0] = 1.0 - t;
  d[1] = 3.0 * t - 2.0;
  d[2] = 1.0 - 3.0 * t;
  d[3] = t;
}

}  // namespace

SplineImage::SplineImage(const GrayImage& image) {
  if (image.width() < 4 || image.height() < 4) {
    throw Error(ErrorKind::kDimension, "spline interpolation needs an image of at least 4x4");
  }
  const auto start = std::chrono::steady_clock::now();
  width_ = image.width();
  height_ = image.height();
  stride_ = static_cast<std::size_t>(width_) + 2;
  coeffs_.assign(stride_ * (static_cast<std::size_t>(height_) + 2), 0.0);

  for (int y = 0; y < height_; ++y) {
    const auto src = image.row(y);
    double* dst = coeffs_.data() + static_cast<std::size_t>(y + 1) * stride_ + 1;
    for (int x = 0; x < width_; ++x) dst[x] = src[x];
  }

  std::vector<double> scratch;
  for (int y = 0; y < height_; ++y) {
    natural_bspline_1d(coeffs_.data() + static_cast<std::size_t>(y + 1) * stride_ + 1, width_, 1,
                       scratch);
  }
  for (int x = 0; x < width_; ++x) {
    natural_bspline_1d(coeffs_.data() + stride_ + 1 + x, height_, stride_, scratch);
  }

  // Ghost nodes continue the coefficients linearly, which is what zero
  // second derivative at the end nodes requires.
  for (int y = 1; y <= height_; ++y) {
    double* row = coeffs_.data() + static_cast<std::size_t>(y) * stride_;
    row[0] = 2.0 * row[1] - row[2];
    row[width_ + 1] = 2.0 * row[width_] - row[width_ - 1];
  }
  double* top = coeffs_.data();
  double* bottom = coeffs_.data() + static_cast<std::size_t>(height_ + 1) * stride_;
  for (std::size_t x = 0; x < stride_; ++x) {
    top[x] = 2.0 * top[x + stride_] - top[x + 2 * stride_];
    bottom[x] = 2.0 * bottom[x - stride_] - bottom[x - 2 * stride_];
  }

  build_seconds_ =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double SplineImage::eval(double x, double y) const {
  if (!contains(x, y)) {
    std::ostringstream os;
    os << "spline query (" << x << ", " << y << ") outside the image domain";
    throw Error(ErrorKind::kOutOfDomain, os.str());
  }
  return value_at(x, y);
}

std::pair<double, double> SplineImage::eval_grad(double x, double y) const {
  const SplineSample s = sample(x, y);
  return {s.dx, s.dy};
}

SplineSample SplineImage::sample(double x, double y) const {
  if (!contains(x, y)) {
    std::ostringstream os;
    os << "spline query (" << x << ", " << y << ") outside the image domain";
    throw Error(ErrorKind::kOutOfDomain, os.str());
  }
  return sample_at(x, y);
}

double SplineImage::value_at(double x, double y) const {
  int cx, cy;
  double tx, ty;
  locate(x, width_, cx, tx);
  locate(y, height_, cy, ty);
  double wx[4], wy[4];
  basis(tx, wx);
  basis(ty, wy);
  double acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double* c = node(cx - 1, cy - 1 + j);
    acc += wy[j] * (wx[0] * c[0] + wx[1] * c[1] + wx[2] * c[2] + wx[3] * c[3]);
  }
  return acc;
}

SplineSample SplineImage::sample_at(double x, double y) const {
  int cx, cy;
  double tx, ty;
  locate(x, width_, cx, tx);
  locate(y, height_, cy, ty);
  double wx[4], wy[4], dx[4], dy[4];
  basis(tx, wx);
  basis(ty, wy);
  basis_derivative(tx, dx);
  basis_derivative(ty, dy);
  SplineSample s{0.0, 0.0, 0.0};
  for (int j = 0; j < 4; ++j) {
    const double* c = node(cx - 1, cy - 1 + j);
    const double rv = wx[0] * c[0] + wx[1] * c[1] + wx[2] * c[2] + wx[3] * c[3];
    const double rd = dx[0] * c[0] + dx[1] * c[1] + dx[2] * c[2] + dx[3] * c[3];
    s.value += wy[j] * rv;
    s.dx += wy[j] * rd;
    s.dy += dy[j] * rv;
  }
  return s;
}

SplineSample2 SplineImage::sample2_at(double x, double y) const {
  int cx, cy;
  double tx, ty;
  locate(x, width_, cx, tx);
  locate(y, height_, cy, ty);
  double wx[4], wy[4], dx[4], dy[4], ddx[4], ddy[4];
  basis(tx, wx);
  basis(ty, wy);
  basis_derivative(tx, dx);
  basis_derivative(ty, dy);
  basis_second(tx, ddx);
  basis_second(ty, ddy);
  SplineSample2 s{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  for (int j = 0; j < 4; ++j) {
    const double* c = node(cx - 1, cy - 1 + j);
    const double rv = wx[0] * c[0] + wx[1] * c[1] + wx[2] * c[2] + wx[3] * c[3];
    const double rd = dx[0] * c[0] + dx[1] * c[1] + dx[2] * c[2] + dx[3] * c[3];
    const double rdd = ddx[0] * c[0] + ddx[1] * c[1] + ddx[2] * c[2] + ddx[3] * c[3];
    s.value += wy[j] * rv;
    s.dx += wy[j] * rd;
    s.dy += dy[j] * rv;
    s.dxx += wy[j] * rdd;
    s.dxy += dy[j] * rd;
    s.dyy += ddy[j] * rv;
  }
  return s;
}

}  // namespace distress

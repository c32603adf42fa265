#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "detail.hpp"
#include "distress/dic.hpp"
#include "distress/error.hpp"

namespace distress {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Internal parameter order: u, ux, uy, v, vx, vy.
Vec6 pack(const ShapeParams& p) {
  Vec6 v;
  v << p.u, p.ux, p.uy, p.v, p.vx, p.vy;
  return v;
}

ShapeParams unpack(const Vec6& v) {
  ShapeParams p;
  p.u = v[0];
  p.ux = v[1];
  p.uy = v[2];
  p.v = v[3];
  p.vx = v[4];
  p.vy = v[5];
  return p;
}

enum class EvalState { kOk, kOutside, kFlat };

struct Evaluation {
  EvalState state = EvalState::kOk;
  double znssd = 0.0;
  Mat6 hessian = Mat6::Zero();
  Mat6 gauss_newton = Mat6::Zero();
  Vec6 rhs = Vec6::Zero();

  double cc() const { return 1.0 - 0.5 * znssd; }
};

class SubsetProblem {
 public:
  SubsetProblem(const GrayImage& reference, const SplineImage& deformed, const SubsetSpec& subset)
      : spline_(deformed), subset_(subset) {
    const int M = subset.half_size;
    const std::size_t n = static_cast<std::size_t>(subset.side()) * subset.side();
    fhat_.reserve(n);
    dx_.reserve(n);
    dy_.reserve(n);
    double sum = 0.0;
    for (int j = -M; j <= M; ++j) {
      for (int i = -M; i <= M; ++i) {
        const double f = reference(subset.x + i, subset.y + j);
        fhat_.push_back(f);
        dx_.push_back(i);
        dy_.push_back(j);
        sum += f;
      }
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double f : fhat_) ss += (f - mean) * (f - mean);
    flat_ = ss == 0.0;
    const double norm = std::sqrt(ss);
    for (double& f : fhat_) f = flat_ ? 0.0 : (f - mean) / norm;
    samples_.resize(n);
  }

  bool reference_flat() const { return flat_; }

  Evaluation evaluate(const Vec6& p) {
    Evaluation e;
    if (!footprint_inside(p)) {
      e.state = EvalState::kOutside;
      return e;
    }
    const std::size_t n = fhat_.size();
    const double cx = subset_.x + p[0];
    const double cy = subset_.y + p[3];
    double gsum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = cx + (1.0 + p[1]) * dx_[k] + p[2] * dy_[k];
      const double y = cy + p[4] * dx_[k] + (1.0 + p[5]) * dy_[k];
      samples_[k] = spline_.sample2_at(x, y);
      gsum += samples_[k].value;
    }
    const double gm = gsum / static_cast<double>(n);
    double gss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = samples_[k].value - gm;
      gss += d * d;
    }
    const double gnorm = std::sqrt(gss);
    if (!(gnorm > 1e-9)) {
      e.state = EvalState::kFlat;
      return e;
    }
    double c = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = fhat_[k] - (samples_[k].value - gm) / gnorm;
      c += r * r;
    }
    const double cc = 1.0 - 0.5 * c;

    // With dg_k = d(g_k)/dp = [gx, gx dx, gx dy, gy, gy dx, gy dy] and
    // s = sum ghat_k dg_k, t = sum fhat_k dg_k, |g| = gnorm:
    //   grad cc  = (t - cc s) / |g|
    //   GN       = (G'PG - s s') / |g|^2
    //   -hess cc = (t s' + s t' + cc G'PG - 3 cc s s') / |g|^2
    //              - sum (fhat_k - cc ghat_k) d2g_k / |g|
    Vec6 sum_dg = Vec6::Zero();
    Vec6 s = Vec6::Zero();
    Vec6 t = Vec6::Zero();
    Mat6 outer = Mat6::Zero();
    Eigen::Matrix3d axx = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d axy = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d ayy = Eigen::Matrix3d::Zero();
    Vec6 dg;
    Eigen::Vector3d m;
    for (std::size_t k = 0; k < n; ++k) {
      const SplineSample2& g = samples_[k];
      const double ghat = (g.value - gm) / gnorm;
      dg << g.dx, g.dx * dx_[k], g.dx * dy_[k], g.dy, g.dy * dx_[k], g.dy * dy_[k];
      sum_dg += dg;
      s += ghat * dg;
      t += fhat_[k] * dg;
      outer.selfadjointView<Eigen::Upper>().rankUpdate(dg);
      const double q = fhat_[k] - cc * ghat;
      m << 1.0, dx_[k], dy_[k];
      const Eigen::Matrix3d mm = m * m.transpose();
      axx += (q * g.dxx) * mm;
      axy += (q * g.dxy) * mm;
      ayy += (q * g.dyy) * mm;
    }
    outer = outer.selfadjointView<Eigen::Upper>();
    const Mat6 centered = outer - sum_dg * sum_dg.transpose() / static_cast<double>(n);
    Mat6 second;
    second << axx, axy, axy, ayy;
    e.znssd = c;
    e.gauss_newton = (centered - s * s.transpose()) / gss;
    e.hessian = (t * s.transpose() + s * t.transpose() + cc * centered -
                 3.0 * cc * s * s.transpose()) / gss -
                second / gnorm;
    e.rhs = (t - cc * s) / gnorm;
    return e;
  }

 private:
  bool footprint_inside(const Vec6& p) const {
    const double M = subset_.half_size;
    for (int a = -1; a <= 1; a += 2) {
      for (int b = -1; b <= 1; b += 2) {
        const double x = subset_.x + p[0] + (1.0 + p[1]) * a * M + p[2] * b * M;
        const double y = subset_.y + p[3] + p[4] * a * M + (1.0 + p[5]) * b * M;
        if (!spline_.contains(x, y)) return false;
      }
    }
    return true;
  }

  const SplineImage& spline_;
  SubsetSpec subset_;
  bool flat_ = false;
  std::vector<double> fhat_, dx_, dy_;
  std::vector<SplineSample2> samples_;
};

bool usable(const Eigen::LDLT<Mat6>& ldlt) {
  return ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() >= 1e-15;
}

// Newton step from the exact Hessian, or the Gauss-Newton step where the
// exact Hessian is not positive definite.
bool solve_step(const Evaluation& e, Vec6& step) {
  const Eigen::LDLT<Mat6> gn(e.gauss_newton);
  if (!usable(gn)) return false;
  const Eigen::LLT<Mat6> newton(e.hessian);
  if (newton.info() == Eigen::Success) {
    step = newton.solve(e.rhs);
    if (step.allFinite()) return true;
  }
  step = gn.solve(e.rhs);
  return step.allFinite();
}

}  // namespace

MatchResult extended_dic(const GrayImage& reference, const SplineImage& deformed,
                         const SubsetSpec& subset, const ShapeParams& initial_guess,
                         const NewtonOptions& options) {
  const int M = subset.half_size;
  if (subset.x - M < 0 || subset.y - M < 0 || subset.x + M >= reference.width() ||
      subset.y + M >= reference.height()) {
    throw Error(ErrorKind::kOutOfDomain, "reference subset leaves the image");
  }
  MatchResult result;
  result.params = initial_guess;

  SubsetProblem problem(reference, deformed, subset);
  if (problem.reference_flat()) {
    result.status = MatchStatus::kDegenerateSubset;
    return result;
  }

  Vec6 p = pack(initial_guess);
  Evaluation current = problem.evaluate(p);
  if (current.state == EvalState::kOutside) {
    result.status = MatchStatus::kOutOfSearchRange;
    return result;
  }
  if (current.state == EvalState::kFlat) {
    result.status = MatchStatus::kDegenerateSubset;
    return result;
  }
  result.cc = current.cc();

  while (result.iterations < options.max_iterations) {
    ++result.iterations;
    Vec6 step;
    if (!solve_step(current, step)) {
      result.status = MatchStatus::kDegenerateSubset;
      return result;
    }

    bool accepted = false;
    Evaluation trial;
    for (int h = 0; h <= options.max_halvings; ++h) {
      trial = problem.evaluate(p + step);
      if (trial.state == EvalState::kOk && trial.znssd <= current.znssd + 1e-13) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }

    if (!accepted) {
      // No descent even after halving: parameters stay put, so every later
      // iteration would repeat this one.
      const Vec6 full = step * std::pow(2.0, options.max_halvings + 1);
      if (full.cwiseAbs().maxCoeff() < options.param_tol &&
          std::abs(full.sum()) < options.param_tol) {
        result.status = MatchStatus::kConverged;
      } else {
        result.iterations = options.max_iterations;
        result.status = MatchStatus::kMaxIterations;
      }
      return result;
    }

    const double cc_change = std::abs(trial.cc() - current.cc());
    p += step;
    current = std::move(trial);
    result.params = unpack(p);
    result.cc = current.cc();

    if (std::abs(result.params.ux) > options.gradient_bound ||
        std::abs(result.params.uy) > options.gradient_bound ||
        std::abs(result.params.vx) > options.gradient_bound ||
        std::abs(result.params.vy) > options.gradient_bound) {
      result.status = MatchStatus::kDiverged;
      return result;
    }
    if (std::abs(step.sum()) < options.param_tol && step.cwiseAbs().maxCoeff() < options.param_tol &&
        cc_change < options.cc_tol) {
      result.status = MatchStatus::kConverged;
      return result;
    }
  }
  result.status = MatchStatus::kMaxIterations;
  return result;
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(static_cast<double*>(fftw_malloc(sizeof(double) * n))) {
    if (data == nullptr) throw Error(ErrorKind::kResource, "FFT buffer allocation failed");
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* data;
};

struct FftwComplex {
  explicit FftwComplex(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (data == nullptr) throw Error(ErrorKind::kResource, "FFT buffer allocation failed");
  }
  ~FftwComplex() { fftw_free(data); }
  FftwComplex(const FftwComplex&) = delete;
  FftwComplex& operator=(const FftwComplex&) = delete;
  fftw_complex* data;
};

}  // namespace

GlobalPeak global_search(const GrayImage& reference, const GrayImage& deformed,
                         const SubsetSpec& subset) {
  const int M = subset.half_size;
  const int side = subset.side();
  const int W = deformed.width();
  const int H = deformed.height();
  if (subset.x - M < 0 || subset.y - M < 0 || subset.x + M >= reference.width() ||
      subset.y + M >= reference.height()) {
    throw Error(ErrorKind::kOutOfDomain, "reference subset leaves the image");
  }
  if (side > W || side > H) throw Error(ErrorKind::kDimension, "subset larger than the image");

  const std::int64_t n = static_cast<std::int64_t>(side) * side;
  double fsum = 0.0;
  for (int j = -M; j <= M; ++j)
    for (int i = -M; i <= M; ++i) fsum += reference(subset.x + i, subset.y + j);
  const double fmean = fsum / static_cast<double>(n);
  double fss = 0.0;
  for (int j = -M; j <= M; ++j)
    for (int i = -M; i <= M; ++i) {
      const double d = reference(subset.x + i, subset.y + j) - fmean;
      fss += d * d;
    }
  if (fss == 0.0) throw Error(ErrorKind::kDegenerateSubset, "reference subset has no variation");
  const double fnorm = std::sqrt(fss);

  const std::size_t real_size = static_cast<std::size_t>(W) * H;
  const std::size_t half_w = static_cast<std::size_t>(W / 2 + 1);
  const std::size_t cplx_size = static_cast<std::size_t>(H) * half_w;
  FftwBuffer image(real_size), templ(real_size), corr(real_size);
  FftwComplex image_hat(cplx_size), templ_hat(cplx_size);

  fftw_plan fwd_image, fwd_templ, inverse;
  {
    std::lock_guard lock(fftw_planner_mutex());
    fwd_image = fftw_plan_dft_r2c_2d(H, W, image.data, image_hat.data, FFTW_ESTIMATE);
    fwd_templ = fftw_plan_dft_r2c_2d(H, W, templ.data, templ_hat.data, FFTW_ESTIMATE);
    inverse = fftw_plan_dft_c2r_2d(H, W, image_hat.data, corr.data, FFTW_ESTIMATE);
  }

  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) image.data[static_cast<std::size_t>(y) * W + x] = deformed(x, y);
  std::fill(templ.data, templ.data + real_size, 0.0);
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i)
      templ.data[static_cast<std::size_t>(j) * W + i] =
          reference(subset.x - M + i, subset.y - M + j) - fmean;

  fftw_execute(fwd_image);
  fftw_execute(fwd_templ);
  for (std::size_t k = 0; k < cplx_size; ++k) {
    const double ar = image_hat.data[k][0], ai = image_hat.data[k][1];
    const double br = templ_hat.data[k][0], bi = -templ_hat.data[k][1];
    image_hat.data[k][0] = ar * br - ai * bi;
    image_hat.data[k][1] = ar * bi + ai * br;
  }
  fftw_execute(inverse);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_image);
    fftw_destroy_plan(fwd_templ);
    fftw_destroy_plan(inverse);
  }

  detail::SummedArea gsum(W, H), gsq(W, H);
  gsum.fill([&](int x, int y) { return static_cast<std::int64_t>(deformed(x, y)); });
  gsq.fill([&](int x, int y) {
    const std::int64_t g = deformed(x, y);
    return g * g;
  });

  const double scale = 1.0 / static_cast<double>(real_size);
  GlobalPeak best;
  bool found = false;
  double best_cc = -std::numeric_limits<double>::infinity();
  for (int py = 0; py + side <= H; ++py) {
    for (int px = 0; px + side <= W; ++px) {
      const std::int64_t sg = gsum.sum(px, py, px + side - 1, py + side - 1);
      const std::int64_t sgg = gsq.sum(px, py, px + side - 1, py + side - 1);
      const std::int64_t var = n * sgg - sg * sg;
      if (var <= 0) continue;
      const double gnorm = std::sqrt(static_cast<double>(var) / static_cast<double>(n));
      const double cc = corr.data[static_cast<std::size_t>(py) * W + px] * scale / (fnorm * gnorm);
      const int du = px + M - subset.x;
      const int dv = py + M - subset.y;
      bool take = !found || cc > best_cc;
      if (found && cc == best_cc) {
        const int l1 = std::abs(du) + std::abs(dv);
        const int best_l1 = std::abs(best.du) + std::abs(best.dv);
        take = l1 < best_l1 || (l1 == best_l1 && (du < best.du || (du == best.du && dv < best.dv)));
      }
      if (take) {
        best = {du, dv, cc};
        best_cc = cc;
        found = true;
      }
    }
  }
  if (!found) throw Error(ErrorKind::kDegenerateSubset, "deformed image has no textured subset");
  return best;
}

}  // namespace distress

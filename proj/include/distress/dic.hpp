#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "distress/image.hpp"
#include "distress/interp.hpp"

namespace distress {

/// A (2M+1) x (2M+1) window centered on an integer reference pixel.
struct SubsetSpec {
  int x = 0;
  int y = 0;
  int half_size = 10;

  int side() const { return 2 * half_size + 1; }
};

/// First-order subset shape: displacement of the center (px) and its four
/// displacement gradients.
struct ShapeParams {
  double u = 0.0;
  double v = 0.0;
  double ux = 0.0;
  double uy = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

enum class MatchStatus {
  kConverged,
  kMaxIterations,
  kDegenerateSubset,
  kOutOfSearchRange,
  kPeakFitFallback,  ///< Basic DIC: biparabolic fit rejected, integer peak kept
  kDiverged,         ///< Extended DIC: a gradient left the small-deformation bound
};

std::string_view to_string(MatchStatus status);
MatchStatus match_status_from_string(std::string_view name);

struct MatchResult {
  ShapeParams params;
  double cc = 0.0;  ///< zero-normalized cross-correlation at the solution
  int iterations = 0;
  MatchStatus status = MatchStatus::kConverged;

  bool converged() const { return status == MatchStatus::kConverged; }
};

// ---------------------------------------------------------------------------
// Correlation criteria

/// Zero-normalized cross-correlation of two equally sized intensity sets.
/// Throws Error(kDegenerateSubset) when either set has no intensity
/// variation and Error(kDimension) on a size mismatch.
double zncc(std::span<const double> f, std::span<const double> g);
/// Zero-normalized sum of squared differences; equals 2 - 2 * zncc.
double znssd(std::span<const double> f, std::span<const double> g);

/// ZNCC from exact integer window sums over n samples. Returns 0 when the
/// deformed window is flat.
double zncc_from_sums(std::int64_t n, std::int64_t sf, std::int64_t sff, std::int64_t sg,
                      std::int64_t sgg, std::int64_t sfg);

struct SubsetSizeRule {
  int size = 0;                 ///< odd side length in pixels
  bool ratio_warning = false;   ///< r_a and r_d differ by more than half
};

/// Smallest recommended subset side: image_size * (2 r_a - r_d), rounded up
/// to an odd integer. Throws Error(kParameter) for a non-positive result.
SubsetSizeRule min_subset_size(int image_size, double r_a, double r_d);

// ---------------------------------------------------------------------------
// Basic DIC: integer search + biparabolic peak fit

struct IntegerPeak {
  int du = 0;
  int dv = 0;
  /// Correlation at offsets (du + a, dv + b), a, b in {-1, 0, 1}, stored
  /// row-major by b then a.
  std::array<double, 9> cc_map{};
  bool on_boundary = false;  ///< peak touches the search window edge
};

/// Exhaustive ZNCC search over integer offsets |du|, |dv| <= search_radius.
/// Ties go to the smallest |du| + |dv|, then lexicographic (du, dv).
/// Throws Error(kDegenerateSubset) for a flat reference subset and
/// Error(kOutOfDomain) when the search window leaves either image.
IntegerPeak integer_search(const GrayImage& reference, const GrayImage& deformed,
                           const SubsetSpec& subset, int search_radius);

struct PeakFit {
  double dx = 0.0;
  double dy = 0.0;
  bool ok = false;
};

/// Least-squares fit of c = a0 + a1 x + a2 y + a3 x^2 + a4 y^2 + a5 x y to
/// a 3x3 correlation stencil. Closed form on the symmetric stencil:
///   a1 = (sum_{x=1} - sum_{x=-1}) / 6      a2 likewise in y
///   a5 = (c(1,1) + c(-1,-1) - c(1,-1) - c(-1,1)) / 4
///   a3 = Sx / 2 - S / 3                    a4 = Sy / 2 - S / 3
/// with S the stencil sum and Sx (Sy) the sum over x = +-1 (y = +-1). The
/// peak is the stationary point; ok is false unless the surface is concave
/// and the peak lies inside (-1, 1)^2.
PeakFit fit_biparabolic(const std::array<double, 9>& cc_map);

MatchResult basic_dic(const GrayImage& reference, const GrayImage& deformed,
                      const SubsetSpec& subset, int search_radius);

// ---------------------------------------------------------------------------
// Extended DIC: Newton iterations over the six shape parameters

struct NewtonOptions {
  int max_iterations = 40;
  double param_tol = 0.5e-8;  ///< on |change of parameter sum| and max |change|
  double cc_tol = 1e-8;
  int max_halvings = 8;
  double gradient_bound = 0.5;
};

/// Minimizes ZNSSD between the integer-sampled reference subset and the
/// spline-sampled deformed subset under the first-order warp
///   x' = x + u + ux dx + uy dy,  y' = y + v + vx dx + vy dy.
/// Uses Newton steps on the exact Hessian of the criterion, falling back to
/// the Gauss-Newton matrix where the Hessian is not positive definite. A
/// step that worsens the criterion is halved (up to max_halvings times) and
/// the attempt counts as one iteration.
MatchResult extended_dic(const GrayImage& reference, const SplineImage& deformed,
                         const SubsetSpec& subset, const ShapeParams& initial_guess,
                         const NewtonOptions& options = {});

/// Pixel-level ZNCC over every feasible subset position of the deformed
/// image (FFT for the cross term, summed-area tables for the norms).
struct GlobalPeak {
  int du = 0;
  int dv = 0;
  double cc = 0.0;
};
GlobalPeak global_search(const GrayImage& reference, const GrayImage& deformed,
                         const SubsetSpec& subset);

// ---------------------------------------------------------------------------
// Full-field matching

enum class Engine { kBasic, kExtended };

std::string_view to_string(Engine engine);
Engine engine_from_string(std::string_view name);

/// Regular measurement grid; node (i, j) is centered at
/// (origin_x + i * stride, origin_y + j * stride).
struct MeasurementGrid {
  int origin_x = 0;
  int origin_y = 0;
  int stride = 10;
  int nx = 0;
  int ny = 0;
  int half_size = 10;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  SubsetSpec at(int i, int j) const {
    return {origin_x + i * stride, origin_y + j * stride, half_size};
  }
  std::vector<SubsetSpec> subsets() const;
};

/// Largest grid that keeps every subset plus `margin` extra pixels inside a
/// width x height image.
MeasurementGrid make_grid(int width, int height, int half_size, int stride, int margin);

struct FullFieldOptions {
  int search_radius = 3;
  /// Extended engine: the first node's pixel-level seed searches the whole
  /// feasible image when negative, else only offsets within this radius.
  int seed_radius = -1;
  NewtonOptions newton;
  int workers = 1;
};

struct FullFieldResult {
  std::vector<MatchResult> points;  ///< row-major over the grid
  double matching_seconds = 0.0;
  double interpolation_seconds = 0.0;  ///< spline build (Extended only)
};

/// Basic engine: independent points, each searched over the window of
/// integer offsets. Extended engine: the first node is seeded by
/// global_search, later nodes warm-start from their nearest processed
/// neighbour (left in the row; the row start uses the previous row start).
FullFieldResult full_field(const GrayImage& reference, const GrayImage& deformed,
                           const MeasurementGrid& grid, Engine engine,
                           const FullFieldOptions& options);

/// As full_field with the Extended engine, reusing a prebuilt spline.
FullFieldResult full_field_extended(const GrayImage& reference, const SplineImage& deformed_spline,
                                    const GrayImage& deformed, const MeasurementGrid& grid,
                                    const FullFieldOptions& options);

}  // namespace distress

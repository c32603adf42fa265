#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "distress/dic.hpp"
#include "distress/fields.hpp"
#include "distress/strain.hpp"
#include "distress/synth.hpp"

namespace distress {

/// Absolute displacement errors of one point, in px.
struct PointError {
  double eu = 0.0;
  double ev = 0.0;
  double e2e = 0.0;
  int iterations = 0;
};

PointError point_errors(const ShapeParams& measured, const Displacement& truth_px);

/// Errors of every converged point against the field evaluated at the
/// undeformed subset centres. Non-converged points are only counted.
struct ErrorSet {
  std::vector<PointError> errors;
  std::size_t n_failed = 0;
};

ErrorSet collect_errors(const MeasurementGrid& grid, const std::vector<MatchResult>& results,
                        const DeformationField& truth, const PixelMapping& mapping);

struct Timings {
  double matching_seconds = 0.0;
  double interpolation_seconds = 0.0;
  std::size_t subsets = 0;
};

struct ErrorStats {
  double mean_abs_u = 0.0;
  double mean_abs_v = 0.0;
  double std_u = 0.0;
  double std_v = 0.0;
  double mean_e2e = 0.0;
  double std_e2e = 0.0;
  std::size_t n_points = 0;
  std::size_t n_failed = 0;
  double wall_time_per_subset = 0.0;
  double interpolation_time = 0.0;
  double mean_iterations = 0.0;

  double failure_fraction() const;
  /// More than 5% of the points failed.
  bool flagged() const { return failure_fraction() > 0.05; }
};

/// Means and population standard deviations. Throws Error(kAggregation)
/// when there are no points.
ErrorStats aggregate(std::span<const PointError> errors, std::size_t n_failed,
                     const Timings& timings = {});

struct StrainRms {
  double ex = 0.0;
  double ey = 0.0;
  double gxy = 0.0;
};

/// Node-wise RMS of reconstructed minus analytic strain over valid nodes.
/// Throws Error(kAggregation) when no node is valid.
StrainRms strain_errors(const FieldGrid& recon, const DeformationField& truth,
                        const PixelMapping& mapping);

}  // namespace distress

#pragma once

#include <string_view>
#include <vector>

#include "distress/dic.hpp"

namespace distress {

/// Multi-channel values on a regular measurement grid, with a validity mask.
/// Node (i, j) sits at pixel (origin_x + i * stride, origin_y + j * stride).
struct FieldGrid {
  int origin_x = 0;
  int origin_y = 0;
  int stride = 1;
  int nx = 0;
  int ny = 0;
  int channels = 0;
  std::vector<double> values;  ///< (j * nx + i) * channels + c
  std::vector<char> valid;     ///< j * nx + i

  FieldGrid() = default;
  FieldGrid(const MeasurementGrid& grid, int channels);

  std::size_t node(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  double& at(int i, int j, int c) { return values[node(i, j) * channels + c]; }
  double at(int i, int j, int c) const { return values[node(i, j) * channels + c]; }
  bool ok(int i, int j) const { return valid[node(i, j)] != 0; }
  std::size_t valid_count() const;
};

/// Channels (u, v) in px; nodes are valid where the match converged.
FieldGrid displacement_grid(const MeasurementGrid& grid, const std::vector<MatchResult>& results);

/// Moving average over the (2n+1)^2 window of valid nodes, truncated at the
/// grid edges. Nodes whose window holds no valid node become invalid.
FieldGrid smooth(const FieldGrid& grid, int half_width);

/// (u, v) -> (ex, ey, gxy) by central differences, one-sided at edges and
/// next to invalid nodes.
FieldGrid differentiate(const FieldGrid& displacement);

/// (ex, ey, gxy) read directly from Extended DIC gradients. Throws
/// Error(kParameter) when every valid node has zero gradients, which is what
/// the Basic engine reports.
FieldGrid strain_from_gradients(const MeasurementGrid& grid,
                                const std::vector<MatchResult>& results);

enum class StrainMethod { kDiff, kSmoothThenDiff, kGradients, kGradientsThenSmooth };

std::string_view to_string(StrainMethod method);
StrainMethod strain_method_from_string(std::string_view name);

/// Smoothing window in px: subset_size / 2 rounded to the nearest odd size.
int filter_window(int subset_size);
/// Node half-width covering a pixel window at the given grid stride.
int filter_half_width(int window_px, int stride);

/// Runs one reconstruction method. window_px <= 0 selects filter_window.
FieldGrid strain_pipeline(StrainMethod method, const MeasurementGrid& grid,
                          const std::vector<MatchResult>& results, int subset_size,
                          int window_px = 0);

}  // namespace distress

#include "distress/strain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "distress/error.hpp"

namespace distress {

FieldGrid::FieldGrid(const MeasurementGrid& grid, int channel_count)
    : origin_x(grid.origin_x),
      origin_y(grid.origin_y),
      stride(grid.stride),
      nx(grid.nx),
      ny(grid.ny),
      channels(channel_count),
      values(grid.size() * static_cast<std::size_t>(channel_count), 0.0),
      valid(grid.size(), 0) {}

std::size_t FieldGrid::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

namespace {

void check_results(const MeasurementGrid& grid, const std::vector<MatchResult>& results) {
  if (results.size() != grid.size()) {
    throw Error(ErrorKind::kDimension, "result count does not match the grid");
  }
}

FieldGrid like(const FieldGrid& g, int channels) {
  FieldGrid out;
  out.origin_x = g.origin_x;
  out.origin_y = g.origin_y;
  out.stride = g.stride;
  out.nx = g.nx;
  out.ny = g.ny;
  out.channels = channels;
  out.values.assign(static_cast<std::size_t>(g.nx) * g.ny * channels, 0.0);
  out.valid.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
  return out;
}

// Derivative of channel c along one axis at node (i, j); false when no
// difference can be formed.
bool axis_derivative(const FieldGrid& g, int i, int j, int c, int di, int dj, double& out) {
  const int ip = i + di, jp = j + dj, im = i - di, jm = j - dj;
  const bool plus = ip < g.nx && jp < g.ny && g.ok(ip, jp);
  const bool minus = im >= 0 && jm >= 0 && g.ok(im, jm);
  const double h = g.stride;
  if (plus && minus) {
    out = (g.at(ip, jp, c) - g.at(im, jm, c)) / (2.0 * h);
  } else if (plus) {
    out = (g.at(ip, jp, c) - g.at(i, j, c)) / h;
  } else if (minus) {
    out = (g.at(i, j, c) - g.at(im, jm, c)) / h;
  } else {
    return false;
  }
  return true;
}

}  // namespace

FieldGrid displacement_grid(const MeasurementGrid& grid, const std::vector<MatchResult>& results) {
  check_results(grid, results);
  FieldGrid out(grid, 2);
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (!results[k].converged()) continue;
    out.valid[k] = 1;
    out.values[2 * k] = results[k].params.u;
    out.values[2 * k + 1] = results[k].params.v;
  }
  return out;
}

FieldGrid smooth(const FieldGrid& grid, int n) {
  if (n < 0) throw Error(ErrorKind::kParameter, "smoothing half-width must be non-negative");
  FieldGrid out = like(grid, grid.channels);
  std::vector<double> acc(static_cast<std::size_t>(grid.channels));
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      int count = 0;
      for (int b = std::max(0, j - n); b <= std::min(grid.ny - 1, j + n); ++b) {
        for (int a = std::max(0, i - n); a <= std::min(grid.nx - 1, i + n); ++a) {
          if (!grid.ok(a, b)) continue;
          for (int c = 0; c < grid.channels; ++c) acc[c] += grid.at(a, b, c);
          ++count;
        }
      }
      if (count == 0) continue;
      out.valid[out.node(i, j)] = 1;
      for (int c = 0; c < grid.channels; ++c) out.at(i, j, c) = acc[c] / count;
    }
  }
  return out;
}

FieldGrid differentiate(const FieldGrid& disp) {
  if (disp.channels != 2) throw Error(ErrorKind::kDimension, "differentiate expects (u, v) grids");
  FieldGrid out = like(disp, 3);
  for (int j = 0; j < disp.ny; ++j) {
    for (int i = 0; i < disp.nx; ++i) {
      if (!disp.ok(i, j)) continue;
      double ux, uy, vx, vy;
      if (!axis_derivative(disp, i, j, 0, 1, 0, ux) || !axis_derivative(disp, i, j, 0, 0, 1, uy) ||
          !axis_derivative(disp, i, j, 1, 1, 0, vx) || !axis_derivative(disp, i, j, 1, 0, 1, vy)) {
        continue;
      }
      out.valid[out.node(i, j)] = 1;
      out.at(i, j, 0) = ux;
      out.at(i, j, 1) = vy;
      out.at(i, j, 2) = uy + vx;
    }
  }
  return out;
}

FieldGrid strain_from_gradients(const MeasurementGrid& grid,
                                const std::vector<MatchResult>& results) {
  check_results(grid, results);
  FieldGrid out(grid, 3);
  bool any_gradient = false;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const MatchResult& r = results[k];
    if (!r.converged()) continue;
    out.valid[k] = 1;
    out.values[3 * k] = r.params.ux;
    out.values[3 * k + 1] = r.params.vy;
    out.values[3 * k + 2] = r.params.uy + r.params.vx;
    if (r.params.ux != 0.0 || r.params.uy != 0.0 || r.params.vx != 0.0 || r.params.vy != 0.0) {
      any_gradient = true;
    }
  }
  if (!any_gradient) {
    throw Error(ErrorKind::kParameter,
                "results carry no displacement gradients (Basic engine output?)");
  }
  return out;
}

std::string_view to_string(StrainMethod method) {
  switch (method) {
    case StrainMethod::kDiff: return "diff";
    case StrainMethod::kSmoothThenDiff: return "smooth-then-diff";
    case StrainMethod::kGradients: return "gradients";
    case StrainMethod::kGradientsThenSmooth: return "gradients-then-smooth";
  }
  return "unknown";
}

StrainMethod strain_method_from_string(std::string_view name) {
  for (StrainMethod m : {StrainMethod::kDiff, StrainMethod::kSmoothThenDiff,
                         StrainMethod::kGradients, StrainMethod::kGradientsThenSmooth}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorKind::kUsage, "unknown strain method '" + std::string(name) + "'");
}

int filter_window(int subset_size) {
  const double half = subset_size / 2.0;
  return 2 * static_cast<int>(std::floor(half / 2.0)) + 1;
}

int filter_half_width(int window_px, int stride) {
  if (window_px < 1 || stride < 1) throw Error(ErrorKind::kParameter, "bad filter window");
  return static_cast<int>(std::lround(((window_px - 1) / 2.0) / stride));
}

FieldGrid strain_pipeline(StrainMethod method, const MeasurementGrid& grid,
                          const std::vector<MatchResult>& results, int subset_size,
                          int window_px) {
  const int window = window_px > 0 ? window_px : filter_window(subset_size);
  const int n = filter_half_width(window, grid.stride);
  switch (method) {
    case StrainMethod::kDiff: return differentiate(displacement_grid(grid, results));
    case StrainMethod::kSmoothThenDiff:
      return differentiate(smooth(displacement_grid(grid, results), n));
    case StrainMethod::kGradients: return strain_from_gradients(grid, results);
    case StrainMethod::kGradientsThenSmooth:
      return smooth(strain_from_gradients(grid, results), n);
  }
  throw Error(ErrorKind::kParameter, "unknown strain method");
}

}  // namespace distress

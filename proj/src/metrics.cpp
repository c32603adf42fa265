#include "distress/metrics.hpp"

#include <cmath>

#include "distress/error.hpp"

namespace distress {

PointError point_errors(const ShapeParams& measured, const Displacement& truth_px) {
  PointError e;
  e.eu = std::abs(measured.u - truth_px.u);
  e.ev = std::abs(measured.v - truth_px.v);
  e.e2e = std::hypot(e.eu, e.ev);
  return e;
}

ErrorSet collect_errors(const MeasurementGrid& grid, const std::vector<MatchResult>& results,
                        const DeformationField& truth, const PixelMapping& mapping) {
  if (results.size() != grid.size()) {
    throw Error(ErrorKind::kDimension, "result count does not match the grid");
  }
  ErrorSet set;
  set.errors.reserve(results.size());
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const MatchResult& r = results[static_cast<std::size_t>(j) * grid.nx + i];
      if (!r.converged()) {
        ++set.n_failed;
        continue;
      }
      const SubsetSpec s = grid.at(i, j);
      const Displacement d = truth.displacement(mapping.phys_x(s.x), mapping.phys_y(s.y));
      PointError e = point_errors(r.params, Displacement{mapping.to_px(d.u), mapping.to_px(d.v)});
      e.iterations = r.iterations;
      set.errors.push_back(e);
    }
  }
  return set;
}

double ErrorStats::failure_fraction() const {
  const std::size_t total = n_points + n_failed;
  return total == 0 ? 0.0 : static_cast<double>(n_failed) / static_cast<double>(total);
}

ErrorStats aggregate(std::span<const PointError> errors, std::size_t n_failed,
                     const Timings& timings) {
  if (errors.empty()) throw Error(ErrorKind::kAggregation, "no converged points to aggregate");
  const double n = static_cast<double>(errors.size());
  ErrorStats s;
  double iters = 0.0;
  for (const PointError& e : errors) {
    s.mean_abs_u += e.eu;
    s.mean_abs_v += e.ev;
    s.mean_e2e += e.e2e;
    iters += e.iterations;
  }
  s.mean_abs_u /= n;
  s.mean_abs_v /= n;
  s.mean_e2e /= n;
  for (const PointError& e : errors) {
    s.std_u += (e.eu - s.mean_abs_u) * (e.eu - s.mean_abs_u);
    s.std_v += (e.ev - s.mean_abs_v) * (e.ev - s.mean_abs_v);
    s.std_e2e += (e.e2e - s.mean_e2e) * (e.e2e - s.mean_e2e);
  }
  s.std_u = std::sqrt(s.std_u / n);
  s.std_v = std::sqrt(s.std_v / n);
  s.std_e2e = std::sqrt(s.std_e2e / n);
  s.n_points = errors.size();
  s.n_failed = n_failed;
  s.mean_iterations = iters / n;
  if (timings.subsets > 0) {
    s.wall_time_per_subset = timings.matching_seconds / static_cast<double>(timings.subsets);
  }
  s.interpolation_time = timings.interpolation_seconds;
  return s;
}

StrainRms strain_errors(const FieldGrid& recon, const DeformationField& truth,
                        const PixelMapping& mapping) {
  if (recon.channels != 3) throw Error(ErrorKind::kDimension, "strain grids have 3 channels");
  StrainRms rms;
  std::size_t count = 0;
  for (int j = 0; j < recon.ny; ++j) {
    for (int i = 0; i < recon.nx; ++i) {
      if (!recon.ok(i, j)) continue;
      const int px = recon.origin_x + i * recon.stride;
      const int py = recon.origin_y + j * recon.stride;
      const Strain t = truth.strain(mapping.phys_x(px), mapping.phys_y(py));
      const double dx = recon.at(i, j, 0) - t.ex;
      const double dy = recon.at(i, j, 1) - t.ey;
      const double dg = recon.at(i, j, 2) - t.gxy;
      rms.ex += dx * dx;
      rms.ey += dy * dy;
      rms.gxy += dg * dg;
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorKind::kAggregation, "strain grid has no valid nodes");
  const double n = static_cast<double>(count);
  rms.ex = std::sqrt(rms.ex / n);
  rms.ey = std::sqrt(rms.ey / n);
  rms.gxy = std::sqrt(rms.gxy / n);
  return rms;
}

}  // namespace distress

#include <algorithm>
#include <chrono>
#include <optional>
#include <thread>

#include "detail.hpp"
#include "distress/dic.hpp"
#include "distress/error.hpp"

namespace distress {

std::vector<SubsetSpec> MeasurementGrid::subsets() const {
  std::vector<SubsetSpec> out;
  out.reserve(size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out.push_back(at(i, j));
  return out;
}

MeasurementGrid make_grid(int width, int height, int half_size, int stride, int margin) {
  if (stride < 1) throw Error(ErrorKind::kParameter, "grid stride must be at least 1");
  if (half_size < 0 || margin < 0) throw Error(ErrorKind::kParameter, "negative subset margin");
  MeasurementGrid grid;
  grid.stride = stride;
  grid.half_size = half_size;
  const int reach = half_size + margin;
  auto axis = [&](int extent, int& origin, int& count) {
    const int span = extent - 1 - 2 * reach;
    if (span < 0) {
      origin = reach;
      count = 0;
      return;
    }
    count = span / stride + 1;
    origin = reach + (span - (count - 1) * stride) / 2;
  };
  axis(width, grid.origin_x, grid.nx);
  axis(height, grid.origin_y, grid.ny);
  return grid;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename Fn>
void parallel_rows(int rows, int workers, Fn&& work) {
  if (workers <= 1 || rows <= 1) {
    for (int j = 0; j < rows; ++j) work(j);
    return;
  }
  const int n = std::min(workers, rows);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    pool.emplace_back([&, t] {
      for (int j = t; j < rows; j += n) work(j);
    });
  }
  for (auto& th : pool) th.join();
}

class ExtendedGridRunner {
 public:
  ExtendedGridRunner(const GrayImage& reference, const SplineImage& spline,
                     const GrayImage& deformed, const MeasurementGrid& grid,
                     const FullFieldOptions& options)
      : reference_(reference),
        spline_(spline),
        deformed_(deformed),
        grid_(grid),
        options_(options),
        results_(grid.size()) {}

  std::vector<MatchResult> run() {
    // Column 0 is a sequential chain seeded by the global search; every row
    // then proceeds left to right from its first node.
    std::optional<Warm> seed;
    for (int j = 0; j < grid_.ny; ++j) {
      seed = solve(0, j, seed);
    }
    parallel_rows(grid_.ny, options_.workers, [&](int j) {
      std::optional<Warm> guess;
      if (at(0, j).converged()) guess = Warm{at(0, j).params, grid_.at(0, j)};
      for (int i = 1; i < grid_.nx; ++i) guess = solve(i, j, guess);
    });
    return std::move(results_);
  }

 private:
  MatchResult& at(int i, int j) {
    return results_[static_cast<std::size_t>(j) * grid_.nx + static_cast<std::size_t>(i)];
  }

  struct Warm {
    ShapeParams params;
    SubsetSpec at;
  };

  // Solves node (i, j) from the warm start if there is one, otherwise from
  // a full-image pixel-level search. Returns the warm start for the next
  // node: this result if it converged, else the previous warm start.
  std::optional<Warm> solve(int i, int j, std::optional<Warm> warm) {
    const SubsetSpec subset = grid_.at(i, j);
    MatchResult& out = at(i, j);
    ShapeParams guess;
    if (warm) {
      // First-order extrapolation of the neighbour's displacement.
      guess = warm->params;
      const double dx = subset.x - warm->at.x;
      const double dy = subset.y - warm->at.y;
      guess.u += guess.ux * dx + guess.uy * dy;
      guess.v += guess.vx * dx + guess.vy * dy;
    } else {
      try {
        if (options_.seed_radius < 0) {
          const GlobalPeak peak = global_search(reference_, deformed_, subset);
          guess.u = peak.du;
          guess.v = peak.dv;
        } else {
          const IntegerPeak peak =
              integer_search(reference_, deformed_, subset, std::max(1, options_.seed_radius));
          guess.u = peak.du;
          guess.v = peak.dv;
        }
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kDegenerateSubset) {
          out.status = MatchStatus::kDegenerateSubset;
        } else if (e.kind() == ErrorKind::kOutOfDomain) {
          out.status = MatchStatus::kOutOfSearchRange;
        } else {
          throw;
        }
        return warm;
      }
    }
    out = extended_dic(reference_, spline_, subset, guess, options_.newton);
    if (out.converged()) return Warm{out.params, subset};
    return warm;
  }

  const GrayImage& reference_;
  const SplineImage& spline_;
  const GrayImage& deformed_;
  const MeasurementGrid& grid_;
  const FullFieldOptions& options_;
  std::vector<MatchResult> results_;
};

}  // namespace

FullFieldResult full_field_extended(const GrayImage& reference, const SplineImage& deformed_spline,
                                    const GrayImage& deformed, const MeasurementGrid& grid,
                                    const FullFieldOptions& options) {
  FullFieldResult out;
  const auto start = std::chrono::steady_clock::now();
  out.points = ExtendedGridRunner(reference, deformed_spline, deformed, grid, options).run();
  out.matching_seconds = seconds_since(start);
  out.interpolation_seconds = deformed_spline.build_seconds();
  return out;
}

FullFieldResult full_field(const GrayImage& reference, const GrayImage& deformed,
                           const MeasurementGrid& grid, Engine engine,
                           const FullFieldOptions& options) {
  if (reference.width() != deformed.width() || reference.height() != deformed.height()) {
    throw Error(ErrorKind::kDimension, "reference and deformed images differ in size");
  }
  if (engine == Engine::kExtended) {
    const SplineImage spline(deformed);
    return full_field_extended(reference, spline, deformed, grid, options);
  }
  FullFieldResult out;
  const auto start = std::chrono::steady_clock::now();
  out.points = detail::basic_grid(reference, deformed, grid, options.search_radius);
  out.matching_seconds = seconds_since(start);
  return out;
}

}  // namespace distress

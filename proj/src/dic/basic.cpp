#include <cmath>
#include <cstdlib>
#include <limits>

#include "detail.hpp"
#include "distress/dic.hpp"
#include "distress/error.hpp"

namespace distress {

namespace detail {

IntegerPeak select_peak(std::span<const double> table, int search_radius) {
  const int R = search_radius;
  const int w = 2 * R + 1;
  IntegerPeak peak;
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (int dv = -R; dv <= R; ++dv) {
    for (int du = -R; du <= R; ++du) {
      const double c = table[static_cast<std::size_t>((dv + R) * w + (du + R))];
      bool take = !found || c > best;
      if (found && c == best) {
        const int l1 = std::abs(du) + std::abs(dv);
        const int best_l1 = std::abs(peak.du) + std::abs(peak.dv);
        take = l1 < best_l1 || (l1 == best_l1 && (du < peak.du || (du == peak.du && dv < peak.dv)));
      }
      if (take) {
        best = c;
        peak.du = du;
        peak.dv = dv;
        found = true;
      }
    }
  }
  peak.on_boundary = std::abs(peak.du) == R || std::abs(peak.dv) == R;
  for (int b = -1; b <= 1; ++b) {
    for (int a = -1; a <= 1; ++a) {
      const int du = peak.du + a;
      const int dv = peak.dv + b;
      double c = std::numeric_limits<double>::quiet_NaN();
      if (std::abs(du) <= R && std::abs(dv) <= R) {
        c = table[static_cast<std::size_t>((dv + R) * w + (du + R))];
      }
      peak.cc_map[static_cast<std::size_t>((b + 1) * 3 + (a + 1))] = c;
    }
  }
  return peak;
}

MatchResult basic_from_peak(const IntegerPeak& peak) {
  MatchResult result;
  result.params.u = peak.du;
  result.params.v = peak.dv;
  result.cc = peak.cc_map[4];
  if (peak.on_boundary) {
    result.status = MatchStatus::kOutOfSearchRange;
    return result;
  }
  const PeakFit fit = fit_biparabolic(peak.cc_map);
  if (!fit.ok) {
    result.status = MatchStatus::kPeakFitFallback;
    return result;
  }
  result.params.u += fit.dx;
  result.params.v += fit.dy;
  result.status = MatchStatus::kConverged;
  return result;
}

MatchResult basic_from_table(std::span<const double> table, int search_radius) {
  return basic_from_peak(select_peak(table, search_radius));
}

}  // namespace detail

namespace {

bool window_fits(const GrayImage& image, const SubsetSpec& s, int radius) {
  const int reach = s.half_size + radius;
  return s.x - reach >= 0 && s.y - reach >= 0 && s.x + reach <= image.width() - 1 &&
         s.y + reach <= image.height() - 1;
}

}  // namespace

IntegerPeak integer_search(const GrayImage& reference, const GrayImage& deformed,
                           const SubsetSpec& subset, int search_radius) {
  if (search_radius < 1) throw Error(ErrorKind::kParameter, "search radius must be at least 1");
  if (!window_fits(reference, subset, 0) || !window_fits(deformed, subset, search_radius)) {
    throw Error(ErrorKind::kOutOfDomain, "search window leaves the image");
  }
  const int M = subset.half_size;
  const std::int64_t n = static_cast<std::int64_t>(subset.side()) * subset.side();

  std::int64_t sf = 0, sff = 0;
  for (int y = subset.y - M; y <= subset.y + M; ++y) {
    for (int x = subset.x - M; x <= subset.x + M; ++x) {
      const std::int64_t f = reference(x, y);
      sf += f;
      sff += f * f;
    }
  }
  if (n * sff - sf * sf == 0) {
    throw Error(ErrorKind::kDegenerateSubset, "reference subset has no intensity variation");
  }

  const int R = search_radius;
  const int w = 2 * R + 1;
  std::vector<double> table(static_cast<std::size_t>(w) * w);
  for (int dv = -R; dv <= R; ++dv) {
    for (int du = -R; du <= R; ++du) {
      std::int64_t sg = 0, sgg = 0, sfg = 0;
      for (int y = subset.y - M; y <= subset.y + M; ++y) {
        const auto fr = reference.row(y);
        const auto gr = deformed.row(y + dv);
        for (int x = subset.x - M; x <= subset.x + M; ++x) {
          const std::int64_t f = fr[x];
          const std::int64_t g = gr[x + du];
          sg += g;
          sgg += g * g;
          sfg += f * g;
        }
      }
      table[static_cast<std::size_t>((dv + R) * w + (du + R))] =
          zncc_from_sums(n, sf, sff, sg, sgg, sfg);
    }
  }
  return detail::select_peak(table, R);
}

PeakFit fit_biparabolic(const std::array<double, 9>& cc_map) {
  auto c = [&](int a, int b) { return cc_map[static_cast<std::size_t>((b + 1) * 3 + (a + 1))]; };
  double S = 0.0, Sx = 0.0, Sy = 0.0;
  for (int b = -1; b <= 1; ++b) {
    for (int a = -1; a <= 1; ++a) {
      S += c(a, b);
      if (a != 0) Sx += c(a, b);
      if (b != 0) Sy += c(a, b);
    }
  }
  const double a1 = (c(1, -1) + c(1, 0) + c(1, 1) - c(-1, -1) - c(-1, 0) - c(-1, 1)) / 6.0;
  const double a2 = (c(-1, 1) + c(0, 1) + c(1, 1) - c(-1, -1) - c(0, -1) - c(1, -1)) / 6.0;
  const double a3 = Sx / 2.0 - S / 3.0;
  const double a4 = Sy / 2.0 - S / 3.0;
  const double a5 = (c(1, 1) + c(-1, -1) - c(1, -1) - c(-1, 1)) / 4.0;

  PeakFit fit;
  if (!std::isfinite(S)) return fit;
  // Hessian [[2 a3, a5], [a5, 2 a4]] must be negative definite.
  const double det = 4.0 * a3 * a4 - a5 * a5;
  if (!(a3 < 0.0 && det > 0.0)) return fit;
  fit.dx = (-2.0 * a4 * a1 + a5 * a2) / det;
  fit.dy = (-2.0 * a3 * a2 + a5 * a1) / det;
  fit.ok = std::abs(fit.dx) < 1.0 && std::abs(fit.dy) < 1.0;
  if (!fit.ok) fit.dx = fit.dy = 0.0;
  return fit;
}

MatchResult basic_dic(const GrayImage& reference, const GrayImage& deformed,
                      const SubsetSpec& subset, int search_radius) {
  MatchResult result;
  IntegerPeak peak;
  try {
    peak = integer_search(reference, deformed, subset, search_radius);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kDegenerateSubset) {
      result.status = MatchStatus::kDegenerateSubset;
      return result;
    }
    if (e.kind() == ErrorKind::kOutOfDomain) {
      result.status = MatchStatus::kOutOfSearchRange;
      return result;
    }
    throw;
  }
  return detail::basic_from_peak(peak);
}

namespace detail {

std::vector<MatchResult> basic_grid(const GrayImage& reference, const GrayImage& deformed,
                                    const MeasurementGrid& grid, int search_radius) {
  if (search_radius < 1) throw Error(ErrorKind::kParameter, "search radius must be at least 1");
  if (reference.width() != deformed.width() || reference.height() != deformed.height()) {
    throw Error(ErrorKind::kDimension, "reference and deformed images differ in size");
  }
  const int W = reference.width();
  const int H = reference.height();
  const int R = search_radius;
  const int w = 2 * R + 1;
  const int M = grid.half_size;
  const std::int64_t n = static_cast<std::int64_t>(2 * M + 1) * (2 * M + 1);
  const std::vector<SubsetSpec> subsets = grid.subsets();
  const std::size_t count = subsets.size();

  std::vector<MatchResult> results(count);
  std::vector<char> active(count, 1);
  std::vector<std::int64_t> sf(count), sff(count);

  SummedArea ref_sum(W, H), ref_sq(W, H), def_sum(W, H), def_sq(W, H);
  ref_sum.fill([&](int x, int y) { return static_cast<std::int64_t>(reference(x, y)); });
  ref_sq.fill([&](int x, int y) {
    const std::int64_t f = reference(x, y);
    return f * f;
  });
  def_sum.fill([&](int x, int y) { return static_cast<std::int64_t>(deformed(x, y)); });
  def_sq.fill([&](int x, int y) {
    const std::int64_t g = deformed(x, y);
    return g * g;
  });

  for (std::size_t k = 0; k < count; ++k) {
    const SubsetSpec& s = subsets[k];
    if (!window_fits(reference, s, R)) {
      results[k].status = MatchStatus::kOutOfSearchRange;
      active[k] = 0;
      continue;
    }
    sf[k] = ref_sum.sum(s.x - M, s.y - M, s.x + M, s.y + M);
    sff[k] = ref_sq.sum(s.x - M, s.y - M, s.x + M, s.y + M);
    if (n * sff[k] - sf[k] * sf[k] == 0) {
      results[k].status = MatchStatus::kDegenerateSubset;
      active[k] = 0;
    }
  }

  std::vector<double> tables(count * static_cast<std::size_t>(w) * w, 0.0);
  SummedArea product(W, H);
  for (int dv = -R; dv <= R; ++dv) {
    for (int du = -R; du <= R; ++du) {
      product.fill([&](int x, int y) -> std::int64_t {
        const int xg = x + du;
        const int yg = y + dv;
        if (xg < 0 || yg < 0 || xg >= W || yg >= H) return 0;
        return static_cast<std::int64_t>(reference(x, y)) * deformed(xg, yg);
      });
      const std::size_t slot = static_cast<std::size_t>((dv + R) * w + (du + R));
      for (std::size_t k = 0; k < count; ++k) {
        if (!active[k]) continue;
        const SubsetSpec& s = subsets[k];
        const int x0 = s.x - M, y0 = s.y - M, x1 = s.x + M, y1 = s.y + M;
        const std::int64_t sg = def_sum.sum(x0 + du, y0 + dv, x1 + du, y1 + dv);
        const std::int64_t sgg = def_sq.sum(x0 + du, y0 + dv, x1 + du, y1 + dv);
        const std::int64_t sfg = product.sum(x0, y0, x1, y1);
        tables[k * w * w + slot] = zncc_from_sums(n, sf[k], sff[k], sg, sgg, sfg);
      }
    }
  }

  for (std::size_t k = 0; k < count; ++k) {
    if (!active[k]) continue;
    results[k] = basic_from_table(
        std::span<const double>(tables.data() + k * w * w, static_cast<std::size_t>(w) * w), R);
  }
  return results;
}

}  // namespace detail

}  // namespace distress

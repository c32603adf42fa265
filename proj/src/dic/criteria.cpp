#include <algorithm>
#include <cmath>
#include <string>

#include "distress/dic.hpp"
#include "distress/error.hpp"

namespace distress {

namespace {

struct Normalized {
  double mean;
  double norm;
};

Normalized normalize(std::span<const double> a) {
  double sum = 0.0;
  for (double x : a) sum += x;
  const double mean = sum / static_cast<double>(a.size());
  double ss = 0.0;
  for (double x : a) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss)};
}

void check_pair(std::span<const double> f, std::span<const double> g, Normalized& nf,
                Normalized& ng) {
  if (f.size() != g.size() || f.empty()) {
    throw Error(ErrorKind::kDimension, "correlation needs two non-empty subsets of equal size");
  }
  nf = normalize(f);
  ng = normalize(g);
  if (nf.norm == 0.0 || ng.norm == 0.0) {
    throw Error(ErrorKind::kDegenerateSubset, "subset has no intensity variation");
  }
}

}  // namespace

double zncc(std::span<const double> f, std::span<const double> g) {
  Normalized nf, ng;
  check_pair(f, g, nf, ng);
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) acc += (f[k] - nf.mean) * (g[k] - ng.mean);
  return acc / (nf.norm * ng.norm);
}

double znssd(std::span<const double> f, std::span<const double> g) {
  Normalized nf, ng;
  check_pair(f, g, nf, ng);
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double d = (f[k] - nf.mean) / nf.norm - (g[k] - ng.mean) / ng.norm;
    acc += d * d;
  }
  return acc;
}

double zncc_from_sums(std::int64_t n, std::int64_t sf, std::int64_t sff, std::int64_t sg,
                      std::int64_t sgg, std::int64_t sfg) {
  const std::int64_t num = n * sfg - sf * sg;
  const std::int64_t var_f = n * sff - sf * sf;
  const std::int64_t var_g = n * sgg - sg * sg;
  if (var_f <= 0 || var_g <= 0) return 0.0;
  return static_cast<double>(num) /
         std::sqrt(static_cast<double>(var_f) * static_cast<double>(var_g));
}

SubsetSizeRule min_subset_size(int image_size, double r_a, double r_d) {
  if (image_size <= 0) throw Error(ErrorKind::kParameter, "image size must be positive");
  const double raw = image_size * (2.0 * r_a - r_d);
  if (!(raw > 0.0)) {
    throw Error(ErrorKind::kParameter, "subset size rule gives a non-positive size");
  }
  SubsetSizeRule rule;
  rule.size = static_cast<int>(std::ceil(raw - 1e-9));
  if (rule.size % 2 == 0) ++rule.size;
  rule.ratio_warning = std::abs(r_a - r_d) > 0.5 * std::max(r_a, r_d);
  return rule;
}

std::string_view to_string(MatchStatus status) {
  switch (status) {
    case MatchStatus::kConverged: return "converged";
    case MatchStatus::kMaxIterations: return "max-iterations";
    case MatchStatus::kDegenerateSubset: return "degenerate-subset";
    case MatchStatus::kOutOfSearchRange: return "out-of-search-range";
    case MatchStatus::kPeakFitFallback: return "peak-fit-fallback";
    case MatchStatus::kDiverged: return "diverged";
  }
  return "unknown";
}

MatchStatus match_status_from_string(std::string_view name) {
  for (auto s : {MatchStatus::kConverged, MatchStatus::kMaxIterations,
                 MatchStatus::kDegenerateSubset, MatchStatus::kOutOfSearchRange,
                 MatchStatus::kPeakFitFallback, MatchStatus::kDiverged}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorKind::kParameter, "unknown match status \"" + std::string(name) + "\"");
}

std::string_view to_string(Engine engine) {
  return engine == Engine::kBasic ? "basic" : "extended";
}

Engine engine_from_string(std::string_view name) {
  if (name == "basic") return Engine::kBasic;
  if (name == "extended") return Engine::kExtended;
  throw Error(ErrorKind::kUsage, "unknown engine \"" + std::string(name) + "\"");
}

}  // namespace distress

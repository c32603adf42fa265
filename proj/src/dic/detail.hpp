#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "distress/dic.hpp"

namespace distress::detail {

/// Inclusive 2-D prefix sums with a zero first row/column.
class SummedArea {
 public:
  SummedArea() = default;
  SummedArea(int width, int height) { resize(width, height); }

  void resize(int width, int height) {
    width_ = width;
    height_ = height;
    data_.assign(static_cast<std::size_t>(width + 1) * static_cast<std::size_t>(height + 1), 0);
  }

  template <typename Fn>
  void fill(Fn value_at) {
    const std::size_t s = static_cast<std::size_t>(width_) + 1;
    for (int y = 0; y < height_; ++y) {
      std::int64_t run = 0;
      std::int64_t* row = data_.data() + (static_cast<std::size_t>(y) + 1) * s;
      const std::int64_t* above = row - s;
      for (int x = 0; x < width_; ++x) {
        run += value_at(x, y);
        row[x + 1] = above[x + 1] + run;
      }
    }
  }

  /// Sum over the inclusive rectangle [x0, x1] x [y0, y1].
  std::int64_t sum(int x0, int y0, int x1, int y1) const {
    const std::size_t s = static_cast<std::size_t>(width_) + 1;
    auto at = [&](int x, int y) { return data_[static_cast<std::size_t>(y) * s + x]; };
    return at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> data_;
};

/// Picks the integer peak out of a (2R+1)^2 correlation table indexed
/// (dv + R) * (2R + 1) + (du + R), applying the tie-breaking rules.
IntegerPeak select_peak(std::span<const double> table, int search_radius);

/// Basic DIC result from an integer peak: biparabolic refinement or a
/// flagged fallback.
MatchResult basic_from_peak(const IntegerPeak& peak);

/// Converts a search table into a Basic DIC result (peak + biparabolic fit).
MatchResult basic_from_table(std::span<const double> table, int search_radius);

/// Basic DIC over a whole grid using one product summed-area table per
/// offset. Bit-identical to calling basic_dic on every node.
std::vector<MatchResult> basic_grid(const GrayImage& reference, const GrayImage& deformed,
                                    const MeasurementGrid& grid, int search_radius);

}  // namespace distress::detail

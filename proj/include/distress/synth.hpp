#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "distress/fields.hpp"
#include "distress/image.hpp"

namespace distress {

/// Speckle layout parameters, as fractions of the specimen length.
struct SpeckleSpec {
  double r_d = 0.01;  ///< speckle diameter
  double r_a = 0.01;  ///< average spacing (grid pitch)
  std::uint64_t seed = 1;

  void validate() const;
};

struct SpeckleCenter {
  double x;
  double y;
};

/// One speckle per grid cell, centers in the unit square (raster-normalized:
/// x to the right, y downward, both in [0, 1)).
struct SpeckleField {
  std::vector<SpeckleCenter> centers;
  double radius = 0.0;
  double grid_pitch = 0.0;
  int cells_per_side = 0;
};

inline constexpr std::size_t kDefaultSpeckleCap = 4'000'000;
inline constexpr const char* kRngName = "mt19937_64";

SpeckleField generate_speckles(const SpeckleSpec& spec,
                               std::size_t max_speckles = kDefaultSpeckleCap);

/// Maps between pixel indices and normalized physical coordinates.
///
/// Pixel (i, j) covers the raster square [i, i+1) x [j, j+1); its center is
/// at raster (i + 0.5, j + 0.5). Physical x = raster_x / size and
/// physical y = raster_y / size - y_offset, so the default offset puts the
/// neutral axis of a unit-length cantilever on the middle image row.
struct PixelMapping {
  int size = 500;
  double y_offset = 0.5;

  double phys_x(double px) const { return (px + 0.5) / size; }
  double phys_y(double py) const { return (py + 0.5) / size - y_offset; }
  double to_px(double length) const { return length * size; }
};

/// Renders speckles as opaque bright disks (255) on a dark background (0).
/// Intensity is proportional to the covered area of each pixel, estimated
/// with 16x16 point sampling of the union of disks. When displacement is
/// given, every disk is translated rigidly by the field evaluated at its
/// undeformed center.
GrayImage rasterize(const SpeckleField& field, const DeformationField* displacement,
                    const PixelMapping& mapping);

struct ImagePair {
  GrayImage reference;
  GrayImage deformed;
  FieldPtr truth;
  PixelMapping mapping;
};

ImagePair make_image_pair(const SpeckleSpec& spec, FieldPtr field, const PixelMapping& mapping);

/// Key-value sidecar describing how an image pair was synthesized.
struct PairMetadata {
  std::uint64_t seed = 0;
  double r_a = 0.0;
  double r_d = 0.0;
  int image_size = 0;
  double y_offset = 0.5;
  nlohmann::json field;
  double amplitude_scale = 1.0;
  std::string rng = kRngName;
};

PairMetadata describe_pair(const SpeckleSpec& spec, const ImagePair& pair);
void write_metadata(const PairMetadata& meta, const std::filesystem::path& path);
PairMetadata read_metadata(const std::filesystem::path& path);

}  // namespace distress

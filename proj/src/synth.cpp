#include "distress/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "distress/error.hpp"

namespace distress {

void SpeckleSpec::validate() const {
  if (!(r_d > 0 && r_d <= 1)) throw Error(ErrorKind::kParameter, "r_d must lie in (0, 1]");
  if (!(r_a > 0 && r_a <= 1)) throw Error(ErrorKind::kParameter, "r_a must lie in (0, 1]");
}

namespace {

double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

SpeckleField generate_speckles(const SpeckleSpec& spec, std::size_t max_speckles) {
  spec.validate();
  const double cells = std::ceil(1.0 / spec.r_a - 1e-9);
  if (cells * cells > static_cast<double>(max_speckles)) {
    throw Error(ErrorKind::kResource, "speckle count exceeds the configured cap");
  }
  const int n = static_cast<int>(cells);

  SpeckleField field;
  field.radius = spec.r_d / 2.0;
  field.grid_pitch = spec.r_a;
  field.cells_per_side = n;
  field.centers.reserve(static_cast<std::size_t>(n) * n);

  std::mt19937_64 rng(spec.seed);
  for (int j = 0; j < n; ++j) {
    const double y0 = j * spec.r_a;
    const double y1 = std::min((j + 1) * spec.r_a, 1.0);
    for (int i = 0; i < n; ++i) {
      const double x0 = i * spec.r_a;
      const double x1 = std::min((i + 1) * spec.r_a, 1.0);
      const double x = x0 + (x1 - x0) * unit_double(rng);
      const double y = y0 + (y1 - y0) * unit_double(rng);
      field.centers.push_back({x, y});
    }
  }
  return field;
}

namespace {

constexpr int kSub = 16;  // samples per pixel side

struct Disk {
  double x;
  double y;
};

struct Interval {
  double lo;
  double hi;
};

}  // namespace

GrayImage rasterize(const SpeckleField& field, const DeformationField* displacement,
                    const PixelMapping& mapping) {
  const int n = mapping.size;
  if (n < 16) throw Error(ErrorKind::kDimension, "image size must be at least 16 pixels");
  if (field.centers.empty()) throw Error(ErrorKind::kParameter, "speckle field is empty");

  const double r = field.radius * n;
  const double r2 = r * r;

  std::vector<Disk> disks;
  disks.reserve(field.centers.size());
  for (const auto& c : field.centers) {
    double x = c.x * n;
    double y = c.y * n;
    if (displacement != nullptr) {
      const Displacement d = displacement->displacement(c.x, c.y - mapping.y_offset);
      x += d.u * n;
      y += d.v * n;
    }
    disks.push_back({x, y});
  }
  // Sorting by x makes the per-subrow interval lists nearly sorted.
  std::sort(disks.begin(), disks.end(),
            [](const Disk& a, const Disk& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });

  // Bucket disks by the image rows they touch.
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
  for (int k = 0; k < static_cast<int>(disks.size()); ++k) {
    const int lo = std::max(0, static_cast<int>(std::floor(disks[k].y - r)));
    const int hi = std::min(n - 1, static_cast<int>(std::floor(disks[k].y + r)));
    for (int j = lo; j <= hi; ++j) rows[j].push_back(k);
  }

  GrayImage image(n, n, 0);
  std::vector<int> counts(static_cast<std::size_t>(n));
  std::vector<Interval> spans;
  const int samples_per_row = n * kSub;

  for (int j = 0; j < n; ++j) {
    std::fill(counts.begin(), counts.end(), 0);
    for (int s = 0; s < kSub; ++s) {
      const double ys = j + (s + 0.5) / kSub;
      spans.clear();
      for (int k : rows[j]) {
        const double dy = ys - disks[k].y;
        const double rem = r2 - dy * dy;
        if (rem < 0.0) continue;
        const double h = std::sqrt(rem);
        spans.push_back({disks[k].x - h, disks[k].x + h});
      }
      if (spans.empty()) continue;
      std::sort(spans.begin(), spans.end(),
                [](const Interval& a, const Interval& b) { return a.lo < b.lo; });

      auto emit = [&](const Interval& iv) {
        // Sample m sits at x = (m + 0.5) / kSub.
        int m_lo = static_cast<int>(std::ceil(iv.lo * kSub - 0.5));
        int m_hi = static_cast<int>(std::floor(iv.hi * kSub - 0.5));
        m_lo = std::max(m_lo, 0);
        m_hi = std::min(m_hi, samples_per_row - 1);
        for (int m = m_lo; m <= m_hi;) {
          const int px = m / kSub;
          const int last = std::min(m_hi, px * kSub + kSub - 1);
          counts[px] += last - m + 1;
          m = last + 1;
        }
      };

      Interval cur = spans.front();
      for (std::size_t q = 1; q < spans.size(); ++q) {
        if (spans[q].lo <= cur.hi) {
          cur.hi = std::max(cur.hi, spans[q].hi);
        } else {
          emit(cur);
          cur = spans[q];
        }
      }
      emit(cur);
    }
    auto out = image.row(j);
    for (int i = 0; i < n; ++i) {
      out[i] = static_cast<std::uint8_t>((255 * counts[i] + kSub * kSub / 2) / (kSub * kSub));
    }
  }
  return image;
}

ImagePair make_image_pair(const SpeckleSpec& spec, FieldPtr field, const PixelMapping& mapping) {
  if (!field) throw Error(ErrorKind::kParameter, "image pair needs a deformation field");
  const SpeckleField speckles = generate_speckles(spec);
  ImagePair pair;
  pair.reference = rasterize(speckles, nullptr, mapping);
  pair.deformed = rasterize(speckles, field.get(), mapping);
  pair.truth = std::move(field);
  pair.mapping = mapping;
  return pair;
}

PairMetadata describe_pair(const SpeckleSpec& spec, const ImagePair& pair) {
  PairMetadata meta;
  meta.seed = spec.seed;
  meta.r_a = spec.r_a;
  meta.r_d = spec.r_d;
  meta.image_size = pair.mapping.size;
  meta.y_offset = pair.mapping.y_offset;
  meta.field = pair.truth->to_json();
  meta.amplitude_scale = meta.field.value("amplitude_scale", 1.0);
  return meta;
}

void write_metadata(const PairMetadata& meta, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "seed = " << meta.seed << '\n'
      << "r_a = " << meta.r_a << '\n'
      << "r_d = " << meta.r_d << '\n'
      << "image_size = " << meta.image_size << '\n'
      << "y_offset = " << meta.y_offset << '\n'
      << "amplitude_scale = " << meta.amplitude_scale << '\n'
      << "rng = " << meta.rng << '\n'
      << "field = " << meta.field.dump() << '\n';
}

PairMetadata read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  PairMetadata meta;
  bool have_field = false;
  bool have_size = false;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "seed") meta.seed = std::stoull(value);
      else if (key == "r_a") meta.r_a = std::stod(value);
      else if (key == "r_d") meta.r_d = std::stod(value);
      else if (key == "image_size") { meta.image_size = std::stoi(value); have_size = true; }
      else if (key == "y_offset") meta.y_offset = std::stod(value);
      else if (key == "amplitude_scale") meta.amplitude_scale = std::stod(value);
      else if (key == "rng") meta.rng = value;
      else if (key == "field") { meta.field = nlohmann::json::parse(value); have_field = true; }
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kIo, path.string() + ": bad value for " + key);
    }
  }
  if (!have_field || !have_size) {
    throw Error(ErrorKind::kIo, path.string() + ": metadata needs image_size and field");
  }
  return meta;
}

}  // namespace distress

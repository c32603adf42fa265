#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "distress/error.hpp"
#include "distress/harness.hpp"

namespace distress {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_points_csv(const std::filesystem::path& path, const MeasurementGrid& grid,
                      const std::vector<MatchResult>& results) {
  if (results.size() != grid.size()) {
    throw Error(ErrorKind::kDimension, "result count does not match the grid");
  }
  auto out = open_out(path);
  out << "i,j,x,y,u,v,ux,uy,vx,vy,cc,iterations,status\n";
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const SubsetSpec s = grid.at(i, j);
      const MatchResult& r = results[static_cast<std::size_t>(j) * grid.nx + i];
      const ShapeParams& p = r.params;
      out << i << ',' << j << ',' << s.x << ',' << s.y << ',' << num(p.u) << ',' << num(p.v) << ','
          << num(p.ux) << ',' << num(p.uy) << ',' << num(p.vx) << ',' << num(p.vy) << ','
          << num(r.cc) << ',' << r.iterations << ',' << to_string(r.status) << '\n';
    }
  }
}

LoadedPoints read_points_csv(const std::filesystem::path& path, int half_size) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("i,j,x,y,u,v", 0) != 0) {
    throw Error(ErrorKind::kIo, path.string() + " is not a points CSV");
  }
  struct Row {
    int i, j, x, y;
    MatchResult r;
  };
  std::vector<Row> rows;
  int nx = 0, ny = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 13) throw Error(ErrorKind::kIo, "malformed row in " + path.string());
    Row row;
    try {
      row.i = std::stoi(f[0]);
      row.j = std::stoi(f[1]);
      row.x = std::stoi(f[2]);
      row.y = std::stoi(f[3]);
      row.r.params = {std::stod(f[4]), std::stod(f[5]), std::stod(f[6]),
                      std::stod(f[7]), std::stod(f[8]), std::stod(f[9])};
      row.r.cc = std::stod(f[10]);
      row.r.iterations = std::stoi(f[11]);
      row.r.status = match_status_from_string(f[12]);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::kIo, "malformed row in " + path.string());
    }
    if (row.i < 0 || row.j < 0) throw Error(ErrorKind::kIo, "negative grid index");
    nx = std::max(nx, row.i + 1);
    ny = std::max(ny, row.j + 1);
    rows.push_back(row);
  }
  if (rows.size() != static_cast<std::size_t>(nx) * ny || rows.empty()) {
    throw Error(ErrorKind::kIo, path.string() + " does not hold a complete grid");
  }
  LoadedPoints out;
  out.grid.nx = nx;
  out.grid.ny = ny;
  out.grid.half_size = half_size;
  out.results.resize(rows.size());
  std::vector<char> seen(rows.size(), 0);
  for (const Row& row : rows) {
    const std::size_t k = static_cast<std::size_t>(row.j) * nx + row.i;
    if (seen[k]) throw Error(ErrorKind::kIo, "duplicate grid node in " + path.string());
    seen[k] = 1;
    out.results[k] = row.r;
    if (row.i == 0 && row.j == 0) {
      out.grid.origin_x = row.x;
      out.grid.origin_y = row.y;
    }
  }
  int stride = 0;
  for (const Row& row : rows) {
    if (row.i == 1 && row.j == 0) stride = row.x - out.grid.origin_x;
    if (row.i == 0 && row.j == 1 && stride == 0) stride = row.y - out.grid.origin_y;
  }
  out.grid.stride = stride > 0 ? stride : 1;
  for (const Row& row : rows) {
    const SubsetSpec s = out.grid.at(row.i, row.j);
    if (s.x != row.x || s.y != row.y) {
      throw Error(ErrorKind::kIo, path.string() + " is not a regular grid");
    }
  }
  return out;
}

void write_strain_csv(const std::filesystem::path& path, const FieldGrid& strain) {
  if (strain.channels != 3) throw Error(ErrorKind::kDimension, "strain grids have 3 channels");
  auto out = open_out(path);
  out << "i,j,x,y,valid,ex,ey,gxy\n";
  for (int j = 0; j < strain.ny; ++j) {
    for (int i = 0; i < strain.nx; ++i) {
      out << i << ',' << j << ',' << strain.origin_x + i * strain.stride << ','
          << strain.origin_y + j * strain.stride << ',' << (strain.ok(i, j) ? 1 : 0);
      for (int c = 0; c < 3; ++c) {
        out << ',';
        if (strain.ok(i, j)) out << num(strain.at(i, j, c));
      }
      out << '\n';
    }
  }
}

std::vector<std::filesystem::path> emit_plot_data(const RunRecord& record,
                                                  const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  auto file = [&](const char* name) {
    written.push_back(dir / name);
    return open_out(written.back());
  };
  auto stat = [](const CellRecord& c, double ErrorStats::*member) {
    return c.stats ? num((*c.stats).*member) : std::string();
  };

  {
    auto out = file("fig_displacement_error.csv");
    out << "image_size,subset_size,engine,mean_abs_u,std_u,mean_abs_v,std_v,n_points,n_failed,"
           "flagged\n";
    for (const CellRecord& c : record.cells) {
      out << c.image_size << ',' << c.subset_size << ',' << to_string(c.engine) << ','
          << stat(c, &ErrorStats::mean_abs_u) << ',' << stat(c, &ErrorStats::std_u) << ','
          << stat(c, &ErrorStats::mean_abs_v) << ',' << stat(c, &ErrorStats::std_v) << ',';
      if (c.stats) {
        out << c.stats->n_points << ',' << c.stats->n_failed << ',' << (c.stats->flagged() ? 1 : 0);
      } else {
        out << ",,";
      }
      out << '\n';
    }
  }
  {
    auto out = file("fig_e2e_error.csv");
    out << "image_size,subset_size,engine,mean_e2e,std_e2e\n";
    for (const CellRecord& c : record.cells) {
      out << c.image_size << ',' << c.subset_size << ',' << to_string(c.engine) << ','
          << stat(c, &ErrorStats::mean_e2e) << ',' << stat(c, &ErrorStats::std_e2e) << '\n';
    }
  }
  {
    auto out = file("fig_iterations.csv");
    out << "image_size,subset_size,mean_iterations\n";
    for (const CellRecord& c : record.cells) {
      if (c.engine != Engine::kExtended) continue;
      out << c.image_size << ',' << c.subset_size << ',' << stat(c, &ErrorStats::mean_iterations)
          << '\n';
    }
  }
  {
    auto out = file("fig_strain_rms.csv");
    out << "image_size,subset_size,method,rms_ex,rms_ey,rms_gxy\n";
    std::vector<StrainMethod> methods;
    for (const auto& name : record.config.value("strain_methods", std::vector<std::string>{})) {
      methods.push_back(strain_method_from_string(name));
    }
    for (const CellRecord& c : record.cells) {
      if (c.engine != Engine::kExtended) continue;
      for (StrainMethod m : methods) {
        out << c.image_size << ',' << c.subset_size << ',' << to_string(m) << ',';
        const auto it = c.strain.find(m);
        if (it != c.strain.end()) {
          out << num(it->second.ex) << ',' << num(it->second.ey) << ',' << num(it->second.gxy);
        } else {
          out << ",,";
        }
        out << '\n';
      }
    }
  }
  {
    auto out = file("timing_per_subset.csv");
    out << "image_size,subset_size,engine,seconds_per_subset\n";
    for (const CellRecord& c : record.cells) {
      out << c.image_size << ',' << c.subset_size << ',' << to_string(c.engine) << ','
          << stat(c, &ErrorStats::wall_time_per_subset) << '\n';
    }
  }
  {
    auto out = file("timing_interpolation.csv");
    out << "image_size,subset_size,seconds\n";
    for (const CellRecord& c : record.cells) {
      if (c.engine != Engine::kExtended) continue;
      out << c.image_size << ',' << c.subset_size << ',' << stat(c, &ErrorStats::interpolation_time)
          << '\n';
    }
  }
  return written;
}

}  // namespace distress

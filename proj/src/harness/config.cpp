#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "distress/error.hpp"
#include "distress/harness.hpp"

namespace distress {

namespace {

using nlohmann::json;

const std::set<std::string> kKeys = {
    "field",          "speckle", "y_offset",      "image_sizes",          "subset_sizes",
    "grid_stride",    "engine",  "search_radius", "extended_seed_radius", "strain_methods",
    "workers",        "output_dir",
};

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::kUsage, std::string("config key \"") + key + "\" has the wrong type");
  }
}

}  // namespace

std::string_view to_string(EngineChoice choice) {
  switch (choice) {
    case EngineChoice::kBasic: return "basic";
    case EngineChoice::kExtended: return "extended";
    case EngineChoice::kBoth: return "both";
  }
  return "unknown";
}

EngineChoice engine_choice_from_string(std::string_view name) {
  if (name == "basic") return EngineChoice::kBasic;
  if (name == "extended") return EngineChoice::kExtended;
  if (name == "both") return EngineChoice::kBoth;
  throw Error(ErrorKind::kUsage, "engine must be basic, extended or both");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kUsage, "config must be a JSON object");
  for (const auto& item : j.items()) {
    if (!kKeys.count(item.key())) {
      throw Error(ErrorKind::kUsage, "unknown config key \"" + item.key() + "\"");
    }
  }
  ExperimentConfig c;
  if (j.contains("field")) {
    if (!j.at("field").is_object()) throw Error(ErrorKind::kUsage, "\"field\" must be an object");
    c.field = j.at("field");
  }
  if (j.contains("speckle")) {
    const json& s = j.at("speckle");
    if (!s.is_object()) throw Error(ErrorKind::kUsage, "\"speckle\" must be an object");
    c.speckle.r_a = get(s, "r_a", c.speckle.r_a);
    c.speckle.r_d = get(s, "r_d", c.speckle.r_d);
    c.speckle.seed = get<std::uint64_t>(s, "seed", c.speckle.seed);
  }
  c.y_offset = get(j, "y_offset", c.y_offset);
  c.image_sizes = get(j, "image_sizes", c.image_sizes);
  c.subset_sizes = get(j, "subset_sizes", c.subset_sizes);
  c.grid_stride = get(j, "grid_stride", c.grid_stride);
  c.engine = engine_choice_from_string(get<std::string>(j, "engine", "both"));
  c.search_radius = get(j, "search_radius", c.search_radius);
  c.extended_seed_radius = get(j, "extended_seed_radius", c.extended_seed_radius);
  if (j.contains("strain_methods")) {
    c.strain_methods.clear();
    for (const auto& name : get<std::vector<std::string>>(j, "strain_methods", {})) {
      c.strain_methods.push_back(strain_method_from_string(name));
    }
  }
  c.workers = get(j, "workers", c.workers);
  c.output_dir = get(j, "output_dir", c.output_dir);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kUsage, "config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json methods = json::array();
  for (StrainMethod m : strain_methods) methods.push_back(std::string(distress::to_string(m)));
  return {
      {"field", field},
      {"speckle", {{"r_a", speckle.r_a}, {"r_d", speckle.r_d}, {"seed", speckle.seed}}},
      {"y_offset", y_offset},
      {"image_sizes", image_sizes},
      {"subset_sizes", subset_sizes},
      {"grid_stride", grid_stride},
      {"engine", std::string(distress::to_string(engine))},
      {"search_radius", search_radius},
      {"extended_seed_radius", extended_seed_radius},
      {"strain_methods", methods},
      {"workers", workers},
      {"output_dir", output_dir},
  };
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kUsage, msg); };
  if (image_sizes.empty()) fail("image_sizes is empty");
  if (subset_sizes.empty()) fail("subset_sizes is empty");
  for (int n : image_sizes) {
    if (n < 16) fail("image sizes must be at least 16 px");
  }
  for (int s : subset_sizes) {
    if (s < 3 || s % 2 == 0) fail("subset sizes must be odd and at least 3");
  }
  if (grid_stride < 1) fail("grid_stride must be at least 1");
  if (search_radius < 0) fail("search_radius must be non-negative");
  if (workers < 1) fail("workers must be at least 1");
  try {
    speckle.validate();
    field_from_json(field);
  } catch (const Error& e) {
    fail(e.what());
  }
}

std::string ExperimentConfig::canonical() const {
  json j = to_json();
  j.erase("output_dir");
  j.erase("workers");
  // Parse the field through its factory so equivalent spellings agree.
  j["field"] = field_from_json(field)->to_json();
  return j.dump();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Engine> ExperimentConfig::engines() const {
  switch (engine) {
    case EngineChoice::kBasic: return {Engine::kBasic};
    case EngineChoice::kExtended: return {Engine::kExtended};
    case EngineChoice::kBoth: break;
  }
  return {Engine::kBasic, Engine::kExtended};
}

ExperimentConfig ExperimentConfig::desk_protocol() {
  ExperimentConfig c;
  c.image_sizes = {500, 1000};
  c.subset_sizes = {21, 41, 61, 101};
  c.grid_stride = 25;
  return c;
}

ExperimentConfig ExperimentConfig::full_protocol() {
  ExperimentConfig c;
  c.image_sizes = {500, 1000, 2000};
  c.subset_sizes.clear();
  for (int s = 21; s <= 101; s += 10) c.subset_sizes.push_back(s);
  c.grid_stride = 10;
  return c;
}

}  // namespace distress

#include "distress/fields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "distress/error.hpp"

namespace distress {

Strain strain_from_gradient(const Gradient& g) {
  return {g.ux, g.vy, g.uy + g.vx};
}

void CantileverParams::validate() const {
  if (!(E > 0 && G > 0 && I > 0 && c > 0 && L > 0)) {
    throw Error(ErrorKind::kParameter, "cantilever: E, G, I, c and L must be positive");
  }
  if (!(nu >= 0.0 && nu < 0.5)) {
    throw Error(ErrorKind::kParameter, "cantilever: Poisson's ratio must lie in [0, 0.5)");
  }
  if (!(amplitude_scale > 0)) {
    throw Error(ErrorKind::kParameter, "cantilever: amplitude_scale must be positive");
  }
}

namespace {

void check_domain(const CantileverParams& p, double x, double y, DomainPolicy policy) {
  if (policy == DomainPolicy::kRelaxed) return;
  const double tol = 1e-12 * p.L;
  if (x < -tol || x > p.L + tol || y < -p.c - tol || y > p.c + tol) {
    std::ostringstream os;
    os << "cantilever: point (" << x << ", " << y << ") outside 0 <= x <= " << p.L
       << ", |y| <= " << p.c;
    throw Error(ErrorKind::kOutOfDomain, os.str());
  }
}

}  // namespace

Displacement cantilever_displacement(const CantileverParams& p, double x, double y,
                                     DomainPolicy policy) {
  check_domain(p, x, y, policy);
  const double u = p.P * y / (6.0 * p.I) *
                   ((3.0 * (p.L * p.L - x * x) - p.nu * y * y) / p.E +
                    (y * y - 3.0 * p.c * p.c) / p.G);
  const double v = p.P / (6.0 * p.E * p.I) *
                   (x * (3.0 * p.nu * y * y + x * x) + p.L * p.L * (2.0 * p.L - 3.0 * x));
  return {p.amplitude_scale * u, p.amplitude_scale * v};
}

Gradient cantilever_gradient(const CantileverParams& p, double x, double y,
                             DomainPolicy policy) {
  check_domain(p, x, y, policy);
  const double EI = p.E * p.I;
  Gradient g;
  g.ux = -p.P * x * y / EI;
  g.uy = p.P / (6.0 * p.I) *
         ((3.0 * (p.L * p.L - x * x) - 3.0 * p.nu * y * y) / p.E +
          (3.0 * y * y - 3.0 * p.c * p.c) / p.G);
  g.vx = p.P / (2.0 * EI) * (p.nu * y * y + x * x - p.L * p.L);
  g.vy = p.P * p.nu * x * y / EI;
  const double s = p.amplitude_scale;
  return {s * g.ux, s * g.uy, s * g.vx, s * g.vy};
}

Strain cantilever_strain(const CantileverParams& p, double x, double y, DomainPolicy policy) {
  check_domain(p, x, y, policy);
  const double c3 = p.c * p.c * p.c;
  Strain e;
  e.ex = -3.0 * p.P * x * y / (2.0 * c3 * p.E);
  e.ey = 3.0 * p.nu * p.P * x * y / (2.0 * c3 * p.E);
  e.gxy = -3.0 * p.P / (4.0 * p.c * p.G) * (1.0 - y * y / (p.c * p.c));
  const double s = p.amplitude_scale;
  return {s * e.ex, s * e.ey, s * e.gxy};
}

std::string RigidTranslation::describe() const {
  std::ostringstream os;
  os << "rigid(dx=" << dx_ << ",dy=" << dy_ << ")";
  return os.str();
}

nlohmann::json RigidTranslation::to_json() const {
  return {{"type", "rigid"}, {"dx", dx_}, {"dy", dy_}};
}

Displacement AffineField::displacement(double x, double y) const {
  return {dx_ + grad_.ux * x + grad_.uy * y, dy_ + grad_.vx * x + grad_.vy * y};
}

std::string AffineField::describe() const {
  std::ostringstream os;
  os << "affine(a11=" << grad_.ux << ",a12=" << grad_.uy << ",a21=" << grad_.vx
     << ",a22=" << grad_.vy << ",dx=" << dx_ << ",dy=" << dy_ << ")";
  return os.str();
}

nlohmann::json AffineField::to_json() const {
  return {{"type", "affine"}, {"a11", grad_.ux}, {"a12", grad_.uy}, {"a21", grad_.vx},
          {"a22", grad_.vy},  {"dx", dx_},       {"dy", dy_}};
}

CantileverField::CantileverField(CantileverParams params, DomainPolicy policy)
    : params_(params), policy_(policy) {
  params_.validate();
}

Displacement CantileverField::displacement(double x, double y) const {
  const double L = params_.L;
  const Displacement d = cantilever_displacement(params_, x * L, y * L, policy_);
  return {d.u / L, d.v / L};
}

Gradient CantileverField::gradient(double x, double y) const {
  const double L = params_.L;
  return cantilever_gradient(params_, x * L, y * L, policy_);
}

std::string CantileverField::describe() const {
  std::ostringstream os;
  os << "cantilever(P=" << params_.P << ",E=" << params_.E << ",I=" << params_.I
     << ",nu=" << params_.nu << ",G=" << params_.G << ",c=" << params_.c << ",L=" << params_.L
     << ",amplitude_scale=" << params_.amplitude_scale << ")";
  return os.str();
}

nlohmann::json CantileverField::to_json() const {
  return {{"type", "cantilever"},
          {"P", params_.P},
          {"E", params_.E},
          {"I", params_.I},
          {"nu", params_.nu},
          {"G", params_.G},
          {"c", params_.c},
          {"L", params_.L},
          {"amplitude_scale", params_.amplitude_scale},
          {"strict_domain", policy_ == DomainPolicy::kStrict}};
}

FieldPtr rigid_translation(double dx, double dy) {
  return std::make_shared<RigidTranslation>(dx, dy);
}

FieldPtr affine_field(double a11, double a12, double a21, double a22, double dx, double dy) {
  return std::make_shared<AffineField>(a11, a12, a21, a22, dx, dy);
}

FieldPtr cantilever_field(const CantileverParams& p, DomainPolicy policy) {
  return std::make_shared<CantileverField>(p, policy);
}

double amplitude_for_max_v(CantileverParams p, double target) {
  if (!(target > 0)) throw Error(ErrorKind::kParameter, "target max |v| must be positive");
  p.amplitude_scale = 1.0;
  p.validate();
  const CantileverField field(p);
  const double ymax = p.c / p.L;
  constexpr int kSamples = 200;
  double vmax = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    for (int j = 0; j <= kSamples; ++j) {
      const double x = static_cast<double>(i) / kSamples;
      const double y = -ymax + 2.0 * ymax * j / kSamples;
      vmax = std::max(vmax, std::abs(field.displacement(x, y).v));
    }
  }
  if (vmax == 0.0) throw Error(ErrorKind::kParameter, "cantilever has zero deflection");
  return target / vmax;
}

FieldPtr field_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type")) {
    throw Error(ErrorKind::kParameter, "field definition needs a \"type\" key");
  }
  const std::string type = j.at("type").get<std::string>();
  try {
    if (type == "rigid") {
      return rigid_translation(j.value("dx", 0.0), j.value("dy", 0.0));
    }
    if (type == "affine") {
      return affine_field(j.value("a11", 0.0), j.value("a12", 0.0), j.value("a21", 0.0),
                          j.value("a22", 0.0), j.value("dx", 0.0), j.value("dy", 0.0));
    }
    if (type == "cantilever") {
      CantileverParams p;
      p.P = j.value("P", p.P);
      p.E = j.value("E", p.E);
      p.I = j.value("I", p.I);
      p.nu = j.value("nu", p.nu);
      p.G = j.value("G", p.G);
      p.c = j.value("c", p.c);
      p.L = j.value("L", p.L);
      p.amplitude_scale = j.value("amplitude_scale", 1.0);
      if (j.contains("target_max_v") && !j.at("target_max_v").is_null()) {
        p.amplitude_scale = amplitude_for_max_v(p, j.at("target_max_v").get<double>());
      }
      const bool strict = j.value("strict_domain", true);
      return cantilever_field(p, strict ? DomainPolicy::kStrict : DomainPolicy::kRelaxed);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParameter, std::string("field definition: ") + e.what());
  }
  throw Error(ErrorKind::kParameter, "unknown field type \"" + type + "\"");
}

}  // namespace distress

#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

namespace distress {

struct Displacement {
  double u = 0.0;
  double v = 0.0;
};

/// Displacement gradient components du/dx, du/dy, dv/dx, dv/dy.
struct Gradient {
  double ux = 0.0;
  double uy = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

/// Small-strain components; gxy is the engineering shear strain.
struct Strain {
  double ex = 0.0;
  double ey = 0.0;
  double gxy = 0.0;
};

Strain strain_from_gradient(const Gradient& g);

enum class DomainPolicy { kStrict, kRelaxed };

/// Material and geometry of an end-loaded cantilever. Any consistent unit
/// system works (the defaults are N and mm).
struct CantileverParams {
  double P = 4.8;
  double E = 69.0e3;
  double I = 175.0;
  double nu = 0.334;
  double G = 26.0e3;
  double c = 25.0;
  double L = 110.0;
  double amplitude_scale = 1.0;

  /// Throws Error(kParameter) when an invariant is violated.
  void validate() const;
};

// Closed-form cantilever solution in the parameter units. x runs from the
// loaded free end (x = 0) to the clamped end (x = L); y is measured from the
// neutral axis.
Displacement cantilever_displacement(const CantileverParams& p, double x, double y,
                                     DomainPolicy policy = DomainPolicy::kStrict);
Gradient cantilever_gradient(const CantileverParams& p, double x, double y,
                             DomainPolicy policy = DomainPolicy::kStrict);

/// The textbook strain expressions written in terms of the half-width c.
/// These coincide with the derivatives of the displacement only when
/// I = 2c^3/3 (unit thickness); field objects derive strain from
/// cantilever_gradient instead.
Strain cantilever_strain(const CantileverParams& p, double x, double y,
                         DomainPolicy policy = DomainPolicy::kStrict);

/// Evaluable ground-truth deformation. Immutable; evaluation is pure.
class DeformationField {
 public:
  virtual ~DeformationField() = default;

  virtual Displacement displacement(double x, double y) const = 0;
  virtual Gradient gradient(double x, double y) const = 0;
  Strain strain(double x, double y) const { return strain_from_gradient(gradient(x, y)); }

  virtual std::string describe() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using FieldPtr = std::shared_ptr<const DeformationField>;

/// Constant displacement (dx, dy).
class RigidTranslation final : public DeformationField {
 public:
  RigidTranslation(double dx, double dy) : dx_(dx), dy_(dy) {}

  Displacement displacement(double, double) const override { return {dx_, dy_}; }
  Gradient gradient(double, double) const override { return {}; }
  std::string describe() const override;
  nlohmann::json to_json() const override;

 private:
  double dx_;
  double dy_;
};

/// u = dx + a11 x + a12 y, v = dy + a21 x + a22 y.
class AffineField final : public DeformationField {
 public:
  AffineField(double a11, double a12, double a21, double a22, double dx, double dy)
      : grad_{a11, a12, a21, a22}, dx_(dx), dy_(dy) {}

  Displacement displacement(double x, double y) const override;
  Gradient gradient(double, double) const override { return grad_; }
  std::string describe() const override;
  nlohmann::json to_json() const override;

 private:
  Gradient grad_;
  double dx_;
  double dy_;
};

/// Cantilever evaluated in coordinates normalized by the specimen length,
/// so the specimen spans x in [0, 1] and displacements are fractions of L.
class CantileverField final : public DeformationField {
 public:
  explicit CantileverField(CantileverParams params,
                           DomainPolicy policy = DomainPolicy::kStrict);

  Displacement displacement(double x, double y) const override;
  Gradient gradient(double x, double y) const override;
  std::string describe() const override;
  nlohmann::json to_json() const override;

  const CantileverParams& params() const { return params_; }
  DomainPolicy policy() const { return policy_; }

 private:
  CantileverParams params_;
  DomainPolicy policy_;
};

FieldPtr rigid_translation(double dx, double dy);
FieldPtr affine_field(double a11, double a12, double a21, double a22, double dx, double dy);
FieldPtr cantilever_field(const CantileverParams& p, DomainPolicy policy = DomainPolicy::kStrict);

/// amplitude_scale that makes max |v| over the normalized specimen
/// (x in [0,1], |y| <= c/L) equal target (a fraction of L).
double amplitude_for_max_v(CantileverParams p, double target);

/// Field definitions as stored in experiment configs and sidecar metadata:
///   {"type": "rigid", "dx": .., "dy": ..}
///   {"type": "affine", "a11": .., "a12": .., "a21": .., "a22": .., "dx": .., "dy": ..}
///   {"type": "cantilever", "P": .., ..., "amplitude_scale": .., "target_max_v": ..,
///    "strict_domain": bool}
FieldPtr field_from_json(const nlohmann::json& j);

}  // namespace distress

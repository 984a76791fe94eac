#pragma once

// Spherical ball bearing: n balls of radius r rolling between a fixed sphere
// of radius R and an outer sphere of radius R + 2r with inertia diag(A, B, C).
// The reduced state lives on R^3 x (S^2)^n: the body-frame angular velocity
// Omega of the outer sphere and the ball-center directions Gamma_i.

#include "bearing/geometry.hpp"
#include "bearing/integrators.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bearing::spherical {

struct Ball {
  double inertia = 0.0;  // I_i
  double mass = 0.0;     // m_i
  double c = 0.0;        // conserved <Omega_i, Gamma_i>
};

struct SphericalParams {
  double R = 1.0;
  double r = 1.0;
  double A = 1.0;
  double B = 1.0;
  double C = 1.0;
  std::vector<Ball> balls;
  /// Replaces the derived epsilon (epsilon = 1 gives the fixed-center support system).
  std::optional<double> epsilon_override;
  /// Set only by free_body(); permits n = 0.
  bool allow_no_balls = false;

  std::size_t n() const { return balls.size(); }
  Mat3 body_inertia() const { return Vec3(A, B, C).asDiagonal(); }

  /// Throws DomainError on non-positive constants or n = 0.
  void validate() const;

  /// n = 0 reduces the system to the Euler top. Intended for regressions.
  static SphericalParams free_body(double A, double B, double C);
};

struct DerivedParams {
  double epsilon = 0.0;  // R / (2R + 2r)
  double delta = 0.0;    // (R + 2r) / (2r)
};

struct SphericalState {
  Vec3 omega = Vec3::Zero();
  std::vector<UnitVec3> gamma;
};

struct FullSphericalState {
  SphericalState reduced;
  RotMat3 g;
  std::vector<RotMat3> g_balls;
};

struct ReducedDerivative {
  Vec3 omega_dot = Vec3::Zero();
  std::vector<Vec3> gamma_dot;
};

struct FullDerivative {
  ReducedDerivative reduced;
  Mat3 g_dot = Mat3::Zero();
  std::vector<Mat3> g_balls_dot;
};

struct SphericalIntegrals {
  double F1 = 0.0;       // <M, Omega> / 2
  double F2 = 0.0;       // |M + N|^2
  Eigen::MatrixXd gram;  // <Gamma_i, Gamma_j>
  double T = 0.0;        // kinetic energy
};

/// Per-ball rolling residuals: lower is |V_Oi - r Omega_i x Gamma_i|, upper is
/// |(R + 2r) Omega x Gamma_i - r Omega_i x Gamma_i - V_Oi|.
struct ConstraintResiduals {
  std::vector<double> lower;
  std::vector<double> upper;
  double max() const;
};

DerivedParams derived_params(const SphericalParams& p);

SymMat3 modified_inertia(const SphericalParams& p, std::span<const UnitVec3> gamma);

/// Gamma-operator delta^2 sum (I_i + m_i r^2)(Gamma_i (x) Gamma_i - E), so that
/// modified_inertia = diag(A, B, C) - gamma_operator.
SymMat3 gamma_operator(const SphericalParams& p, std::span<const UnitVec3> gamma);

struct MN {
  Vec3 M;
  Vec3 N;
};
MN vectors_MN(const SphericalParams& p, const SphericalState& s);

/// Ball angular velocity in the outer-sphere frame on the level set <Omega_i, Gamma_i> = c.
Vec3 omega_ball(const SphericalParams& p, const Vec3& omega, const UnitVec3& gamma, double c);

ReducedDerivative reduced_rhs(const SphericalParams& p, const SphericalState& s);

SphericalIntegrals integrals(const SphericalParams& p, const SphericalState& s);

/// sqrt(det(modified_inertia)), the invariant-measure density.
double measure_density(const SphericalParams& p, std::span<const UnitVec3> gamma);

FullDerivative full_rhs(const SphericalParams& p, const FullSphericalState& f);

ConstraintResiduals constraint_residuals(const SphericalParams& p, const FullSphericalState& f);

/// Residuals for explicitly supplied ball angular velocities (body frame).
ConstraintResiduals constraint_residuals(const SphericalParams& p, const SphericalState& s,
                                         std::span<const Vec3> ball_omegas);

/// max_i |d/dt(g Gamma_i) - r/(R+r) (g Omega_i) x (g Gamma_i)| at a full state.
double space_frame_kinematics_residual(const SphericalParams& p, const FullSphericalState& f);

/// min_{i<j} |Gamma_i - Gamma_j| - 2r/(r+R); positive inside the no-collision region.
double collision_margin(const SphericalParams& p, std::span<const UnitVec3> gamma);

// ---------------------------------------------------------------------------
// Flat-vector forms for the integrators. Reduced layout: [Omega, Gamma_1..n];
// full layout appends g and g_1..n column-major.

std::size_t reduced_dim(const SphericalParams& p);
std::size_t full_dim(const SphericalParams& p);

State pack(const SphericalState& s);
State pack(const FullSphericalState& f);
SphericalState unpack_reduced(const SphericalParams& p, const State& x);
FullSphericalState unpack_full(const SphericalParams& p, const State& x,
                               double rotation_tol = tolerance::kRotation);

/// Reduced field extended to R^{3n+3}: the same formulas with Gamma_i not
/// required to be unit (projectors become E - Gamma_i Gamma_i^T).
class ExtendedField {
public:
  explicit ExtendedField(SphericalParams p);
  State operator()(const State& x) const;
  const SphericalParams& params() const { return p_; }

private:
  SphericalParams p_;
  DerivedParams d_;
};

/// sqrt(det(I - Gamma-operator)) on the extended space.
class ExtendedDensity {
public:
  explicit ExtendedDensity(SphericalParams p);
  double operator()(const State& x) const;

private:
  SphericalParams p_;
  DerivedParams d_;
};

/// Complete field on R^3 x (R^3)^n x (R^9)^{n+1}.
class FullField {
public:
  explicit FullField(SphericalParams p);
  State operator()(const State& x) const;

private:
  SphericalParams p_;
  DerivedParams d_;
  ExtendedField reduced_;
};

/// Step observer renormalizing Gamma_i (and re-orthonormalizing rotations when
/// `full` is set) every `every` steps, only when the deviation exceeds `threshold`.
/// `count`, when given, accumulates the number of corrections applied.
StepObserver renormalization_observer(const SphericalParams& p, bool full, int every = 100,
                                      double threshold = 1e-10, int* count = nullptr);

}  // namespace bearing::spherical

#pragma once

// Planar ball bearing: n balls of radius r rolling on a fixed plane and
// carrying a moving plate of mass m and vertical moment of inertia I.
//
// Reduced state on Q = {(v_x, v_y, v_phi, N1, N2, M) : delta M > N1^2 + N2^2},
// where N = sum delta_i OA_i and M = sum delta_i |OA_i|^2 aggregate the ball
// positions relative to the plate center O.

#include "bearing/geometry.hpp"
#include "bearing/integrators.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace bearing::planar {

using Vec2 = Eigen::Vector2d;

struct PlanarBall {
  double mass = 0.0;
  double inertia = 0.0;
};

struct PlanarParams {
  double r = 1.0;
  double m = 1.0;  // plate mass
  double I = 1.0;  // plate moment about the vertical axis through O
  std::vector<PlanarBall> balls;

  std::size_t n() const { return balls.size(); }
  void validate() const;
};

struct BallDeltas {
  std::vector<double> per_ball;  // (m_i r^2 + I_i) / (4 r^2)
  double total = 0.0;
};

struct PlanarReducedState {
  Vec3 v = Vec3::Zero();  // (v_x, v_y, v_phi)
  Vec3 n = Vec3::Zero();  // (N1, N2, M)

  double N1() const { return n[0]; }
  double N2() const { return n[1]; }
  double M() const { return n[2]; }
};

struct PlanarFullState {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
  Vec3 v = Vec3::Zero();                 // plate (v_x, v_y, v_phi)
  std::vector<Vec2> centers;             // ball centers (x_i, y_i)
  std::vector<Vec2> center_velocities;   // ball center velocities
  std::vector<Vec3> ball_omegas;         // ball angular velocities, space frame
};

struct LevelSetParams {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 1.0;  // value of f3 = delta M - |N|^2, positive on Q
};

struct ReducedDerivative {
  Vec3 v_dot = Vec3::Zero();
  Vec3 n_dot = Vec3::Zero();
};

struct PoseDerivative {
  Vec3 plate = Vec3::Zero();              // (x', y', phi')
  std::vector<Vec2> center_velocities;
  std::vector<Vec3> ball_omegas;          // reconstructed from the rolling constraints
};

struct PlanarIntegrals {
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 0.0;
  double f4 = 0.0;
};

BallDeltas ball_deltas(const PlanarParams& p);

/// delta M - N1^2 - N2^2; positive exactly on Q.
double q_margin(const PlanarParams& p, const PlanarReducedState& s);

/// Throws DomainError when s lies outside Q.
void require_in_q(const PlanarParams& p, const PlanarReducedState& s);

/// Builds a constraint-consistent full state: ball center velocities from the
/// plate motion and ball angular velocities from the lower rolling constraint
/// plus free spins about the vertical (zero when `spins` is empty).
PlanarFullState consistent_full_state(const PlanarParams& p, double x, double y, double phi,
                                      const Vec3& v, std::span<const Vec2> centers,
                                      std::span<const double> spins = {});

/// (N1, N2, M) from ball positions. Throws when delta M - |N|^2 <= 0.
Vec3 aggregates(const PlanarParams& p, const PlanarFullState& full);

PlanarReducedState reduce(const PlanarParams& p, const PlanarFullState& full);

SymMat3 mass_matrix(const PlanarParams& p, const PlanarReducedState& s);

/// (m+delta)((m+delta) I + m M + (delta M - N1^2 - N2^2)).
double mass_matrix_det(const PlanarParams& p, const PlanarReducedState& s);

/// Inverse written entry by entry in closed form.
Mat3 mass_matrix_inverse(const PlanarParams& p, const PlanarReducedState& s);

/// Right-hand side m of I v' = m.
Vec3 inertial_forcing(const PlanarParams& p, const PlanarReducedState& s);

ReducedDerivative reduced_rhs(const PlanarParams& p, const PlanarReducedState& s);

/// Residual of the three implicit velocity equations for a candidate v'.
Vec3 implicit_residual(const PlanarParams& p, const PlanarReducedState& s, const Vec3& v_dot);

PoseDerivative kinematic_rhs(const PlanarParams& p, const PlanarFullState& full);

PlanarIntegrals integrals(const PlanarParams& p, const PlanarReducedState& s);

/// Kinetic energy of plate and balls from full-state velocities.
double kinetic_energy(const PlanarParams& p, const PlanarFullState& full);

/// sqrt(det(mass_matrix)).
double measure_density(const PlanarParams& p, const PlanarReducedState& s);

/// Closed system on the level set f1 = d1, f2 = d2, f3 = d3 in y = (v_phi, N1, N2).
Vec3 level_set_rhs(const PlanarParams& p, const LevelSetParams& d, const Vec3& y);

/// Reduced state on Q corresponding to y on the level set.
PlanarReducedState embed_level_set(const PlanarParams& p, const LevelSetParams& d, const Vec3& y);

double level_set_det(const PlanarParams& p, const LevelSetParams& d, const Vec3& y);

/// Closed-form divergence m (N1 d1 + N2 d2) / (2 det) of the level-set field.
double level_set_divergence(const PlanarParams& p, const LevelSetParams& d, const Vec3& y);

/// d1 = d2 = 0: v_phi is constant and (N1, N2) rotates rigidly.
Vec3 closed_form_zero_d(const PlanarParams& p, double d3, const Vec3& y0, double t);

std::vector<double> pairwise_distances(std::span<const Vec2> centers);

/// Max over pairs and states of |dist_ij(t) - dist_ij(first state)|.
double triangle_residuals(std::span<const PlanarFullState> trajectory);

/// min_{i<j} |O_i O_j| - 2r; non-negative at admissible configurations.
double one_side_margin(const PlanarParams& p, std::span<const Vec2> centers);

// ---------------------------------------------------------------------------
// Flat-vector forms. Q layout: [v_x, v_y, v_phi, N1, N2, M]. Configuration
// layout: [v_x, v_y, v_phi, x, y, phi, x_1, y_1, ..., x_n, y_n].

State pack(const PlanarReducedState& s);
PlanarReducedState unpack_reduced(const State& x);

std::size_t configuration_dim(const PlanarParams& p);
State pack_configuration(const PlanarFullState& full);
PlanarFullState unpack_configuration(const PlanarParams& p, const State& x,
                                     std::span<const double> spins = {});

class ReducedField {
public:
  explicit ReducedField(PlanarParams p);
  State operator()(const State& x) const;

private:
  PlanarParams p_;
};

class ReducedDensity {
public:
  explicit ReducedDensity(PlanarParams p);
  double operator()(const State& x) const;

private:
  PlanarParams p_;
};

/// Velocities plus plate pose and ball centers; N and M recomputed from positions.
class ConfigurationField {
public:
  explicit ConfigurationField(PlanarParams p);
  State operator()(const State& x) const;

private:
  PlanarParams p_;
};

class LevelSetField {
public:
  LevelSetField(PlanarParams p, LevelSetParams d);
  State operator()(const State& y) const;

private:
  PlanarParams p_;
  LevelSetParams d_;
};

class LevelSetDensity {
public:
  LevelSetDensity(PlanarParams p, LevelSetParams d);
  double operator()(const State& y) const;

private:
  PlanarParams p_;
  LevelSetParams d_;
};

}  // namespace bearing::planar

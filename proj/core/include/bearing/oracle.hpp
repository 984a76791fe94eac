#pragma once

// Full-coordinate planar bearing with explicit Lagrange multipliers.
//
// Generalized velocities u = (v_x, v_y, v_phi, [vc_ix, vc_iy, w_ix, w_iy, w_iz]_i)
// obey 4n linear constraints A(q) u = 0: for each ball the lower contact
// (vc - r w x e3 = 0) and the upper contact (vc + r w x e3 = plate point
// velocity). Newton-Euler gives M u' = A^T lambda; differentiating the
// constraints yields (A M^-1 A^T) lambda = -A'(q, u) u, solved by LU.
//
// Multipliers are ordered [lower_1, ..., lower_n, upper_1, ..., upper_n],
// two planar components each; the upper pair of ball i is the force F_i the
// plate exerts on that ball.

#include "bearing/geometry.hpp"
#include "bearing/integrators.hpp"
#include "bearing/planar.hpp"

#include <stdexcept>
#include <vector>

namespace bearing::oracle {

using planar::PlanarFullState;
using planar::PlanarParams;
using planar::Vec2;

class SingularSystemError : public std::runtime_error {
public:
  SingularSystemError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

private:
  double condition_estimate_;
};

/// Dense LU with partial pivoting. Throws SingularSystemError when a pivot
/// falls below `pivot_ratio` times the largest entry.
Eigen::VectorXd lu_solve(Eigen::MatrixXd a, Eigen::VectorXd b, double pivot_ratio = 1e-12,
                         double* condition_estimate = nullptr);

struct MultiplierSolution {
  Eigen::VectorXd lambda;         // 4n reactions
  std::vector<Vec3> forces;       // F_i = (upper pair, 0)
  std::vector<Vec3> lower_forces; // reaction of the fixed plane on ball i
  double condition_estimate = 0.0;
};

struct OracleDerivative {
  Vec3 plate_accel = Vec3::Zero();        // (v_x', v_y', v_phi')
  std::vector<Vec2> center_accels;
  std::vector<Vec3> omega_dots;
  Vec3 plate_rates = Vec3::Zero();        // (x', y', phi')
  std::vector<Vec2> center_rates;
};

std::size_t velocity_dim(const PlanarParams& p);
std::size_t position_dim(const PlanarParams& p);

Eigen::MatrixXd constraint_matrix(const PlanarParams& p, const PlanarFullState& full);
Eigen::VectorXd generalized_velocity(const PlanarFullState& full);
Eigen::VectorXd generalized_mass(const PlanarParams& p);

/// A(q) u for the 4n scalar rolling constraints.
Eigen::VectorXd constraint_violation(const PlanarParams& p, const PlanarFullState& full);

MultiplierSolution solve_multipliers(const PlanarParams& p, const PlanarFullState& full);

OracleDerivative full_oracle_rhs(const PlanarParams& p, const PlanarFullState& full);

/// d/dt (A u) along the oracle accelerations.
Eigen::VectorXd constraint_rate(const PlanarParams& p, const PlanarFullState& full);

/// Reduced derivative (v', (N1, N2, M)') obtained from oracle accelerations
/// and the chain rule through the aggregates.
planar::ReducedDerivative reduced_derivative(const PlanarParams& p, const PlanarFullState& full);

/// max_i |lower_i - (m_i r^2 - I_i)/(m_i r^2 + I_i) F_i|.
double lower_upper_ratio_residual(const PlanarParams& p, const MultiplierSolution& sol);

/// Residual of the closed six-equation force system written with the plate
/// torque scalar s = sum (OA_j x F_j)_z:
///   (I / delta_i) F_i = -s e3 x OA_i + I w x (vc_i - v_O) - (I / m) sum F_j.
double force_system_residual(const PlanarParams& p, const PlanarFullState& full,
                             const MultiplierSolution& sol);

/// Residual of the same system in the literal printed arrangement
/// 4 I r^2/(m_i r^2 + I_i) F_i = (sum OA_j x F_j) x OA_i + w x (vc_i - v_O) - (I/m) sum F_j.
/// Diagnostic only: it generally differs from zero.
double printed_force_system_residual(const PlanarParams& p, const PlanarFullState& full,
                                     const MultiplierSolution& sol);

// Flat layout [q; u] with q = (x, y, phi, x_1, y_1, ..., x_n, y_n).
State pack(const PlanarFullState& full);
PlanarFullState unpack(const PlanarParams& p, const State& x);

class OracleField {
public:
  explicit OracleField(PlanarParams p);
  State operator()(const State& x) const;

private:
  PlanarParams p_;
};

}  // namespace bearing::oracle

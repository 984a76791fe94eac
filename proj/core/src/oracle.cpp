#include "bearing/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bearing::oracle {

namespace {

constexpr Eigen::Index kPlate = 3;
constexpr Eigen::Index kPerBall = 5;

Eigen::Index ball_col(std::size_t i) { return kPlate + kPerBall * static_cast<Eigen::Index>(i); }
Eigen::Index lower_row(std::size_t i) { return 2 * static_cast<Eigen::Index>(i); }
Eigen::Index upper_row(const PlanarParams& p, std::size_t i) {
  return 2 * static_cast<Eigen::Index>(p.n() + i);
}

void require_shape(const PlanarParams& p, const PlanarFullState& f) {
  if (f.centers.size() != p.n() || f.center_velocities.size() != p.n() || f.ball_omegas.size() != p.n())
    throw DomainError("oracle: full state does not match the number of balls");
}

// A'(q, u) u: only the plate-rotation column of the upper rows depends on q.
Eigen::VectorXd constraint_drift(const PlanarParams& p, const PlanarFullState& f) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(4 * p.n()));
  const double w = f.v[2];
  for (std::size_t i = 0; i < p.n(); ++i) {
    const double dx_dot = f.center_velocities[i].x() - f.v[0];
    const double dy_dot = f.center_velocities[i].y() - f.v[1];
    out[upper_row(p, i)] = dy_dot * w;
    out[upper_row(p, i) + 1] = -dx_dot * w;
  }
  return out;
}

Vec3 planar3(const Vec2& v) { return {v.x(), v.y(), 0.0}; }

}  // namespace

Eigen::VectorXd lu_solve(Eigen::MatrixXd a, Eigen::VectorXd b, double pivot_ratio,
                         double* condition_estimate) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n) throw DomainError("lu_solve: dimension mismatch");
  const double scale = a.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) throw SingularSystemError("lu_solve: zero or non-finite matrix", std::numeric_limits<double>::infinity());

  double pmax = 0.0;
  double pmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    a.col(k).tail(n - k).cwiseAbs().maxCoeff(&piv);
    piv += k;
    const double pv = std::abs(a(piv, k));
    pmax = std::max(pmax, pv);
    pmin = std::min(pmin, pv);
    if (pv <= pivot_ratio * scale) {
      throw SingularSystemError("lu_solve: singular system (pivot " + std::to_string(pv) + " at column " +
                                    std::to_string(k) + ")",
                                pv > 0.0 ? pmax / pv : std::numeric_limits<double>::infinity());
    }
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      std::swap(b[k], b[piv]);
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a(i, k) = f;
      a.row(i).tail(n - k - 1) -= f * a.row(k).tail(n - k - 1);
      b[i] -= f * b[k];
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (Eigen::Index j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  if (condition_estimate) *condition_estimate = pmax / pmin;
  return x;
}

std::size_t velocity_dim(const PlanarParams& p) { return 3 + 5 * p.n(); }
std::size_t position_dim(const PlanarParams& p) { return 3 + 2 * p.n(); }

Eigen::MatrixXd constraint_matrix(const PlanarParams& p, const PlanarFullState& f) {
  require_shape(p, f);
  const auto rows = static_cast<Eigen::Index>(4 * p.n());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(velocity_dim(p)));
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Eigen::Index c = ball_col(i);
    const double dx = f.centers[i].x() - f.x;
    const double dy = f.centers[i].y() - f.y;
    // w x e3 = (w_y, -w_x, 0)
    const Eigen::Index lo = lower_row(i);
    a(lo, c) = 1.0;
    a(lo, c + 3) = -p.r;
    a(lo + 1, c + 1) = 1.0;
    a(lo + 1, c + 2) = p.r;
    // vc + r w x e3 - (v_O + v_phi e3 x OA) = 0
    const Eigen::Index up = upper_row(p, i);
    a(up, c) = 1.0;
    a(up, c + 3) = p.r;
    a(up, 0) = -1.0;
    a(up, 2) = dy;
    a(up + 1, c + 1) = 1.0;
    a(up + 1, c + 2) = -p.r;
    a(up + 1, 1) = -1.0;
    a(up + 1, 2) = -dx;
  }
  return a;
}

Eigen::VectorXd generalized_velocity(const PlanarFullState& f) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(3 + 5 * f.centers.size()));
  u.head<3>() = f.v;
  for (std::size_t i = 0; i < f.centers.size(); ++i) {
    u.segment<2>(ball_col(i)) = f.center_velocities[i];
    u.segment<3>(ball_col(i) + 2) = f.ball_omegas[i];
  }
  return u;
}

Eigen::VectorXd generalized_mass(const PlanarParams& p) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(velocity_dim(p)));
  m.head<3>() << p.m, p.m, p.I;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const auto& b = p.balls[i];
    m.segment<5>(ball_col(i)) << b.mass, b.mass, b.inertia, b.inertia, b.inertia;
  }
  return m;
}

Eigen::VectorXd constraint_violation(const PlanarParams& p, const PlanarFullState& f) {
  return constraint_matrix(p, f) * generalized_velocity(f);
}

MultiplierSolution solve_multipliers(const PlanarParams& p, const PlanarFullState& f) {
  p.validate();
  const Eigen::MatrixXd a = constraint_matrix(p, f);
  const Eigen::VectorXd inv_mass = generalized_mass(p).cwiseInverse();
  const Eigen::MatrixXd schur = a * inv_mass.asDiagonal() * a.transpose();
  MultiplierSolution sol;
  sol.lambda = lu_solve(schur, -constraint_drift(p, f), 1e-12, &sol.condition_estimate);
  for (std::size_t i = 0; i < p.n(); ++i) {
    sol.lower_forces.push_back({sol.lambda[lower_row(i)], sol.lambda[lower_row(i) + 1], 0.0});
    sol.forces.push_back({sol.lambda[upper_row(p, i)], sol.lambda[upper_row(p, i) + 1], 0.0});
  }
  return sol;
}

OracleDerivative full_oracle_rhs(const PlanarParams& p, const PlanarFullState& f) {
  const MultiplierSolution sol = solve_multipliers(p, f);
  const Eigen::MatrixXd a = constraint_matrix(p, f);
  const Eigen::VectorXd u_dot = generalized_mass(p).cwiseInverse().cwiseProduct(a.transpose() * sol.lambda);
  OracleDerivative d;
  d.plate_accel = u_dot.head<3>();
  d.plate_rates = f.v;
  for (std::size_t i = 0; i < p.n(); ++i) {
    d.center_accels.emplace_back(u_dot.segment<2>(ball_col(i)));
    d.omega_dots.emplace_back(u_dot.segment<3>(ball_col(i) + 2));
    d.center_rates.push_back(f.center_velocities[i]);
  }
  return d;
}

Eigen::VectorXd constraint_rate(const PlanarParams& p, const PlanarFullState& f) {
  const OracleDerivative d = full_oracle_rhs(p, f);
  Eigen::VectorXd u_dot(static_cast<Eigen::Index>(velocity_dim(p)));
  u_dot.head<3>() = d.plate_accel;
  for (std::size_t i = 0; i < p.n(); ++i) {
    u_dot.segment<2>(ball_col(i)) = d.center_accels[i];
    u_dot.segment<3>(ball_col(i) + 2) = d.omega_dots[i];
  }
  return constraint_matrix(p, f) * u_dot + constraint_drift(p, f);
}

planar::ReducedDerivative reduced_derivative(const PlanarParams& p, const PlanarFullState& f) {
  const OracleDerivative d = full_oracle_rhs(p, f);
  const planar::BallDeltas deltas = planar::ball_deltas(p);
  planar::ReducedDerivative out;
  out.v_dot = d.plate_accel;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vec2 offset(f.centers[i].x() - f.x, f.centers[i].y() - f.y);
    const Vec2 rate = f.center_velocities[i] - f.v.head<2>();
    out.n_dot[0] += deltas.per_ball[i] * rate.x();
    out.n_dot[1] += deltas.per_ball[i] * rate.y();
    out.n_dot[2] += 2.0 * deltas.per_ball[i] * offset.dot(rate);
  }
  return out;
}

double lower_upper_ratio_residual(const PlanarParams& p, const MultiplierSolution& sol) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const auto& b = p.balls[i];
    const double k = (b.mass * p.r * p.r - b.inertia) / (b.mass * p.r * p.r + b.inertia);
    worst = std::max(worst, (sol.lower_forces[i] - k * sol.forces[i]).norm());
  }
  return worst;
}

double force_system_residual(const PlanarParams& p, const PlanarFullState& f, const MultiplierSolution& sol) {
  const planar::BallDeltas deltas = planar::ball_deltas(p);
  const Vec3 e3(0.0, 0.0, 1.0);
  const Vec3 w(0.0, 0.0, f.v[2]);
  const Vec3 v_o(f.v[0], f.v[1], 0.0);
  Vec3 sum_f = Vec3::Zero();
  double torque = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vec3 oa(f.centers[i].x() - f.x, f.centers[i].y() - f.y, 0.0);
    sum_f += sol.forces[i];
    torque += oa.cross(sol.forces[i]).z();
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vec3 oa(f.centers[i].x() - f.x, f.centers[i].y() - f.y, 0.0);
    const Vec3 lhs = p.I / deltas.per_ball[i] * sol.forces[i];
    const Vec3 rhs = -torque * e3.cross(oa) + p.I * w.cross(planar3(f.center_velocities[i]) - v_o) -
                     p.I / p.m * sum_f;
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

double printed_force_system_residual(const PlanarParams& p, const PlanarFullState& f,
                                     const MultiplierSolution& sol) {
  const Vec3 w(0.0, 0.0, f.v[2]);
  const Vec3 v_o(f.v[0], f.v[1], 0.0);
  Vec3 sum_f = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vec3 oa(f.centers[i].x() - f.x, f.centers[i].y() - f.y, 0.0);
    sum_f += sol.forces[i];
    torque += oa.cross(sol.forces[i]);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const auto& b = p.balls[i];
    const Vec3 oa(f.centers[i].x() - f.x, f.centers[i].y() - f.y, 0.0);
    const Vec3 lhs = 4.0 * p.I * p.r * p.r / (b.mass * p.r * p.r + b.inertia) * sol.forces[i];
    const Vec3 rhs = torque.cross(oa) + w.cross(planar3(f.center_velocities[i]) - v_o) - p.I / p.m * sum_f;
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

State pack(const PlanarFullState& f) {
  const auto n = f.centers.size();
  State x(static_cast<Eigen::Index>(3 + 2 * n + 3 + 5 * n));
  x[0] = f.x;
  x[1] = f.y;
  x[2] = f.phi;
  for (std::size_t i = 0; i < n; ++i) x.segment<2>(static_cast<Eigen::Index>(3 + 2 * i)) = f.centers[i];
  x.tail(static_cast<Eigen::Index>(3 + 5 * n)) = generalized_velocity(f);
  return x;
}

PlanarFullState unpack(const PlanarParams& p, const State& x) {
  const auto np = static_cast<Eigen::Index>(position_dim(p));
  if (x.size() != np + static_cast<Eigen::Index>(velocity_dim(p)))
    throw DomainError("oracle: state vector has wrong dimension");
  PlanarFullState f;
  f.x = x[0];
  f.y = x[1];
  f.phi = x[2];
  f.v = x.segment<3>(np);
  for (std::size_t i = 0; i < p.n(); ++i) {
    f.centers.emplace_back(x.segment<2>(static_cast<Eigen::Index>(3 + 2 * i)));
    f.center_velocities.emplace_back(x.segment<2>(np + ball_col(i)));
    f.ball_omegas.emplace_back(x.segment<3>(np + ball_col(i) + 2));
  }
  return f;
}

OracleField::OracleField(PlanarParams p) : p_(std::move(p)) { p_.validate(); }

State OracleField::operator()(const State& x) const {
  const PlanarFullState f = unpack(p_, x);
  const OracleDerivative d = full_oracle_rhs(p_, f);
  const auto np = static_cast<Eigen::Index>(position_dim(p_));
  State dx(x.size());
  dx.head<3>() = d.plate_rates;
  dx.segment<3>(np) = d.plate_accel;
  for (std::size_t i = 0; i < p_.n(); ++i) {
    dx.segment<2>(static_cast<Eigen::Index>(3 + 2 * i)) = d.center_rates[i];
    dx.segment<2>(np + ball_col(i)) = d.center_accels[i];
    dx.segment<3>(np + ball_col(i) + 2) = d.omega_dots[i];
  }
  return dx;
}

}  // namespace bearing::oracle

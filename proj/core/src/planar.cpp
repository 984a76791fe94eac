#include "bearing/planar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bearing::planar {

namespace {

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

// Velocity of the plate material point above offset (dx, dy) from O.
Vec2 plate_point_velocity(const Vec3& v, double dx, double dy) {
  return {v[0] - v[2] * dy, v[1] + v[2] * dx};
}

Mat3 adjugate(const Mat3& a) {
  Mat3 adj;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj(i, j) = a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
    }
  return adj;
}

}  // namespace

void PlanarParams::validate() const {
  if (!positive(r)) throw DomainError("planar: ball radius r must be positive");
  if (!positive(m) || !positive(I)) throw DomainError("planar: plate mass and inertia must be positive");
  if (balls.empty()) throw DomainError("planar: at least one ball is required");
  for (const auto& b : balls)
    if (!positive(b.mass) || !positive(b.inertia))
      throw DomainError("planar: ball mass and inertia must be positive");
}

BallDeltas ball_deltas(const PlanarParams& p) {
  p.validate();
  BallDeltas out;
  for (const auto& b : p.balls) {
    const double d = (b.mass * p.r * p.r + b.inertia) / (4.0 * p.r * p.r);
    out.per_ball.push_back(d);
    out.total += d;
  }
  return out;
}

double q_margin(const PlanarParams& p, const PlanarReducedState& s) {
  return ball_deltas(p).total * s.M() - s.N1() * s.N1() - s.N2() * s.N2();
}

void require_in_q(const PlanarParams& p, const PlanarReducedState& s) {
  if (!s.v.allFinite() || !s.n.allFinite()) throw DomainError("planar: non-finite reduced state");
  if (!(q_margin(p, s) > 0.0))
    throw DomainError("planar: state outside Q (delta M <= N1^2 + N2^2)");
}

PlanarFullState consistent_full_state(const PlanarParams& p, double x, double y, double phi,
                                      const Vec3& v, std::span<const Vec2> centers,
                                      std::span<const double> spins) {
  p.validate();
  if (centers.size() != p.n()) throw DomainError("planar: expected one center per ball");
  if (!spins.empty() && spins.size() != p.n()) throw DomainError("planar: expected one spin per ball");
  PlanarFullState f;
  f.x = x;
  f.y = y;
  f.phi = phi;
  f.v = v;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vec2 vc = 0.5 * plate_point_velocity(v, centers[i].x() - x, centers[i].y() - y);
    const double spin = spins.empty() ? 0.0 : spins[i];
    f.centers.push_back(centers[i]);
    f.center_velocities.push_back(vc);
    // gamma x v_c / r + spin gamma, gamma = e3
    f.ball_omegas.emplace_back(-vc.y() / p.r, vc.x() / p.r, spin);
  }
  return f;
}

Vec3 aggregates(const PlanarParams& p, const PlanarFullState& full) {
  const BallDeltas d = ball_deltas(p);
  if (full.centers.size() != p.n()) throw DomainError("planar: expected one center per ball");
  Vec3 out = Vec3::Zero();
  for (std::size_t i = 0; i < p.n(); ++i) {
    const double dx = full.centers[i].x() - full.x;
    const double dy = full.centers[i].y() - full.y;
    out[0] += d.per_ball[i] * dx;
    out[1] += d.per_ball[i] * dy;
    out[2] += d.per_ball[i] * (dx * dx + dy * dy);
  }
  // Relative threshold: for coincident contact points the margin is zero up to roundoff.
  if (!(d.total * out[2] - out[0] * out[0] - out[1] * out[1] > 1e-12 * d.total * out[2]))
    throw DomainError("planar: degenerate configuration, all contact points coincide");
  return out;
}

PlanarReducedState reduce(const PlanarParams& p, const PlanarFullState& full) {
  return {full.v, aggregates(p, full)};
}

SymMat3 mass_matrix(const PlanarParams& p, const PlanarReducedState& s) {
  const double a = p.m + ball_deltas(p).total;
  Mat3 m;
  m << a, 0.0, -s.N2(),
       0.0, a, s.N1(),
       -s.N2(), s.N1(), p.I + s.M();
  return SymMat3(m);
}

double mass_matrix_det(const PlanarParams& p, const PlanarReducedState& s) {
  const double delta = ball_deltas(p).total;
  const double a = p.m + delta;
  return a * (a * p.I + p.m * s.M() + (delta * s.M() - s.N1() * s.N1() - s.N2() * s.N2()));
}

Mat3 mass_matrix_inverse(const PlanarParams& p, const PlanarReducedState& s) {
  const double a = p.m + ball_deltas(p).total;
  const double b = p.I + s.M();
  const double n1 = s.N1(), n2 = s.N2();
  Mat3 inv;
  inv << a * b - n1 * n1, -n1 * n2, a * n2,
         -n1 * n2, a * b - n2 * n2, -a * n1,
         a * n2, -a * n1, a * a;
  return inv / mass_matrix_det(p, s);
}

Vec3 inertial_forcing(const PlanarParams& p, const PlanarReducedState& s) {
  const double delta = ball_deltas(p).total;
  const double vx = s.v[0], vy = s.v[1], w = s.v[2];
  return 0.5 * Vec3(s.N1() * w * w - delta * w * vy,
                    s.N2() * w * w + delta * w * vx,
                    w * (s.N1() * vx + s.N2() * vy));
}

ReducedDerivative reduced_rhs(const PlanarParams& p, const PlanarReducedState& s) {
  require_in_q(p, s);
  const double delta = ball_deltas(p).total;
  const Mat3 inv = adjugate(mass_matrix(p, s).matrix()) / mass_matrix_det(p, s);
  Mat3 jay;
  jay << delta, 0.0, s.N2(),
         0.0, delta, -s.N1(),
         2.0 * s.N1(), 2.0 * s.N2(), 0.0;
  jay *= -0.5;
  return {inv * inertial_forcing(p, s), jay * s.v};
}

Vec3 implicit_residual(const PlanarParams& p, const PlanarReducedState& s, const Vec3& v_dot) {
  const double delta = ball_deltas(p).total;
  const double a = p.m + delta;
  const double vx = s.v[0], vy = s.v[1], w = s.v[2];
  const double n1 = s.N1(), n2 = s.N2();
  return {a * v_dot[0] - (0.5 * n1 * w * w - 0.5 * delta * w * vy + n2 * v_dot[2]),
          a * v_dot[1] - (0.5 * n2 * w * w + 0.5 * delta * w * vx - n1 * v_dot[2]),
          (p.I + s.M()) * v_dot[2] - (0.5 * w * (n1 * vx + n2 * vy) + n2 * v_dot[0] - n1 * v_dot[1])};
}

PoseDerivative kinematic_rhs(const PlanarParams& p, const PlanarFullState& full) {
  if (full.centers.size() != p.n() || full.ball_omegas.size() != p.n())
    throw DomainError("planar: full state does not match the number of balls");
  PoseDerivative out;
  out.plate = full.v;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vec2 vc =
        0.5 * plate_point_velocity(full.v, full.centers[i].x() - full.x, full.centers[i].y() - full.y);
    out.center_velocities.push_back(vc);
    out.ball_omegas.emplace_back(-vc.y() / p.r, vc.x() / p.r, full.ball_omegas[i].z());
  }
  return out;
}

PlanarIntegrals integrals(const PlanarParams& p, const PlanarReducedState& s) {
  const double delta = ball_deltas(p).total;
  const double a = p.m + delta;
  const double vx = s.v[0], vy = s.v[1], w = s.v[2];
  const double n1 = s.N1(), n2 = s.N2();
  PlanarIntegrals f;
  f.f1 = a * vx - w * n2;
  f.f2 = a * vy + w * n1;
  f.f3 = delta * s.M() - n1 * n1 - n2 * n2;
  f.f4 = 0.5 * (p.I + s.M()) * w * w + 0.5 * a * (vx * vx + vy * vy) + w * (n1 * vy - n2 * vx);
  return f;
}

double kinetic_energy(const PlanarParams& p, const PlanarFullState& full) {
  double t = 0.5 * p.I * full.v[2] * full.v[2] + 0.5 * p.m * (full.v[0] * full.v[0] + full.v[1] * full.v[1]);
  for (std::size_t i = 0; i < p.n(); ++i) {
    t += 0.5 * p.balls[i].inertia * full.ball_omegas[i].squaredNorm();
    t += 0.5 * p.balls[i].mass * full.center_velocities[i].squaredNorm();
  }
  return t;
}

double measure_density(const PlanarParams& p, const PlanarReducedState& s) {
  require_in_q(p, s);
  return std::sqrt(mass_matrix_det(p, s));
}

PlanarReducedState embed_level_set(const PlanarParams& p, const LevelSetParams& d, const Vec3& y) {
  if (!(d.d3 > 0.0)) throw DomainError("planar: level-set value d3 must be positive");
  const double delta = ball_deltas(p).total;
  const double a = p.m + delta;
  const double w = y[0], n1 = y[1], n2 = y[2];
  PlanarReducedState s;
  s.v = Vec3((w * n2 + d.d1) / a, (-w * n1 + d.d2) / a, w);
  s.n = Vec3(n1, n2, (n1 * n1 + n2 * n2 + d.d3) / delta);
  return s;
}

double level_set_det(const PlanarParams& p, const LevelSetParams& d, const Vec3& y) {
  if (!(d.d3 > 0.0)) throw DomainError("planar: level-set value d3 must be positive");
  const double delta = ball_deltas(p).total;
  const double a = p.m + delta;
  const double nn = y[1] * y[1] + y[2] * y[2];
  return a * (a * p.I + p.m / delta * nn + p.m * d.d3 / delta + d.d3);
}

double level_set_divergence(const PlanarParams& p, const LevelSetParams& d, const Vec3& y) {
  return p.m * (y[1] * d.d1 + y[2] * d.d2) / (2.0 * level_set_det(p, d, y));
}

Vec3 level_set_rhs(const PlanarParams& p, const LevelSetParams& d, const Vec3& y) {
  const double delta = ball_deltas(p).total;
  const double a = p.m + delta;
  const double w = y[0], n1 = y[1], n2 = y[2];
  const double rate = (p.m + 2.0 * delta) / (2.0 * a);
  return {p.m * w * (n1 * d.d1 + n2 * d.d2) / (2.0 * level_set_det(p, d, y)),
          -rate * n2 * w - delta * d.d1 / (2.0 * a),
          rate * n1 * w - delta * d.d2 / (2.0 * a)};
}

Vec3 closed_form_zero_d(const PlanarParams& p, double d3, const Vec3& y0, double t) {
  if (!(d3 > 0.0)) throw DomainError("planar: level-set value d3 must be positive");
  const double delta = ball_deltas(p).total;
  const double angle = (p.m + 2.0 * delta) * y0[0] / (2.0 * (p.m + delta)) * t;
  const double c = std::cos(angle), s = std::sin(angle);
  return {y0[0], c * y0[1] - s * y0[2], s * y0[1] + c * y0[2]};
}

std::vector<double> pairwise_distances(std::span<const Vec2> centers) {
  std::vector<double> out;
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j) out.push_back((centers[i] - centers[j]).norm());
  return out;
}

double triangle_residuals(std::span<const PlanarFullState> trajectory) {
  if (trajectory.empty()) return 0.0;
  const auto ref = pairwise_distances(trajectory.front().centers);
  double worst = 0.0;
  for (const auto& f : trajectory) {
    const auto cur = pairwise_distances(f.centers);
    if (cur.size() != ref.size()) throw DomainError("planar: ball count changed along trajectory");
    for (std::size_t k = 0; k < cur.size(); ++k) worst = std::max(worst, std::abs(cur[k] - ref[k]));
  }
  return worst;
}

double one_side_margin(const PlanarParams& p, std::span<const Vec2> centers) {
  double margin = std::numeric_limits<double>::infinity();
  for (double dist : pairwise_distances(centers)) margin = std::min(margin, dist - 2.0 * p.r);
  return margin;
}

State pack(const PlanarReducedState& s) {
  State x(6);
  x << s.v, s.n;
  return x;
}

PlanarReducedState unpack_reduced(const State& x) {
  if (x.size() != 6) throw DomainError("planar: reduced state must have 6 components");
  return {x.head<3>(), x.tail<3>()};
}

std::size_t configuration_dim(const PlanarParams& p) { return 6 + 2 * p.n(); }

State pack_configuration(const PlanarFullState& full) {
  State x(static_cast<Eigen::Index>(6 + 2 * full.centers.size()));
  x.head<3>() = full.v;
  x[3] = full.x;
  x[4] = full.y;
  x[5] = full.phi;
  for (std::size_t i = 0; i < full.centers.size(); ++i)
    x.segment<2>(static_cast<Eigen::Index>(6 + 2 * i)) = full.centers[i];
  return x;
}

PlanarFullState unpack_configuration(const PlanarParams& p, const State& x, std::span<const double> spins) {
  if (static_cast<std::size_t>(x.size()) != configuration_dim(p))
    throw DomainError("planar: configuration vector has wrong dimension");
  std::vector<Vec2> centers;
  for (std::size_t i = 0; i < p.n(); ++i) centers.emplace_back(x.segment<2>(static_cast<Eigen::Index>(6 + 2 * i)));
  return consistent_full_state(p, x[3], x[4], x[5], x.head<3>(), centers, spins);
}

ReducedField::ReducedField(PlanarParams p) : p_(std::move(p)) { p_.validate(); }

State ReducedField::operator()(const State& x) const {
  const ReducedDerivative d = reduced_rhs(p_, unpack_reduced(x));
  State dx(6);
  dx << d.v_dot, d.n_dot;
  return dx;
}

ReducedDensity::ReducedDensity(PlanarParams p) : p_(std::move(p)) { p_.validate(); }

double ReducedDensity::operator()(const State& x) const {
  return std::sqrt(mass_matrix_det(p_, unpack_reduced(x)));
}

ConfigurationField::ConfigurationField(PlanarParams p) : p_(std::move(p)) { p_.validate(); }

State ConfigurationField::operator()(const State& x) const {
  const PlanarFullState full = unpack_configuration(p_, x);
  const ReducedDerivative d = reduced_rhs(p_, reduce(p_, full));
  const PoseDerivative pose = kinematic_rhs(p_, full);
  State dx(x.size());
  dx.head<3>() = d.v_dot;
  dx.segment<3>(3) = pose.plate;
  for (std::size_t i = 0; i < p_.n(); ++i)
    dx.segment<2>(static_cast<Eigen::Index>(6 + 2 * i)) = pose.center_velocities[i];
  return dx;
}

LevelSetField::LevelSetField(PlanarParams p, LevelSetParams d) : p_(std::move(p)), d_(d) {
  p_.validate();
  if (!(d_.d3 > 0.0)) throw DomainError("planar: level-set value d3 must be positive");
}

State LevelSetField::operator()(const State& y) const {
  if (y.size() != 3) throw DomainError("planar: level-set state must have 3 components");
  const Vec3 dy = level_set_rhs(p_, d_, y.head<3>());
  return State(dy);
}

LevelSetDensity::LevelSetDensity(PlanarParams p, LevelSetParams d) : p_(std::move(p)), d_(d) {
  p_.validate();
}

double LevelSetDensity::operator()(const State& y) const {
  return std::sqrt(level_set_det(p_, d_, y.head<3>()));
}

}  // namespace bearing::planar

#include "bearing/spherical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bearing::spherical {

namespace {

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

double ball_weight(const SphericalParams& p, const Ball& b) { return b.inertia + b.mass * p.r * p.r; }

Mat3 gamma_operator_raw(const SphericalParams& p, double delta, std::span<const Vec3> gamma) {
  Mat3 op = Mat3::Zero();
  for (std::size_t i = 0; i < p.n(); ++i)
    op -= delta * delta * ball_weight(p, p.balls[i]) * projector_unnormalized(gamma[i]);
  return op;
}

Vec3 n_vector_raw(const SphericalParams& p, double delta, std::span<const Vec3> gamma) {
  Vec3 n = Vec3::Zero();
  for (std::size_t i = 0; i < p.n(); ++i) n += p.balls[i].inertia * p.balls[i].c * gamma[i];
  return delta * n;
}

Vec3 omega_ball_raw(double delta, const Vec3& omega, const Vec3& gamma, double c) {
  return c * gamma + delta * omega - delta * gamma.dot(omega) * gamma;
}

// I Omega' = I Omega x Omega - (1 - eps) (Gop Omega) x Omega + (1 - eps) N x Omega
Vec3 omega_dot_raw(const SphericalParams& p, const DerivedParams& d, const Vec3& omega,
                   std::span<const Vec3> gamma) {
  const Mat3 op = gamma_operator_raw(p, d.delta, gamma);
  const Mat3 inertia = p.body_inertia();
  const Vec3 n = n_vector_raw(p, d.delta, gamma);
  const double k = 1.0 - d.epsilon;
  const Vec3 rhs = (inertia * omega).cross(omega) - k * (op * omega).cross(omega) + k * n.cross(omega);
  const Eigen::LLT<Mat3> llt(inertia - op);
  if (llt.info() != Eigen::Success)
    throw DomainError("spherical: modified inertia is not positive definite");
  return llt.solve(rhs);
}

std::vector<Vec3> raw(std::span<const UnitVec3> gamma) {
  std::vector<Vec3> out;
  out.reserve(gamma.size());
  for (const auto& g : gamma) out.push_back(g.vec());
  return out;
}

void require_count(const SphericalParams& p, std::size_t count) {
  if (count != p.n())
    throw DomainError("spherical: expected " + std::to_string(p.n()) + " ball directions, got " +
                      std::to_string(count));
}

Mat3 map_mat(const State& x, std::size_t offset) {
  return Eigen::Map<const Mat3>(x.data() + offset);
}

}  // namespace

void SphericalParams::validate() const {
  if (!positive(R) || !positive(r)) throw DomainError("spherical: radii R and r must be positive");
  if (!positive(A) || !positive(B) || !positive(C))
    throw DomainError("spherical: principal moments A, B, C must be positive");
  if (balls.empty() && !allow_no_balls) throw DomainError("spherical: at least one ball is required");
  for (const auto& b : balls) {
    if (!positive(b.inertia) || !positive(b.mass))
      throw DomainError("spherical: ball inertia and mass must be positive");
    if (!std::isfinite(b.c)) throw DomainError("spherical: ball constant c must be finite");
  }
  if (epsilon_override && !std::isfinite(*epsilon_override))
    throw DomainError("spherical: epsilon override must be finite");
}

SphericalParams SphericalParams::free_body(double A, double B, double C) {
  SphericalParams p;
  p.A = A;
  p.B = B;
  p.C = C;
  p.allow_no_balls = true;
  return p;
}

double ConstraintResiduals::max() const {
  double m = 0.0;
  for (double v : lower) m = std::max(m, v);
  for (double v : upper) m = std::max(m, v);
  return m;
}

DerivedParams derived_params(const SphericalParams& p) {
  if (!positive(p.R) || !positive(p.r)) throw DomainError("spherical: radii R and r must be positive");
  DerivedParams d;
  d.epsilon = p.epsilon_override ? *p.epsilon_override : p.R / (2.0 * p.R + 2.0 * p.r);
  d.delta = (p.R + 2.0 * p.r) / (2.0 * p.r);
  return d;
}

SymMat3 modified_inertia(const SphericalParams& p, std::span<const UnitVec3> gamma) {
  require_count(p, gamma.size());
  const double delta = derived_params(p).delta;
  Mat3 m = p.body_inertia();
  for (std::size_t i = 0; i < p.n(); ++i)
    m += delta * delta * ball_weight(p, p.balls[i]) * projector(gamma[i]).matrix();
  return SymMat3::symmetrized(m);
}

SymMat3 gamma_operator(const SphericalParams& p, std::span<const UnitVec3> gamma) {
  require_count(p, gamma.size());
  const auto g = raw(gamma);
  return SymMat3::symmetrized(gamma_operator_raw(p, derived_params(p).delta, g));
}

MN vectors_MN(const SphericalParams& p, const SphericalState& s) {
  require_count(p, s.gamma.size());
  const auto g = raw(s.gamma);
  return {modified_inertia(p, s.gamma) * s.omega, n_vector_raw(p, derived_params(p).delta, g)};
}

Vec3 omega_ball(const SphericalParams& p, const Vec3& omega, const UnitVec3& gamma, double c) {
  return omega_ball_raw(derived_params(p).delta, omega, gamma.vec(), c);
}

ReducedDerivative reduced_rhs(const SphericalParams& p, const SphericalState& s) {
  p.validate();
  require_count(p, s.gamma.size());
  const DerivedParams d = derived_params(p);
  const auto g = raw(s.gamma);
  ReducedDerivative out;
  out.omega_dot = omega_dot_raw(p, d, s.omega, g);
  out.gamma_dot.reserve(p.n());
  for (const auto& gi : g) out.gamma_dot.push_back(d.epsilon * gi.cross(s.omega));
  return out;
}

SphericalIntegrals integrals(const SphericalParams& p, const SphericalState& s) {
  const auto [M, N] = vectors_MN(p, s);
  SphericalIntegrals out;
  out.F1 = 0.5 * M.dot(s.omega);
  out.F2 = (M + N).squaredNorm();
  out.gram.resize(static_cast<Eigen::Index>(p.n()), static_cast<Eigen::Index>(p.n()));
  for (std::size_t i = 0; i < p.n(); ++i)
    for (std::size_t j = 0; j < p.n(); ++j)
      out.gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          s.gamma[i].vec().dot(s.gamma[j].vec());
  double spin = 0.0;
  for (const auto& b : p.balls) spin += b.inertia * b.c * b.c;
  out.T = out.F1 + 0.5 * spin;
  return out;
}

double measure_density(const SphericalParams& p, std::span<const UnitVec3> gamma) {
  return std::sqrt(modified_inertia(p, gamma).matrix().determinant());
}

FullDerivative full_rhs(const SphericalParams& p, const FullSphericalState& f) {
  require_count(p, f.g_balls.size());
  const DerivedParams d = derived_params(p);
  FullDerivative out;
  out.reduced = reduced_rhs(p, f.reduced);
  const Mat3& g = f.g.matrix();
  out.g_dot = g * hat(f.reduced.omega).matrix();
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vec3 wi = omega_ball_raw(d.delta, f.reduced.omega, f.reduced.gamma[i].vec(), p.balls[i].c);
    // Space-frame ball angular velocity is g Omega_i.
    out.g_balls_dot.push_back(hat(g * wi).matrix() * f.g_balls[i].matrix());
  }
  return out;
}

ConstraintResiduals constraint_residuals(const SphericalParams& p, const SphericalState& s,
                                         std::span<const Vec3> ball_omegas) {
  require_count(p, s.gamma.size());
  require_count(p, ball_omegas.size());
  const DerivedParams d = derived_params(p);
  ConstraintResiduals out;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vec3& g = s.gamma[i].vec();
    const Vec3 gamma_dot = d.epsilon * g.cross(s.omega);
    const Vec3 v_center = (p.R + p.r) * (gamma_dot + s.omega.cross(g));
    const Vec3 roll = p.r * ball_omegas[i].cross(g);
    out.lower.push_back((v_center - roll).norm());
    out.upper.push_back(((p.R + 2.0 * p.r) * s.omega.cross(g) - roll - v_center).norm());
  }
  return out;
}

ConstraintResiduals constraint_residuals(const SphericalParams& p, const FullSphericalState& f) {
  std::vector<Vec3> w;
  for (std::size_t i = 0; i < p.n(); ++i)
    w.push_back(omega_ball(p, f.reduced.omega, f.reduced.gamma[i], p.balls[i].c));
  return constraint_residuals(p, f.reduced, w);
}

double space_frame_kinematics_residual(const SphericalParams& p, const FullSphericalState& f) {
  const FullDerivative fd = full_rhs(p, f);
  const Mat3& g = f.g.matrix();
  const double k = p.r / (p.R + p.r);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vec3& gi = f.reduced.gamma[i].vec();
    const Vec3 gamma_space = g * gi;
    const Vec3 gamma_space_dot = fd.g_dot * gi + g * fd.reduced.gamma_dot[i];
    const Vec3 w_space = g * omega_ball(p, f.reduced.omega, f.reduced.gamma[i], p.balls[i].c);
    worst = std::max(worst, (gamma_space_dot - k * w_space.cross(gamma_space)).norm());
  }
  return worst;
}

double collision_margin(const SphericalParams& p, std::span<const UnitVec3> gamma) {
  double margin = std::numeric_limits<double>::infinity();
  const double bound = 2.0 * p.r / (p.r + p.R);
  for (std::size_t i = 0; i < gamma.size(); ++i)
    for (std::size_t j = i + 1; j < gamma.size(); ++j)
      margin = std::min(margin, (gamma[i].vec() - gamma[j].vec()).norm() - bound);
  return margin;
}

std::size_t reduced_dim(const SphericalParams& p) { return 3 + 3 * p.n(); }
std::size_t full_dim(const SphericalParams& p) { return reduced_dim(p) + 9 * (p.n() + 1); }

State pack(const SphericalState& s) {
  State x(static_cast<Eigen::Index>(3 + 3 * s.gamma.size()));
  x.head<3>() = s.omega;
  for (std::size_t i = 0; i < s.gamma.size(); ++i)
    x.segment<3>(static_cast<Eigen::Index>(3 + 3 * i)) = s.gamma[i].vec();
  return x;
}

State pack(const FullSphericalState& f) {
  const State red = pack(f.reduced);
  const auto n = f.g_balls.size();
  State x(red.size() + static_cast<Eigen::Index>(9 * (n + 1)));
  x.head(red.size()) = red;
  Eigen::Map<Mat3>(x.data() + red.size()) = f.g.matrix();
  for (std::size_t i = 0; i < n; ++i)
    Eigen::Map<Mat3>(x.data() + red.size() + 9 * (i + 1)) = f.g_balls[i].matrix();
  return x;
}

SphericalState unpack_reduced(const SphericalParams& p, const State& x) {
  if (static_cast<std::size_t>(x.size()) < reduced_dim(p))
    throw DomainError("spherical: state vector too short");
  SphericalState s;
  s.omega = x.head<3>();
  for (std::size_t i = 0; i < p.n(); ++i)
    s.gamma.emplace_back(Vec3(x.segment<3>(static_cast<Eigen::Index>(3 + 3 * i))));
  return s;
}

FullSphericalState unpack_full(const SphericalParams& p, const State& x, double rotation_tol) {
  if (static_cast<std::size_t>(x.size()) != full_dim(p))
    throw DomainError("spherical: full state vector has wrong dimension");
  FullSphericalState f;
  f.reduced = unpack_reduced(p, x);
  const std::size_t base = reduced_dim(p);
  f.g = RotMat3(map_mat(x, base), rotation_tol);
  for (std::size_t i = 0; i < p.n(); ++i)
    f.g_balls.emplace_back(map_mat(x, base + 9 * (i + 1)), rotation_tol);
  return f;
}

ExtendedField::ExtendedField(SphericalParams p) : p_(std::move(p)) {
  p_.validate();
  d_ = derived_params(p_);
}

State ExtendedField::operator()(const State& x) const {
  const std::size_t n = p_.n();
  const Vec3 omega = x.head<3>();
  std::vector<Vec3> gamma(n);
  for (std::size_t i = 0; i < n; ++i) gamma[i] = x.segment<3>(static_cast<Eigen::Index>(3 + 3 * i));
  State dx(x.size());
  dx.head<3>() = omega_dot_raw(p_, d_, omega, gamma);
  for (std::size_t i = 0; i < n; ++i)
    dx.segment<3>(static_cast<Eigen::Index>(3 + 3 * i)) = d_.epsilon * gamma[i].cross(omega);
  return dx;
}

ExtendedDensity::ExtendedDensity(SphericalParams p) : p_(std::move(p)) {
  p_.validate();
  d_ = derived_params(p_);
}

double ExtendedDensity::operator()(const State& x) const {
  std::vector<Vec3> gamma(p_.n());
  for (std::size_t i = 0; i < p_.n(); ++i) gamma[i] = x.segment<3>(static_cast<Eigen::Index>(3 + 3 * i));
  return std::sqrt((p_.body_inertia() - gamma_operator_raw(p_, d_.delta, gamma)).determinant());
}

FullField::FullField(SphericalParams p) : p_(p), d_(derived_params(p)), reduced_(std::move(p)) {}

State FullField::operator()(const State& x) const {
  const std::size_t n = p_.n();
  const auto base = static_cast<Eigen::Index>(reduced_dim(p_));
  State dx(x.size());
  const State red = x.head(base);
  dx.head(base) = reduced_(red);
  const Vec3 omega = x.head<3>();
  const Mat3 g = map_mat(x, static_cast<std::size_t>(base));
  Eigen::Map<Mat3>(dx.data() + base) = g * hat(omega).matrix();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 gi = x.segment<3>(static_cast<Eigen::Index>(3 + 3 * i));
    const Vec3 wi = omega_ball_raw(d_.delta, omega, gi, p_.balls[i].c);
    const auto off = static_cast<std::size_t>(base) + 9 * (i + 1);
    Eigen::Map<Mat3>(dx.data() + off) = hat(g * wi).matrix() * map_mat(x, off);
  }
  return dx;
}

StepObserver renormalization_observer(const SphericalParams& p, bool full, int every,
                                      double threshold, int* count) {
  const std::size_t n = p.n();
  return [n, full, every, threshold, count](std::int64_t step, double, State& x) {
    if (every <= 0 || step % every != 0) return true;
    for (std::size_t i = 0; i < n; ++i) {
      auto seg = x.segment<3>(static_cast<Eigen::Index>(3 + 3 * i));
      if (std::abs(seg.norm() - 1.0) > threshold) {
        seg.normalize();
        if (count) ++*count;
      }
    }
    if (full) {
      const auto base = 3 + 3 * n;
      for (std::size_t k = 0; k <= n; ++k) {
        Eigen::Map<Mat3> rot(x.data() + base + 9 * k);
        if (orthogonality_defect(rot) > threshold) {
          rot = reorthonormalize(rot);
          if (count) ++*count;
        }
      }
    }
    return true;
  };
}

}  // namespace bearing::spherical

#include "bearing/spherical.hpp"
#include "bearing/verification.hpp"

#include "../support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bearing;
using namespace bearing::spherical;

namespace {

/// I = diag(1, 2, 3), r = 1, R = 2 (delta = 2), one ball with I_1 = 0.5, m_1 = 1.
SphericalParams textbook(double c = 0.0) {
  SphericalParams p;
  p.R = 2.0;
  p.r = 1.0;
  p.A = 1.0;
  p.B = 2.0;
  p.C = 3.0;
  p.balls = {{0.5, 1.0, c}};
  return p;
}

SphericalParams generic(std::size_t n) {
  SphericalParams p;
  p.R = 1.7;
  p.r = 0.4;
  p.A = 2.0;
  p.B = 3.0;
  p.C = 4.0;
  const double cs[] = {0.1, -0.4, 0.6};
  for (std::size_t i = 0; i < n; ++i) p.balls.push_back({0.05 + 0.03 * i, 0.8 + 0.4 * i, cs[i]});
  return p;
}

std::vector<Vec3> raw(const SphericalState& s) {
  std::vector<Vec3> out;
  for (const auto& g : s.gamma) out.push_back(g.vec());
  return out;
}

Mat3 diag(double a, double b, double c) { return Vec3(a, b, c).asDiagonal(); }

}  // namespace

TEST(DerivedParams, Examples) {
  SphericalParams p = textbook();
  EXPECT_DOUBLE_EQ(derived_params(p).epsilon, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(derived_params(p).delta, 2.0);
  p.R = 1.0;
  EXPECT_DOUBLE_EQ(derived_params(p).epsilon, 0.25);
  EXPECT_DOUBLE_EQ(derived_params(p).delta, 1.5);
  p.R = 1e9;
  EXPECT_LE(std::abs(derived_params(p).epsilon - 0.5), 1e-8);
}

TEST(DerivedParams, OverrideReplacesEpsilon) {
  SphericalParams p = textbook();
  p.epsilon_override = 1.0;
  EXPECT_EQ(derived_params(p).epsilon, 1.0);
  EXPECT_DOUBLE_EQ(derived_params(p).delta, 2.0);
}

TEST(Params, Validation) {
  SphericalParams p = textbook();
  p.R = -1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = textbook();
  p.balls.clear();
  EXPECT_THROW(p.validate(), DomainError);
  p = textbook();
  p.balls[0].mass = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
  EXPECT_NO_THROW(SphericalParams::free_body(1, 2, 3).validate());
}

TEST(ModifiedInertia, Examples) {
  const SphericalParams p = textbook();
  const std::vector<UnitVec3> up = {UnitVec3(0, 0, 1)};
  const std::vector<UnitVec3> side = {UnitVec3(1, 0, 0)};
  EXPECT_LE((modified_inertia(p, up).matrix() - diag(7, 8, 3)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((modified_inertia(p, side).matrix() - diag(1, 8, 9)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((gamma_operator(p, up).matrix() - diag(-6, -6, 0)).cwiseAbs().maxCoeff(), 1e-14);
  const auto top = SphericalParams::free_body(1, 2, 3);
  EXPECT_EQ(modified_inertia(top, {}).matrix(), diag(1, 2, 3));
}

TEST(ModifiedInertia, MatchesEnergyPolarization) {
  verification::Rng rng(21);
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto p = generic(n);
    for (int k = 0; k < 20; ++k) {
      const auto s = verification::random_spherical_state(p, rng);
      const Mat3 expected = oracles::spherical_inertia_from_energy(p, raw(s));
      EXPECT_LE((modified_inertia(p, s.gamma).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ModifiedInertia, EqualsInertiaMinusGammaOperator) {
  verification::Rng rng(22);
  for (int k = 0; k < 50; ++k) {
    const auto p = generic(1 + k % 3);
    const auto s = verification::random_spherical_state(p, rng);
    const Mat3 diff = p.body_inertia() - gamma_operator(p, s.gamma).matrix() - modified_inertia(p, s.gamma).matrix();
    EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(VectorsMN, Examples) {
  SphericalState s;
  s.omega = Vec3(1, 1, 1);
  s.gamma = {UnitVec3(0, 0, 1)};
  auto mn = vectors_MN(textbook(), s);
  EXPECT_LE((mn.M - Vec3(7, 8, 3)).norm(), 1e-14);
  EXPECT_EQ(mn.N, Vec3::Zero());
  mn = vectors_MN(textbook(3.0), s);
  EXPECT_LE((mn.N - Vec3(0, 0, 3)).norm(), 1e-14);
}

TEST(OmegaBall, Examples) {
  const auto p = textbook();
  EXPECT_LE(omega_ball(p, Vec3(0, 0, 5), UnitVec3(0, 0, 1), 0.0).norm(), 1e-15);
  const Vec3 w = omega_ball(p, Vec3(1, 0, 0), UnitVec3(0, 0, 1), 2.0);
  EXPECT_LE((w - Vec3(2, 0, 2)).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(w.dot(Vec3(0, 0, 1)), 2.0);
  EXPECT_LE((w.cross(Vec3(0, 0, 1)) - Vec3(0, -2, 0)).norm(), 1e-15);
  EXPECT_LE((omega_ball(p, Vec3::Zero(), UnitVec3(0, 0.6, 0.8), 1.5) - Vec3(0, 0.9, 1.2)).norm(), 1e-15);
}

TEST(OmegaBall, MatchesConstraintDerivation) {
  verification::Rng rng(23);
  const auto p = generic(1);
  for (int k = 0; k < 50; ++k) {
    const auto s = verification::random_spherical_state(p, rng);
    const Vec3 expected = oracles::ball_omega(p.R, p.r, s.omega, s.gamma[0].vec(), p.balls[0].c);
    EXPECT_LE((omega_ball(p, s.omega, s.gamma[0], p.balls[0].c) - expected).norm(), 1e-14);
  }
}

TEST(ReducedRhs, SteadyRotationAboutBallAxis) {
  SphericalState s;
  s.omega = Vec3(0, 0, 1.7);
  s.gamma = {UnitVec3(0, 0, 1)};
  const auto d = reduced_rhs(textbook(), s);
  EXPECT_LE(d.omega_dot.norm(), 1e-15);
  EXPECT_LE(d.gamma_dot[0].norm(), 1e-15);
}

TEST(ReducedRhs, GammaDotExample) {
  SphericalState s;
  s.omega = Vec3(0, 0, 1);
  s.gamma = {UnitVec3(1, 0, 0)};
  const auto d = reduced_rhs(textbook(), s);
  EXPECT_LE((d.gamma_dot[0] - Vec3(0, -1.0 / 3.0, 0)).norm(), 1e-15);
}

TEST(ReducedRhs, RestIsEquilibrium) {
  SphericalState s;
  s.gamma = {UnitVec3(0.6, 0, 0.8), UnitVec3(-0.6, 0, 0.8)};
  auto p = generic(2);
  for (auto& b : p.balls) b.c = 0.0;
  const auto d = reduced_rhs(p, s);
  EXPECT_EQ(d.omega_dot, Vec3::Zero());
  for (const auto& g : d.gamma_dot) EXPECT_EQ(g, Vec3::Zero());
}

TEST(ReducedRhs, RejectsBallCountMismatch) {
  SphericalState s;
  s.gamma = {UnitVec3(0, 0, 1), UnitVec3(1, 0, 0)};
  EXPECT_THROW(reduced_rhs(textbook(), s), DomainError);
}

TEST(ReducedRhs, FirstIntegralsHaveZeroRate) {
  // Chain rule with the inertia rebuilt independently in the test.
  const auto p = generic(2);
  verification::Rng rng(24);
  for (int k = 0; k < 20; ++k) {
    SphericalState s = verification::random_spherical_state(p, rng);
    s.omega = Vec3(0.3, -0.2, 0.5);
    const auto d = reduced_rhs(p, s);
    const double delta = (p.R + 2.0 * p.r) / (2.0 * p.r);
    Mat3 inertia = p.body_inertia();
    Mat3 inertia_dot = Mat3::Zero();
    Vec3 n = Vec3::Zero(), n_dot = Vec3::Zero();
    for (std::size_t i = 0; i < p.n(); ++i) {
      const double w = delta * delta * (p.balls[i].inertia + p.balls[i].mass * p.r * p.r);
      const Vec3& g = s.gamma[i].vec();
      inertia += w * (Mat3::Identity() - g * g.transpose());
      inertia_dot -= w * (d.gamma_dot[i] * g.transpose() + g * d.gamma_dot[i].transpose());
      n += delta * p.balls[i].inertia * p.balls[i].c * g;
      n_dot += delta * p.balls[i].inertia * p.balls[i].c * d.gamma_dot[i];
    }
    const Vec3 m = inertia * s.omega;
    const Vec3 m_dot = inertia_dot * s.omega + inertia * d.omega_dot;
    const double f1_dot = 0.5 * (m_dot.dot(s.omega) + m.dot(d.omega_dot));
    const double f2_dot = 2.0 * (m + n).dot(m_dot + n_dot);
    EXPECT_LE(std::abs(f1_dot), 1e-10);
    EXPECT_LE(std::abs(f2_dot), 1e-10);
    for (std::size_t i = 0; i < p.n(); ++i)
      for (std::size_t j = 0; j < p.n(); ++j)
        EXPECT_LE(std::abs(d.gamma_dot[i].dot(s.gamma[j].vec()) + s.gamma[i].vec().dot(d.gamma_dot[j])), 1e-14);
  }
}

TEST(Integrals, SteadyStateValues) {
  const double w = 1.3;
  SphericalState s;
  s.omega = Vec3(0, 0, w);
  s.gamma = {UnitVec3(0, 0, 1)};
  const auto in = integrals(textbook(), s);
  EXPECT_NEAR(in.F1, 0.5 * 3.0 * w * w, 1e-14);
  EXPECT_NEAR(in.F2, 9.0 * w * w, 1e-13);
  EXPECT_DOUBLE_EQ(in.T, in.F1);
}

TEST(Integrals, GramOfOrthogonalDirections) {
  SphericalState s;
  s.gamma = {UnitVec3(0, 0, 1), UnitVec3(1, 0, 0)};
  const auto in = integrals(generic(2), s);
  EXPECT_TRUE(in.gram.isIdentity(1e-15));
}

TEST(Integrals, EnergyMatchesBodyByBodySum) {
  verification::Rng rng(25);
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto p = generic(n);
    for (int k = 0; k < 20; ++k) {
      const auto s = verification::random_spherical_state(p, rng);
      EXPECT_NEAR(integrals(p, s).T, oracles::spherical_energy(p, s.omega, raw(s)), 1e-12);
    }
  }
}

TEST(MeasureDensity, Examples) {
  const std::vector<UnitVec3> up = {UnitVec3(0, 0, 1)};
  EXPECT_NEAR(measure_density(textbook(), up), std::sqrt(168.0), 1e-13);
  EXPECT_NEAR(measure_density(SphericalParams::free_body(1, 2, 3), {}), std::sqrt(6.0), 1e-15);
}

TEST(GammaOperator, EvolutionMatchesCommutatorAlongFlow) {
  const auto p = generic(2);
  verification::Rng rng(26);
  const auto s = verification::random_spherical_state(p, rng);
  const double h = 1e-5;
  const ExtendedField field(p);
  const auto at = [&](double t) {
    if (t == 0.0) return pack(s);
    const State x = integrate(field, pack(s), {h, std::abs(t), 1 << 30}).final_state();
    return x;
  };
  const auto backward = [&](const State& x) { return State(-field(x)); };
  const State plus = at(h);
  const State minus = integrate(backward, pack(s), {h, h, 1}).final_state();
  const Mat3 op_plus = gamma_operator(p, unpack_reduced(p, plus).gamma).matrix();
  const Mat3 op_minus = gamma_operator(p, unpack_reduced(p, minus).gamma).matrix();
  const Mat3 fd = (op_plus - op_minus) / (2.0 * h);
  const double eps = derived_params(p).epsilon;
  const Mat3 expected = eps * commutator(gamma_operator(p, s.gamma).matrix(), hat(s.omega).matrix());
  EXPECT_LE((fd - expected).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FullRhs, RestHasZeroDerivatives) {
  auto p = generic(2);
  for (auto& b : p.balls) b.c = 0.0;
  FullSphericalState f;
  f.reduced.gamma = {UnitVec3(1, 0, 0), UnitVec3(0, 1, 0)};
  f.g_balls.assign(2, RotMat3());
  const auto d = full_rhs(p, f);
  EXPECT_TRUE(d.g_dot.isZero(0.0));
  for (const auto& m : d.g_balls_dot) EXPECT_TRUE(m.isZero(0.0));
}

TEST(FullRhs, SteadyRotationKeepsAxisFixed) {
  const auto p = textbook();
  FullSphericalState f;
  f.reduced.omega = Vec3(0, 0, 0.9);
  f.reduced.gamma = {UnitVec3(0, 0, 1)};
  f.g_balls.assign(1, RotMat3());
  const auto flow = integrate(FullField(p), pack(f), {1e-3, 3.0, 100});
  for (std::size_t k = 0; k < flow.states.size(); ++k) {
    const auto full = unpack_full(p, flow.states[k]);
    EXPECT_LE((full.g * Vec3(0, 0, 1) - Vec3(0, 0, 1)).norm(), 1e-12);
    const double t = flow.times[k];
    EXPECT_LE((full.g.matrix() - RotMat3::about_axis(Vec3(0, 0, 1), 0.9 * t).matrix()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Constraints, ExactForComputedBallVelocities) {
  verification::Rng rng(27);
  const auto p = generic(3);
  for (int k = 0; k < 20; ++k) {
    const auto s = verification::random_spherical_state(p, rng);
    std::vector<Vec3> ws;
    for (std::size_t i = 0; i < p.n(); ++i) ws.push_back(omega_ball(p, s.omega, s.gamma[i], p.balls[i].c));
    EXPECT_LE(constraint_residuals(p, s, ws).max(), 1e-13);
    // Axial perturbation changes only c_i.
    for (std::size_t i = 0; i < p.n(); ++i) ws[i] += 0.1 * s.gamma[i].vec();
    EXPECT_LE(constraint_residuals(p, s, ws).max(), 1e-13);
  }
}

TEST(Constraints, OrthogonalPerturbationShowsUp) {
  const auto p = generic(1);
  SphericalState s;
  s.omega = Vec3(0.2, -0.5, 0.3);
  s.gamma = {UnitVec3(0, 0, 1)};
  std::vector<Vec3> ws = {omega_ball(p, s.omega, s.gamma[0], p.balls[0].c) + Vec3(0.1, 0, 0)};
  const auto res = constraint_residuals(p, s, ws);
  EXPECT_NEAR(res.lower[0], 0.1 * p.r, 1e-14);
}

TEST(Constraints, CenterVelocityMatchesIndependentDerivation) {
  // Lower-contact form V_O = r Omega_i x Gamma with the oracle's Omega_i.
  verification::Rng rng(28);
  const auto p = generic(1);
  for (int k = 0; k < 20; ++k) {
    const auto s = verification::random_spherical_state(p, rng);
    const Vec3 g = s.gamma[0].vec();
    const Vec3 wi = oracles::ball_omega(p.R, p.r, s.omega, g, p.balls[0].c);
    EXPECT_LE((p.r * wi.cross(g) - oracles::ball_center_velocity(p.R, p.r, s.omega, g)).norm(), 1e-14);
    const auto d = reduced_rhs(p, s);
    const Vec3 v_from_field = (p.R + p.r) * (d.gamma_dot[0] + s.omega.cross(g));
    EXPECT_LE((v_from_field - oracles::ball_center_velocity(p.R, p.r, s.omega, g)).norm(), 1e-14);
  }
}

TEST(Kinematics, SpaceFrameResidualAlongTrajectory) {
  verification::Rng rng(29);
  const auto p = generic(2);
  verification::SphericalRunOptions opt;
  opt.h = 1e-3;
  opt.t_end = 3.0;
  opt.reconstruct = true;
  const auto rep = verification::spherical_run(p, verification::random_spherical_state(p, rng), opt).report;
  EXPECT_LE(*rep.kinematics_residual, 1e-8);
  EXPECT_LE(*rep.orthogonality_drift, 1e-9);
}

TEST(Kinematics, SpaceFrameCheckByFiniteDifferences) {
  // gamma_i = g Gamma_i differentiated numerically along the integrated flow.
  verification::Rng rng(30);
  const auto p = generic(2);
  FullSphericalState f;
  f.reduced = verification::random_spherical_state(p, rng);
  f.g = RotMat3::about_axis(Vec3(1, 1, 0), 0.4);
  f.g_balls.assign(2, RotMat3());
  const FullField field(p);
  const double h = 1e-4;
  const State x0 = pack(f);
  const State xp = rk4_step(field, x0, h);
  const State xm = rk4_step([&](const State& x) { return State(-field(x)); }, x0, h);
  const auto fp = unpack_full(p, xp), fm = unpack_full(p, xm);
  const double k = p.r / (p.R + p.r);
  for (std::size_t i = 0; i < p.n(); ++i) {
    const Vec3 gamma_dot = (fp.g * fp.reduced.gamma[i].vec() - fm.g * fm.reduced.gamma[i].vec()) / (2.0 * h);
    const Vec3 w = f.g * omega_ball(p, f.reduced.omega, f.reduced.gamma[i], p.balls[i].c);
    EXPECT_LE((gamma_dot - k * w.cross(f.g * f.reduced.gamma[i].vec())).norm(), 1e-7);
  }
}

TEST(Pack, RoundTripAndRotationCheck) {
  const auto p = generic(2);
  FullSphericalState f;
  f.reduced.omega = Vec3(1, 2, 3);
  f.reduced.gamma = {UnitVec3(0, 0, 1), UnitVec3(1, 0, 0)};
  f.g = RotMat3::about_axis(Vec3(0, 1, 0), 0.3);
  f.g_balls = {RotMat3::about_axis(Vec3(1, 0, 0), 0.1), RotMat3()};
  State x = pack(f);
  ASSERT_EQ(static_cast<std::size_t>(x.size()), full_dim(p));
  const auto back = unpack_full(p, x);
  EXPECT_EQ(back.g.matrix(), f.g.matrix());
  EXPECT_EQ(back.reduced.omega, f.reduced.omega);
  x[reduced_dim(p)] += 1e-3;
  EXPECT_THROW(unpack_full(p, x), DomainError);
}

TEST(Renormalization, ObserverCorrectsDrift) {
  const auto p = generic(1);
  int count = 0;
  auto obs = renormalization_observer(p, false, 1, 1e-10, &count);
  State x(6);
  x << 0, 0, 0, 0, 0, 1.0 + 1e-8;
  obs(1, 0.0, x);
  EXPECT_NEAR(x.tail<3>().norm(), 1.0, 1e-15);
  EXPECT_EQ(count, 1);
}

TEST(CollisionMargin, DetectsOverlap) {
  const auto p = generic(2);
  const std::vector<UnitVec3> close = {UnitVec3(0, 0, 1), UnitVec3(Vec3(0.01, 0, 1).normalized())};
  EXPECT_LT(collision_margin(p, close), 0.0);
  const std::vector<UnitVec3> apart = {UnitVec3(0, 0, 1), UnitVec3(0, 0, -1)};
  EXPECT_GT(collision_margin(p, apart), 0.0);
}

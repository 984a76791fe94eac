// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.

#include "bearing/integrators.hpp"
#include "bearing/oracle.hpp"
#include "bearing/planar.hpp"
#include "bearing/spherical.hpp"
#include "bearing/verification.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace bearing;
namespace sph = bearing::spherical;
namespace pl = bearing::planar;
namespace ver = bearing::verification;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* name, double value, double tol) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s=%.3e (tol %.2g)", name, value, tol);
  return buf;
}

void add(Outcome& o, const char* name, double value, double tol, bool below = true) {
  const bool ok = below ? value <= tol : value > tol;
  o.pass = o.pass && ok;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += fmt(name, value, tol);
  if (!below) o.detail += " must exceed";
}

sph::SphericalParams spherical_params(std::size_t n, ver::Rng& rng) {
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  sph::SphericalParams p;
  p.R = 2.0;
  p.r = 0.5;
  p.A = 2.0;
  p.B = 3.0;
  p.C = 4.0;
  for (std::size_t i = 0; i < n; ++i) p.balls.push_back({0.05 + 0.02 * i, 1.0 + 0.3 * i, c(rng)});
  return p;
}

pl::PlanarParams planar_params(std::size_t n) {
  pl::PlanarParams p;
  p.r = 0.5;
  p.m = 2.0;
  p.I = 1.5;
  for (std::size_t i = 0; i < n; ++i) p.balls.push_back({1.0 + 0.25 * i, 0.1 + 0.05 * i});
  return p;
}

Outcome criterion1() {
  Outcome o;
  double worst = 0.0;
  ver::Rng rng(101);
  for (std::size_t n = 1; n <= 3; ++n) {
    for (int k = 0; k < 20; ++k) {
      const auto p = spherical_params(n, rng);
      const auto s0 = ver::random_spherical_state(p, rng);
      ver::SphericalRunOptions opt;
      opt.h = 1e-3;
      opt.t_end = 10.0;
      opt.sample_every = 10;
      const auto run = ver::spherical_run(p, s0, opt);
      for (const auto& d : run.report.integrals)
        if (d.name == "F1" || d.name == "F2" || d.name == "T" || d.name.rfind("gram_", 0) == 0)
          worst = std::max(worst, d.relative_drift);
    }
  }
  add(o, "max relative drift", worst, 1e-8);
  return o;
}

Outcome criterion2() {
  Outcome o;
  ver::Rng rng(202);
  double div = 0.0;
  for (std::size_t n = 1; n <= 3; ++n) {
    for (int k = 0; k < 200; ++k) {
      const auto p = spherical_params(n, rng);
      const auto s = ver::random_spherical_state(p, rng);
      const auto w = ver::weighted_divergence(sph::ExtendedField(p), sph::ExtendedDensity(p), sph::pack(s));
      div = std::max(div, w.scaled());
    }
  }
  add(o, "weighted divergence", div, 1e-6);

  // Heavy balls make det of the modified inertia vary along the flow.
  sph::SphericalParams p;
  p.R = 1.0;
  p.r = 0.5;
  p.A = 1.0;
  p.B = 1.5;
  p.C = 2.0;
  p.balls = {{0.4, 3.0, 0.7}, {0.3, 2.5, -0.4}, {0.5, 2.0, 0.2}};
  sph::SphericalState s0;
  s0.omega = Vec3(1.5, -1.2, 1.0);
  s0.gamma = {UnitVec3(1.0, 0.0, 0.0), UnitVec3(0.0, 1.0, 0.0), UnitVec3(0.0, 0.0, 1.0)};
  const IntegrateOptions topt{1e-3, 5.0, 100};
  const auto good = ver::transport_check(sph::ExtendedField(p), sph::ExtendedDensity(p), sph::pack(s0), topt);
  const auto bad =
      ver::transport_check(sph::ExtendedField(p), [](const State&) { return 1.0; }, sph::pack(s0), topt);
  add(o, "transport", good.max_deviation, 1e-6);
  add(o, "unit-density control", bad.max_deviation, 1e-3, false);
  return o;
}

Outcome criterion3() {
  Outcome o;
  ver::Rng rng(303);
  double kin = 0.0, ortho = 0.0;
  for (std::size_t n = 1; n <= 3; ++n) {
    for (int k = 0; k < 3; ++k) {
      const auto p = spherical_params(n, rng);
      ver::SphericalRunOptions opt;
      opt.h = 1e-3;
      opt.t_end = 10.0;
      opt.reconstruct = true;
      const auto run = ver::spherical_run(p, ver::random_spherical_state(p, rng), opt);
      kin = std::max(kin, *run.report.kinematics_residual);
      ortho = std::max(ortho, *run.report.orthogonality_drift);
    }
  }
  add(o, "kinematics residual", kin, 1e-8);
  add(o, "orthogonality drift", ortho, 1e-9);
  return o;
}

Outcome criterion4() {
  Outcome o;
  ver::Rng rng(404);
  double sph_res = 0.0, pl_res = 0.0;
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto p = spherical_params(n, rng);
    ver::SphericalRunOptions opt;
    opt.h = 1e-3;
    opt.t_end = 2.0;
    opt.reconstruct = true;
    sph_res = std::max(sph_res, ver::spherical_run(p, ver::random_spherical_state(p, rng), opt)
                                    .report.max_constraint_residual);
    const auto q = planar_params(n + 1);
    ver::RunOptions popt;
    popt.h = 1e-3;
    popt.t_end = 2.0;
    pl_res = std::max(pl_res, ver::planar_run(q, ver::random_planar_state(q, rng), popt)
                                  .report.max_constraint_residual);
  }
  double oracle_res = 0.0;
  for (std::size_t n = 2; n <= 4; ++n) {
    const auto q = planar_params(n);
    ver::RunOptions popt;
    popt.h = 1e-3;
    popt.t_end = 2.0;
    oracle_res = std::max(oracle_res, ver::oracle_compare_run(q, ver::random_planar_state(q, rng), popt)
                                          .report.max_constraint_residual);
  }
  add(o, "spherical rolling residual", sph_res, 1e-13);
  add(o, "planar rolling residual", pl_res, 1e-13);
  add(o, "oracle trajectory rolling residual", oracle_res, 1e-13);
  return o;
}

Outcome criterion5() {
  Outcome o;
  ver::Rng rng(505);
  double agree = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto p = planar_params(2 + k % 3);
    const auto f = ver::random_planar_state(p, rng);
    const auto a = oracle::reduced_derivative(p, f);
    const auto b = pl::reduced_rhs(p, pl::reduce(p, f));
    agree = std::max(agree, std::max((a.v_dot - b.v_dot).cwiseAbs().maxCoeff(),
                                     (a.n_dot - b.n_dot).cwiseAbs().maxCoeff()));
  }
  add(o, "derivative agreement", agree, 1e-9);
  double traj = 0.0;
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto p = planar_params(n + 1);
    ver::RunOptions opt;
    opt.h = 1e-3;
    opt.t_end = 2.0;
    traj = std::max(traj, *ver::oracle_compare_run(p, ver::random_planar_state(p, rng), opt).report.reference_deviation);
  }
  add(o, "trajectory divergence", traj, 1e-7);
  return o;
}

Outcome criterion6() {
  Outcome o;
  ver::Rng rng(606);
  double drift = 0.0, tri = 0.0;
  for (std::size_t n = 1; n <= 3; ++n) {
    for (int k = 0; k < 5; ++k) {
      const auto p = planar_params(n + 1);
      ver::RunOptions opt;
      opt.h = 1e-3;
      opt.t_end = 10.0;
      const auto rep = ver::planar_run(p, ver::random_planar_state(p, rng), opt).report;
      for (const char* name : {"f1", "f2", "f3", "f4"}) drift = std::max(drift, rep.find(name)->relative_drift);
      tri = std::max(tri, *rep.triangle_drift);
    }
  }
  add(o, "f1..f4 relative drift", drift, 1e-8);
  add(o, "triangle drift", tri, 1e-8);

  double div = 0.0, closed = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto p = planar_params(2 + k % 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const pl::LevelSetParams d{u(rng), u(rng), 0.5 + std::abs(u(rng))};
    const Vec3 y(u(rng), u(rng), u(rng));
    const pl::LevelSetField field(p, d);
    const auto w = ver::weighted_divergence(field, pl::LevelSetDensity(p, d), State(y));
    div = std::max(div, w.scaled());
    closed = std::max(closed, std::abs(w.divergence - pl::level_set_divergence(p, d, y)) /
                                  std::max(1.0, std::abs(w.divergence)));
  }
  add(o, "level-set weighted divergence", div, 1e-6);
  add(o, "closed-form divergence", closed, 1e-6);
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto p = planar_params(3);
  ver::LevelSetRunOptions opt;
  opt.h = 1e-3;
  opt.t_end = 10.0;
  const auto rep = ver::level_set_run(p, {0.0, 0.0, 0.8}, Vec3(0.7, 0.4, -0.3), opt).report;
  add(o, "closed-form deviation", *rep.reference_deviation, 1e-8);
  add(o, "v_phi drift", rep.find("v_phi")->max_abs_drift, 1e-12);
  return o;
}

Outcome criterion8() {
  Outcome o;
  sph::SphericalParams far;
  far.R = 1e9;
  far.r = 1.0;
  far.balls = {{0.1, 1.0, 0.0}};
  add(o, "|epsilon - 1/2| at R=1e9", std::abs(sph::derived_params(far).epsilon - 0.5), 1e-8);

  ver::Rng rng(808);
  double lr = 0.0;
  for (std::size_t n = 1; n <= 3; ++n) {
    auto p = spherical_params(n, rng);
    p.epsilon_override = 1.0;
    for (auto& b : p.balls) b.c = 0.0;
    for (int k = 0; k < 50; ++k) {
      const auto s = ver::random_spherical_state(p, rng);
      const auto rhs = sph::reduced_rhs(p, s);
      const double delta = sph::derived_params(p).delta;
      Mat3 op_dot = Mat3::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        const double w = delta * delta * (p.balls[i].inertia + p.balls[i].mass * p.r * p.r);
        const Vec3& g = s.gamma[i].vec();
        op_dot += w * (rhs.gamma_dot[i] * g.transpose() + g * rhs.gamma_dot[i].transpose());
      }
      const Mat3 op = sph::gamma_operator(p, s.gamma).matrix();
      lr = std::max(lr, (op_dot - commutator(op, hat(s.omega).matrix())).cwiseAbs().maxCoeff());
    }
  }
  add(o, "L+R evolution residual", lr, 1e-10);
  return o;
}

Outcome criterion9() {
  Outcome o;
  const auto expo = [](const State& x) { return State(x); };
  State x0(1);
  x0 << 1.0;
  add(o, "exponential order", ver::convergence_order(expo, x0, 0.1, 1.0), 3.9, false);

  const sph::ExtendedField top(sph::SphericalParams::free_body(1.0, 2.0, 3.0));
  State w0(3);
  w0 << 0.5, 1.0, -0.7;
  add(o, "Euler-top order", ver::convergence_order(top, w0, 0.05, 5.0), 3.9, false);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"spherical first integrals", criterion1},
      {"spherical invariant measure", criterion2},
      {"space-frame reconstruction", criterion3},
      {"rolling constraint identities", criterion4},
      {"planar reduced vs oracle", criterion5},
      {"planar integrals and measure", criterion6},
      {"zero level-set closed form", criterion7},
      {"limit consistency", criterion8},
      {"integrator order", criterion9},
  };
  int failures = 0;
  int index = 1;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d %s: %s | %s\n", index++, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    if (!o.pass) ++failures;
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}

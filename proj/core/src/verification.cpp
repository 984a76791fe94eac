#include "bearing/verification.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace bearing::verification {

namespace {

std::int64_t step_count(double h, double t_end) {
  const auto [full, rest] = detail::step_plan(h, t_end);
  return full + (rest > 0.0 ? 1 : 0);
}

void fill_metadata(DriftReport& rep, const RunOptions& opt, std::size_t n) {
  rep.h = opt.h;
  rep.t_end = opt.t_end;
  rep.n = n;
  rep.seed = opt.seed;
  rep.steps = step_count(opt.h, opt.t_end);
}

IntegrateOptions integrate_options(const RunOptions& opt) {
  return {opt.h, opt.t_end, opt.sample_every};
}

void require_finished(const FlowResult& flow, const char* who) {
  if (flow.aborted) throw IntegrationError(std::string(who) + ": " + flow.abort_reason);
}

std::vector<double> spins_of(const planar::PlanarFullState& f) {
  std::vector<double> out;
  for (const auto& w : f.ball_omegas) out.push_back(w.z());
  return out;
}

}  // namespace

UnitVec3 random_unit(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    const Vec3 v(g(rng), g(rng), g(rng));
    if (v.norm() > 1e-6) return UnitVec3(v.normalized());
  }
}

spherical::SphericalState random_spherical_state(const spherical::SphericalParams& p, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  spherical::SphericalState s;
  s.omega = Vec3(u(rng), u(rng), u(rng));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    s.gamma.clear();
    for (std::size_t i = 0; i < p.n(); ++i) s.gamma.push_back(random_unit(rng));
    if (spherical::collision_margin(p, s.gamma) > 0.0) return s;
  }
  throw DomainError("random_spherical_state: could not place balls without overlap");
}

planar::PlanarFullState random_planar_state(const planar::PlanarParams& p, Rng& rng,
                                            std::span<const double> spins) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> area(p.r * p.r, 16.0 * p.r * p.r);
  const double x = u(rng), y = u(rng), phi = angle(rng);
  const Vec3 v(u(rng), u(rng), u(rng));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<planar::Vec2> centers;
    for (std::size_t i = 0; i < p.n(); ++i) {
      const double rho = std::sqrt(area(rng));
      const double a = angle(rng);
      centers.emplace_back(x + rho * std::cos(a), y + rho * std::sin(a));
    }
    if (planar::one_side_margin(p, centers) < 0.0) continue;
    auto f = planar::consistent_full_state(p, x, y, phi, v, centers, spins);
    if (planar::q_margin(p, planar::reduce(p, f)) <= 0.0) continue;
    return f;
  }
  throw DomainError("random_planar_state: could not place balls");
}

const IntegralDrift* DriftReport::find(const std::string& name) const {
  for (const auto& d : integrals)
    if (d.name == name) return &d;
  return nullptr;
}

double DriftReport::max_relative_drift() const {
  double worst = 0.0;
  for (const auto& d : integrals) worst = std::max(worst, d.relative_drift);
  return worst;
}

void DriftTracker::record(const std::string& name, double value) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    index_.emplace(name, items_.size());
    IntegralDrift d;
    d.name = name;
    d.initial = value;
    items_.push_back(d);
    return;
  }
  IntegralDrift& d = items_[it->second];
  d.final_drift = value - d.initial;
  d.max_abs_drift = std::max(d.max_abs_drift, std::abs(d.final_drift));
}

std::vector<IntegralDrift> DriftTracker::finish() const {
  std::vector<IntegralDrift> out = items_;
  for (auto& d : out) d.relative_drift = d.max_abs_drift / std::max(1.0, std::abs(d.initial));
  return out;
}

double lr_evolution_residual(const spherical::SphericalParams& p, const spherical::SphericalState& s) {
  const auto rhs = spherical::reduced_rhs(p, s);
  const double delta = spherical::derived_params(p).delta;
  Mat3 op_dot = Mat3::Zero();
  for (std::size_t i = 0; i < p.n(); ++i) {
    const double w = delta * delta * (p.balls[i].inertia + p.balls[i].mass * p.r * p.r);
    const Vec3& g = s.gamma[i].vec();
    op_dot += w * (rhs.gamma_dot[i] * g.transpose() + g * rhs.gamma_dot[i].transpose());
  }
  const Mat3 op = spherical::gamma_operator(p, s.gamma).matrix();
  return (op_dot - commutator(op, hat(s.omega).matrix())).cwiseAbs().maxCoeff();
}

double derivative_agreement(const planar::PlanarParams& p, const planar::PlanarFullState& f) {
  const auto a = oracle::reduced_derivative(p, f);
  const auto b = planar::reduced_rhs(p, planar::reduce(p, f));
  return std::max((a.v_dot - b.v_dot).cwiseAbs().maxCoeff(), (a.n_dot - b.n_dot).cwiseAbs().maxCoeff());
}

// ---------------------------------------------------------------------------

Run spherical_run(const spherical::SphericalParams& p, const spherical::SphericalState& s0,
                  const SphericalRunOptions& opt) {
  p.validate();
  if (s0.gamma.size() != p.n()) throw DomainError("spherical_run: ball count mismatch");

  Run run;
  DriftReport& rep = run.report;
  rep.system = "spherical";
  fill_metadata(rep, opt, p.n());

  int corrections = 0;
  const auto observer = spherical::renormalization_observer(p, opt.reconstruct, opt.renormalize_every,
                                                            opt.renormalize_threshold, &corrections);
  if (opt.reconstruct) {
    spherical::FullSphericalState f0;
    f0.reduced = s0;
    f0.g_balls.assign(p.n(), RotMat3());
    run.flow = integrate(spherical::FullField(p), spherical::pack(f0), integrate_options(opt), observer);
  } else {
    run.flow = integrate(spherical::ExtendedField(p), spherical::pack(s0), integrate_options(opt), observer);
  }
  require_finished(run.flow, "spherical_run");

  DriftTracker tracker;
  double margin = std::numeric_limits<double>::infinity();
  double kin = 0.0, ortho = 0.0;
  for (const State& x : run.flow.states) {
    const auto s = spherical::unpack_reduced(p, x);
    const auto in = spherical::integrals(p, s);
    tracker.record("F1", in.F1);
    tracker.record("F2", in.F2);
    tracker.record("T", in.T);
    for (std::size_t i = 0; i < p.n(); ++i) {
      const Vec3 gi = x.segment<3>(static_cast<Eigen::Index>(3 + 3 * i));
      for (std::size_t j = i; j < p.n(); ++j) {
        const Vec3 gj = x.segment<3>(static_cast<Eigen::Index>(3 + 3 * j));
        tracker.record("gram_" + std::to_string(i + 1) + "_" + std::to_string(j + 1), gi.dot(gj));
      }
      const Vec3 wi = spherical::omega_ball(p, s.omega, s.gamma[i], p.balls[i].c);
      tracker.record("c_" + std::to_string(i + 1), wi.dot(s.gamma[i].vec()));
    }
    if (p.n() > 1) margin = std::min(margin, spherical::collision_margin(p, s.gamma));
    if (opt.reconstruct) {
      const auto f = spherical::unpack_full(p, x, 1e-3);
      rep.max_constraint_residual = std::max(rep.max_constraint_residual, spherical::constraint_residuals(p, f).max());
      kin = std::max(kin, spherical::space_frame_kinematics_residual(p, f));
      ortho = std::max(ortho, orthogonality_defect(f.g.matrix()));
      for (const auto& gb : f.g_balls) ortho = std::max(ortho, orthogonality_defect(gb.matrix()));
    } else {
      std::vector<Vec3> ws;
      for (std::size_t i = 0; i < p.n(); ++i)
        ws.push_back(spherical::omega_ball(p, s.omega, s.gamma[i], p.balls[i].c));
      rep.max_constraint_residual =
          std::max(rep.max_constraint_residual, spherical::constraint_residuals(p, s, ws).max());
    }
  }
  rep.integrals = tracker.finish();
  rep.min_admissibility_margin = margin;
  rep.admissible = margin > 0.0;
  if (opt.reconstruct) {
    rep.kinematics_residual = kin;
    rep.orthogonality_drift = ortho;
  }
  rep.diagnostics["renormalizations"] = corrections;

  if (opt.transport_t_end) {
    const IntegrateOptions topt{opt.h, *opt.transport_t_end, opt.sample_every};
    const spherical::ExtendedField field(p);
    TransportResult tr;
    if (opt.transport_unit_density) {
      tr = transport_check(field, [](const State&) { return 1.0; }, spherical::pack(s0), topt);
    } else {
      tr = transport_check(field, spherical::ExtendedDensity(p), spherical::pack(s0), topt);
    }
    rep.measure_transport_deviation = tr.max_deviation;
    rep.diagnostics["density_change"] = tr.max_density_change;
  }
  return run;
}

Run planar_run(const planar::PlanarParams& p, const planar::PlanarFullState& f0, const RunOptions& opt,
               std::optional<double> transport_t_end) {
  p.validate();
  const auto spins = spins_of(f0);
  planar::require_in_q(p, planar::reduce(p, f0));

  Run run;
  DriftReport& rep = run.report;
  rep.system = "planar";
  fill_metadata(rep, opt, p.n());

  run.flow = integrate(planar::ConfigurationField(p), planar::pack_configuration(f0), integrate_options(opt));
  require_finished(run.flow, "planar_run");

  DriftTracker tracker;
  std::vector<planar::PlanarFullState> traj;
  double margin = std::numeric_limits<double>::infinity();
  for (const State& x : run.flow.states) {
    const auto f = planar::unpack_configuration(p, x, spins);
    const auto s = planar::reduce(p, f);
    const auto in = planar::integrals(p, s);
    tracker.record("f1", in.f1);
    tracker.record("f2", in.f2);
    tracker.record("f3", in.f3);
    tracker.record("f4", in.f4);
    tracker.record("energy", planar::kinetic_energy(p, f));
    for (std::size_t i = 0; i < p.n(); ++i) tracker.record("omega3_" + std::to_string(i + 1), f.ball_omegas[i].z());
    margin = std::min(margin, planar::q_margin(p, s));
    if (p.n() > 1) margin = std::min(margin, planar::one_side_margin(p, f.centers) + 0.0);
    rep.max_constraint_residual =
        std::max(rep.max_constraint_residual, oracle::constraint_violation(p, f).cwiseAbs().maxCoeff());
    traj.push_back(f);
  }
  rep.integrals = tracker.finish();
  rep.triangle_drift = planar::triangle_residuals(traj);
  rep.min_admissibility_margin = margin;
  rep.admissible = margin >= 0.0;

  if (transport_t_end) {
    const IntegrateOptions topt{opt.h, *transport_t_end, opt.sample_every};
    const auto tr = transport_check(planar::ReducedField(p), planar::ReducedDensity(p),
                                    planar::pack(planar::reduce(p, f0)), topt);
    rep.measure_transport_deviation = tr.max_deviation;
    rep.diagnostics["density_change"] = tr.max_density_change;
  }
  return run;
}

Run level_set_run(const planar::PlanarParams& p, const planar::LevelSetParams& d, const Vec3& y0,
                  const LevelSetRunOptions& opt) {
  p.validate();
  if (!(d.d3 > 0.0)) throw DomainError("level_set_run: d3 must be positive");

  Run run;
  DriftReport& rep = run.report;
  rep.system = "planar-levelset";
  fill_metadata(rep, opt, p.n());

  const planar::LevelSetField field(p, d);
  const planar::LevelSetDensity density(p, d);
  run.flow = integrate(field, State(y0), integrate_options(opt));
  require_finished(run.flow, "level_set_run");

  const bool zero_d = d.d1 == 0.0 && d.d2 == 0.0;
  DriftTracker tracker;
  double ref = 0.0, div_res = 0.0, div_closed = 0.0, min_det = std::numeric_limits<double>::infinity();
  const std::size_t stride =
      std::max<std::size_t>(1, run.flow.states.size() / static_cast<std::size_t>(std::max(1, opt.divergence_samples)));
  for (std::size_t k = 0; k < run.flow.states.size(); ++k) {
    const State& y = run.flow.states[k];
    const auto s = planar::embed_level_set(p, d, y);
    const auto in = planar::integrals(p, s);
    tracker.record("f4", in.f4);
    if (zero_d) {
      tracker.record("v_phi", y[0]);
      tracker.record("N_norm2", y[1] * y[1] + y[2] * y[2]);
      const Vec3 exact = planar::closed_form_zero_d(p, d.d3, y0, run.flow.times[k]);
      ref = std::max(ref, (Vec3(y) - exact).cwiseAbs().maxCoeff());
    }
    min_det = std::min(min_det, planar::level_set_det(p, d, y));
    if (k % stride == 0) {
      const auto w = weighted_divergence(field, density, y);
      div_res = std::max(div_res, w.scaled());
      div_closed = std::max(div_closed, std::abs(w.divergence - planar::level_set_divergence(p, d, y)));
    }
  }
  rep.integrals = tracker.finish();
  if (zero_d) rep.reference_deviation = ref;
  rep.min_admissibility_margin = min_det;
  rep.admissible = min_det > 0.0;
  rep.diagnostics["weighted_divergence"] = div_res;
  rep.diagnostics["divergence_closed_form"] = div_closed;
  return run;
}

Run oracle_compare_run(const planar::PlanarParams& p, const planar::PlanarFullState& f0,
                       const RunOptions& opt) {
  p.validate();
  planar::require_in_q(p, planar::reduce(p, f0));
  const auto spins = spins_of(f0);

  Run run;
  DriftReport& rep = run.report;
  rep.system = "planar-oracle-compare";
  fill_metadata(rep, opt, p.n());

  run.flow = integrate(oracle::OracleField(p), oracle::pack(f0), integrate_options(opt));
  require_finished(run.flow, "oracle_compare_run");
  const FlowResult reduced =
      integrate(planar::ConfigurationField(p), planar::pack_configuration(f0), integrate_options(opt));
  require_finished(reduced, "oracle_compare_run");
  if (reduced.states.size() != run.flow.states.size())
    throw IntegrationError("oracle_compare_run: sample grids differ");

  DriftTracker tracker;
  std::vector<planar::PlanarFullState> traj;
  double dev = 0.0, ratio = 0.0, force = 0.0, printed = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < run.flow.states.size(); ++k) {
    const auto f = oracle::unpack(p, run.flow.states[k]);
    const auto s = planar::reduce(p, f);
    const auto g = planar::reduce(p, planar::unpack_configuration(p, reduced.states[k], spins));
    dev = std::max(dev, std::max((s.v - g.v).cwiseAbs().maxCoeff(), (s.n - g.n).cwiseAbs().maxCoeff()));

    const auto in = planar::integrals(p, s);
    tracker.record("f1", in.f1);
    tracker.record("f2", in.f2);
    tracker.record("f3", in.f3);
    tracker.record("f4", in.f4);
    tracker.record("energy", planar::kinetic_energy(p, f));

    rep.max_constraint_residual =
        std::max(rep.max_constraint_residual, oracle::constraint_violation(p, f).cwiseAbs().maxCoeff());
    const auto sol = oracle::solve_multipliers(p, f);
    ratio = std::max(ratio, oracle::lower_upper_ratio_residual(p, sol));
    force = std::max(force, oracle::force_system_residual(p, f, sol));
    printed = std::max(printed, oracle::printed_force_system_residual(p, f, sol));
    margin = std::min(margin, planar::q_margin(p, s));
    traj.push_back(f);
  }

  rep.diagnostics["derivative_agreement"] = derivative_agreement(p, f0);
  rep.diagnostics["multiplier_ratio"] = ratio;
  rep.diagnostics["force_system"] = force;
  rep.diagnostics["printed_force_system"] = printed;
  rep.integrals = tracker.finish();
  rep.reference_deviation = dev;
  rep.triangle_drift = planar::triangle_residuals(traj);
  rep.min_admissibility_margin = margin;
  rep.admissible = margin > 0.0;
  return run;
}

}  // namespace bearing::verification

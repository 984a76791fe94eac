#include "runner.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace bearing::cli {

namespace sph = bearing::spherical;
namespace pl = bearing::planar;
namespace ver = bearing::verification;

namespace {

Vec3 vec3(const json& j) { return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()}; }

sph::SphericalParams spherical_params(const json& j) {
  sph::SphericalParams p;
  p.R = j["R"].get<double>();
  p.r = j["r"].get<double>();
  p.A = j["A"].get<double>();
  p.B = j["B"].get<double>();
  p.C = j["C"].get<double>();
  if (j.contains("epsilon_override")) p.epsilon_override = j["epsilon_override"].get<double>();
  for (const auto& b : j["balls"]) p.balls.push_back({b["inertia"].get<double>(), b["mass"].get<double>(), b.value("c", 0.0)});
  p.validate();
  return p;
}

pl::PlanarParams planar_params(const json& j) {
  pl::PlanarParams p;
  p.r = j["r"].get<double>();
  p.m = j["m"].get<double>();
  p.I = j["I"].get<double>();
  for (const auto& b : j["balls"]) p.balls.push_back({b["mass"].get<double>(), b["inertia"].get<double>()});
  p.validate();
  return p;
}

sph::SphericalState spherical_initial(const sph::SphericalParams& p, const json& s, ver::Rng& rng) {
  if (s.value("random", false)) return ver::random_spherical_state(p, rng);
  sph::SphericalState out;
  out.omega = vec3(s["omega"]);
  for (const auto& g : s["gamma"]) {
    const Vec3 v = vec3(g);
    if (std::abs(v.norm() - 1.0) > tolerance::kUnitReject)
      throw DomainError("initial_state.gamma: direction is not a unit vector");
    out.gamma.emplace_back(v.normalized());
  }
  if (p.n() > 1 && sph::collision_margin(p, out.gamma) <= 0.0)
    throw DomainError("initial_state.gamma: balls overlap");
  return out;
}

pl::PlanarFullState planar_initial(const pl::PlanarParams& p, const json& s, ver::Rng& rng) {
  std::vector<double> spins;
  if (s.contains("spins")) spins = s["spins"].get<std::vector<double>>();
  if (s.value("random", false)) return ver::random_planar_state(p, rng, spins);
  std::vector<pl::Vec2> centers;
  for (const auto& c : s["centers"]) centers.emplace_back(c[0].get<double>(), c[1].get<double>());
  if (p.n() > 1 && pl::one_side_margin(p, centers) < 0.0) throw DomainError("initial_state.centers: balls overlap");
  auto f = pl::consistent_full_state(p, s.value("x", 0.0), s.value("y", 0.0), s.value("phi", 0.0), vec3(s["v"]),
                                     centers, spins);
  pl::require_in_q(p, pl::reduce(p, f));
  return f;
}

class Checks {
public:
  Checks(const ScenarioConfig& c, std::vector<CheckResult>& out) : c_(c), out_(out) {}

  bool enabled(const std::string& name) const {
    const auto it = c_.checks.find(name);
    return it != c_.checks.end() && it->second.enabled;
  }
  const CheckConfig& get(const std::string& name) const { return c_.checks.at(name); }
  double option(const std::string& name, const std::string& key, double fallback) const {
    return get(name).options.value(key, fallback);
  }
  int samples(const std::string& name, int fallback) const { return get(name).options.value("samples", fallback); }

  void at_most(const std::string& name, double value) { push(name, value, false); }
  void at_least(const std::string& name, double value) { push(name, value, true); }

private:
  void push(const std::string& name, double value, bool at_least) {
    CheckResult r;
    r.name = name;
    r.value = value;
    r.tolerance = get(name).tolerance;
    r.at_least = at_least;
    r.passed = std::isfinite(value) ? (at_least ? value >= r.tolerance : value <= r.tolerance)
                                    : (at_least && value > 0.0);
    out_.push_back(r);
  }

  const ScenarioConfig& c_;
  std::vector<CheckResult>& out_;
};

void common_checks(Checks& checks, const ver::DriftReport& rep) {
  if (checks.enabled("integrals")) checks.at_most("integrals", rep.max_relative_drift());
  if (checks.enabled("constraints")) checks.at_most("constraints", rep.max_constraint_residual);
  if (checks.enabled("triangle")) checks.at_most("triangle", rep.triangle_drift.value_or(0.0));
  if (checks.enabled("admissibility"))
    checks.at_least("admissibility", rep.admissible ? rep.min_admissibility_margin : -1.0);
}

std::vector<std::string> planar_header(std::size_t n, bool pose) {
  std::vector<std::string> h = {"t", "v_x", "v_y", "v_phi", "N1", "N2", "M", "f1", "f2", "f3", "f4", "mu"};
  if (pose) {
    for (const char* k : {"x", "y", "phi"}) h.emplace_back(k);
    for (std::size_t i = 1; i <= n; ++i) {
      h.push_back("x_" + std::to_string(i));
      h.push_back("y_" + std::to_string(i));
    }
  }
  return h;
}

std::vector<double> planar_row(const pl::PlanarParams& p, double t, const pl::PlanarReducedState& s, double mu,
                               const pl::PlanarFullState* pose) {
  const auto in = pl::integrals(p, s);
  std::vector<double> row = {t, s.v[0], s.v[1], s.v[2], s.N1(), s.N2(), s.M(), in.f1, in.f2, in.f3, in.f4, mu};
  if (pose) {
    row.insert(row.end(), {pose->x, pose->y, pose->phi});
    for (const auto& c : pose->centers) row.insert(row.end(), {c[0], c[1]});
  }
  return row;
}

void run_spherical(const ScenarioConfig& c, ScenarioResult& res) {
  const auto p = spherical_params(c.params);
  ver::Rng rng(c.seed);
  const auto s0 = spherical_initial(p, c.initial_state, rng);
  Checks checks(c, res.checks);
  const bool full = c.initial_state.value("full", false);
  if ((checks.enabled("kinematics") || checks.enabled("orthogonality")) && !full)
    throw ConfigError("checks: kinematics and orthogonality need initial_state.full = true");

  ver::SphericalRunOptions opt;
  opt.h = c.integration.h;
  opt.t_end = c.integration.t_end;
  opt.sample_every = c.integration.sample_every;
  opt.seed = c.seed;
  opt.reconstruct = full;
  if (checks.enabled("measure_transport")) {
    opt.transport_t_end = checks.option("measure_transport", "t_end", c.integration.t_end);
    opt.transport_unit_density = checks.get("measure_transport").options.value("density", "sqrt_det") == "unit";
  }
  const auto run = ver::spherical_run(p, s0, opt);
  res.report = run.report;
  const auto& rep = res.report;

  common_checks(checks, rep);
  if (checks.enabled("kinematics")) checks.at_most("kinematics", *rep.kinematics_residual);
  if (checks.enabled("orthogonality")) checks.at_most("orthogonality", *rep.orthogonality_drift);
  if (checks.enabled("measure_transport")) checks.at_most("measure_transport", *rep.measure_transport_deviation);
  if (checks.enabled("divergence")) {
    ver::Rng drng(c.seed + 1);
    double worst = 0.0;
    const sph::ExtendedField field(p);
    const sph::ExtendedDensity density(p);
    for (int k = 0; k < checks.samples("divergence", 200); ++k)
      worst = std::max(worst, ver::weighted_divergence(field, density, sph::pack(ver::random_spherical_state(p, drng))).scaled());
    res.report.diagnostics["weighted_divergence"] = worst;
    checks.at_most("divergence", worst);
  }
  if (checks.enabled("epsilon_limit")) {
    auto far = p;
    far.R = checks.option("epsilon_limit", "R_limit", 1e9);
    far.epsilon_override.reset();
    const double dev = std::abs(sph::derived_params(far).epsilon - 0.5);
    res.report.diagnostics["epsilon_limit"] = dev;
    checks.at_most("epsilon_limit", dev);
  }
  if (checks.enabled("lr_evolution")) {
    auto lr = p;
    lr.epsilon_override = 1.0;
    for (auto& b : lr.balls) b.c = 0.0;
    ver::Rng lrng(c.seed + 2);
    double worst = 0.0;
    for (int k = 0; k < checks.samples("lr_evolution", 50); ++k)
      worst = std::max(worst, ver::lr_evolution_residual(lr, ver::random_spherical_state(lr, lrng)));
    res.report.diagnostics["lr_evolution"] = worst;
    checks.at_most("lr_evolution", worst);
  }
  if (checks.enabled("convergence_order")) {
    const double order = ver::convergence_order(sph::ExtendedField(p), sph::pack(s0),
                                                checks.option("convergence_order", "h", 0.05),
                                                checks.option("convergence_order", "t_end", 5.0));
    res.report.diagnostics["convergence_order"] = order;
    checks.at_least("convergence_order", order);
  }

  res.csv_header = {"t", "omega_x", "omega_y", "omega_z"};
  for (std::size_t i = 1; i <= p.n(); ++i)
    for (const char* a : {"_x", "_y", "_z"}) res.csv_header.push_back("gamma" + std::to_string(i) + a);
  for (const char* k : {"F1", "F2", "T", "mu"}) res.csv_header.emplace_back(k);
  if (full) {
    for (std::size_t b = 0; b <= p.n(); ++b)
      for (int r = 1; r <= 3; ++r)
        for (int col = 1; col <= 3; ++col)
          res.csv_header.push_back((b == 0 ? std::string("g") : "g" + std::to_string(b)) + "_" + std::to_string(r) +
                                   std::to_string(col));
  }
  for (std::size_t k = 0; k < run.flow.states.size(); ++k) {
    const State& x = run.flow.states[k];
    const auto s = sph::unpack_reduced(p, x);
    const auto in = sph::integrals(p, s);
    std::vector<double> row = {run.flow.times[k]};
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(sph::reduced_dim(p)); ++i) row.push_back(x[i]);
    row.insert(row.end(), {in.F1, in.F2, in.T, sph::measure_density(p, s.gamma)});
    if (full) {
      // Stored column-major; written row by row.
      for (std::size_t b = 0; b <= p.n(); ++b) {
        const Eigen::Map<const Mat3> g(x.data() + sph::reduced_dim(p) + 9 * b);
        for (int r = 0; r < 3; ++r)
          for (int col = 0; col < 3; ++col) row.push_back(g(r, col));
      }
    }
    res.csv_rows.push_back(std::move(row));
  }
}

void run_planar(const ScenarioConfig& c, ScenarioResult& res) {
  const auto p = planar_params(c.params);
  ver::Rng rng(c.seed);
  const auto f0 = planar_initial(p, c.initial_state, rng);
  Checks checks(c, res.checks);

  ver::RunOptions opt;
  opt.h = c.integration.h;
  opt.t_end = c.integration.t_end;
  opt.sample_every = c.integration.sample_every;
  opt.seed = c.seed;
  const auto run = ver::planar_run(p, f0, opt);
  res.report = run.report;
  common_checks(checks, res.report);

  const State q0 = pl::pack(pl::reduce(p, f0));
  if (checks.enabled("measure_transport")) {
    const IntegrateOptions topt{opt.h, checks.option("measure_transport", "t_end", opt.t_end), opt.sample_every};
    const bool unit = checks.get("measure_transport").options.value("density", "sqrt_det") == "unit";
    const auto tr = unit ? ver::transport_check(pl::ReducedField(p), [](const State&) { return 1.0; }, q0, topt)
                         : ver::transport_check(pl::ReducedField(p), pl::ReducedDensity(p), q0, topt);
    res.report.measure_transport_deviation = tr.max_deviation;
    checks.at_most("measure_transport", tr.max_deviation);
  }
  if (checks.enabled("divergence")) {
    ver::Rng drng(c.seed + 1);
    double worst = 0.0;
    const pl::ReducedField field(p);
    const pl::ReducedDensity density(p);
    for (int k = 0; k < checks.samples("divergence", 200); ++k) {
      const State z = pl::pack(pl::reduce(p, ver::random_planar_state(p, drng)));
      worst = std::max(worst, ver::weighted_divergence(field, density, z).scaled());
    }
    res.report.diagnostics["weighted_divergence"] = worst;
    checks.at_most("divergence", worst);
  }
  if (checks.enabled("levelset_divergence")) {
    ver::Rng drng(c.seed + 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double scaled = 0.0, closed = 0.0;
    for (int k = 0; k < checks.samples("levelset_divergence", 200); ++k) {
      const pl::LevelSetParams d{u(drng), u(drng), 0.5 + std::abs(u(drng))};
      const Vec3 y(u(drng), u(drng), u(drng));
      const auto w = ver::weighted_divergence(pl::LevelSetField(p, d), pl::LevelSetDensity(p, d), State(y));
      scaled = std::max(scaled, w.scaled());
      closed = std::max(closed, std::abs(w.divergence - pl::level_set_divergence(p, d, y)) /
                                    std::max(1.0, std::abs(w.divergence)));
    }
    res.report.diagnostics["levelset_weighted_divergence"] = scaled;
    res.report.diagnostics["levelset_divergence_closed_form"] = closed;
    checks.at_most("levelset_divergence", std::max(scaled, closed));
  }
  if (checks.enabled("convergence_order")) {
    const double order =
        ver::convergence_order(pl::ConfigurationField(p), pl::pack_configuration(f0),
                               checks.option("convergence_order", "h", 0.05), checks.option("convergence_order", "t_end", 5.0));
    res.report.diagnostics["convergence_order"] = order;
    checks.at_least("convergence_order", order);
  }

  std::vector<double> spins;
  for (const auto& w : f0.ball_omegas) spins.push_back(w.z());
  res.csv_header = planar_header(p.n(), true);
  for (std::size_t k = 0; k < run.flow.states.size(); ++k) {
    const auto f = pl::unpack_configuration(p, run.flow.states[k], spins);
    const auto s = pl::reduce(p, f);
    res.csv_rows.push_back(planar_row(p, run.flow.times[k], s, pl::measure_density(p, s), &f));
  }
}

void run_level_set(const ScenarioConfig& c, ScenarioResult& res) {
  const auto p = planar_params(c.params);
  const json& s = c.initial_state;
  const pl::LevelSetParams d{s["d1"].get<double>(), s["d2"].get<double>(), s["d3"].get<double>()};
  const Vec3 y0 = vec3(s["y"]);
  Checks checks(c, res.checks);
  if (checks.enabled("closed_form") && (d.d1 != 0.0 || d.d2 != 0.0))
    throw ConfigError("checks.closed_form: requires d1 = d2 = 0");

  ver::LevelSetRunOptions opt;
  opt.h = c.integration.h;
  opt.t_end = c.integration.t_end;
  opt.sample_every = c.integration.sample_every;
  opt.seed = c.seed;
  const auto run = ver::level_set_run(p, d, y0, opt);
  res.report = run.report;
  common_checks(checks, res.report);
  if (checks.enabled("closed_form")) checks.at_most("closed_form", *res.report.reference_deviation);
  if (checks.enabled("divergence"))
    checks.at_most("divergence", std::max(res.report.diagnostics.at("weighted_divergence"),
                                          res.report.diagnostics.at("divergence_closed_form")));
  if (checks.enabled("convergence_order")) {
    const double order = ver::convergence_order(pl::LevelSetField(p, d), State(y0),
                                                checks.option("convergence_order", "h", 0.05),
                                                checks.option("convergence_order", "t_end", 5.0));
    res.report.diagnostics["convergence_order"] = order;
    checks.at_least("convergence_order", order);
  }

  res.csv_header = planar_header(p.n(), false);
  const pl::LevelSetDensity density(p, d);
  for (std::size_t k = 0; k < run.flow.states.size(); ++k) {
    const State& y = run.flow.states[k];
    res.csv_rows.push_back(planar_row(p, run.flow.times[k], pl::embed_level_set(p, d, y), density(y), nullptr));
  }
}

void run_oracle_compare(const ScenarioConfig& c, ScenarioResult& res) {
  const auto p = planar_params(c.params);
  ver::Rng rng(c.seed);
  const auto f0 = planar_initial(p, c.initial_state, rng);
  Checks checks(c, res.checks);

  ver::RunOptions opt;
  opt.h = c.integration.h;
  opt.t_end = c.integration.t_end;
  opt.sample_every = c.integration.sample_every;
  opt.seed = c.seed;
  const auto run = ver::oracle_compare_run(p, f0, opt);
  res.report = run.report;
  auto& rep = res.report;
  common_checks(checks, rep);
  if (checks.enabled("equivalence")) checks.at_most("equivalence", *rep.reference_deviation);
  if (checks.enabled("derivative_agreement")) {
    ver::Rng drng(c.seed + 1);
    double worst = rep.diagnostics.at("derivative_agreement");
    for (int k = 0; k < checks.samples("derivative_agreement", 200); ++k)
      worst = std::max(worst, ver::derivative_agreement(p, ver::random_planar_state(p, drng)));
    rep.diagnostics["derivative_agreement"] = worst;
    checks.at_most("derivative_agreement", worst);
  }
  if (checks.enabled("multiplier_relations"))
    checks.at_most("multiplier_relations",
                   std::max(rep.diagnostics.at("multiplier_ratio"), rep.diagnostics.at("force_system")));

  res.csv_header = planar_header(p.n(), true);
  for (std::size_t k = 0; k < run.flow.states.size(); ++k) {
    const auto f = oracle::unpack(p, run.flow.states[k]);
    const auto s = pl::reduce(p, f);
    res.csv_rows.push_back(planar_row(p, run.flow.times[k], s, pl::measure_density(p, s), &f));
  }
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

}  // namespace

bool ScenarioResult::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
  ScenarioResult res;
  if (config.system == "spherical") {
    run_spherical(config, res);
  } else if (config.system == "planar") {
    run_planar(config, res);
  } else if (config.system == "planar-levelset") {
    run_level_set(config, res);
  } else if (config.system == "planar-oracle-compare") {
    run_oracle_compare(config, res);
  } else {
    throw ConfigError("system: unknown system \"" + config.system + "\"");
  }
  return res;
}

std::string format_number(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

void write_csv(std::ostream& out, const ScenarioResult& result) {
  for (std::size_t i = 0; i < result.csv_header.size(); ++i) out << (i ? "," : "") << result.csv_header[i];
  out << '\n';
  for (const auto& row : result.csv_rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

json report_json(const ScenarioConfig& config, const ScenarioResult& result) {
  const auto& r = result.report;
  json j;
  j["scenario"] = config.name;
  j["system"] = config.system;
  j["seed"] = r.seed;
  j["h"] = r.h;
  j["t_end"] = r.t_end;
  j["n"] = r.n;
  j["steps"] = r.steps;
  json integrals = json::array();
  for (const auto& d : r.integrals)
    integrals.push_back({{"name", d.name},
                         {"initial", number(d.initial)},
                         {"max_abs_drift", number(d.max_abs_drift)},
                         {"final_drift", number(d.final_drift)},
                         {"relative_drift", number(d.relative_drift)}});
  j["integrals"] = integrals;
  j["max_constraint_residual"] = number(r.max_constraint_residual);
  j["measure_transport_deviation"] = optional_number(r.measure_transport_deviation);
  j["triangle_drift"] = optional_number(r.triangle_drift);
  j["reference_deviation"] = optional_number(r.reference_deviation);
  j["kinematics_residual"] = optional_number(r.kinematics_residual);
  j["orthogonality_drift"] = optional_number(r.orthogonality_drift);
  j["admissible"] = r.admissible;
  j["min_admissibility_margin"] = number(r.min_admissibility_margin);
  json diag = json::object();
  for (const auto& [k, v] : r.diagnostics) diag[k] = number(v);
  j["diagnostics"] = diag;
  json checks = json::object();
  for (const auto& c : result.checks)
    checks[c.name] = {{"value", number(c.value)},
                      {"tolerance", c.tolerance},
                      {"comparison", c.at_least ? ">=" : "<="},
                      {"passed", c.passed}};
  j["checks"] = checks;
  j["passed"] = result.passed();
  return j;
}

}  // namespace bearing::cli

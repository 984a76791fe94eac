#pragma once

// Executable forms of the conservation and invariant-measure claims:
// weighted divergence mu' + mu div X, flow-volume transport mu(z(t)) det J(t),
// first-integral drift along integrated trajectories, and reduced-vs-oracle
// agreement. Results aggregate into DriftReport.

#include "bearing/integrators.hpp"
#include "bearing/oracle.hpp"
#include "bearing/planar.hpp"
#include "bearing/spherical.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bearing::verification {

struct DivergenceResult {
  double residual = 0.0;  // mu' + mu div X
  double mu_dot = 0.0;
  double mu_div = 0.0;
  double divergence = 0.0;

  /// |residual| / (|mu'| + |mu div X|), or |residual| when both parts vanish.
  double scaled() const {
    const double s = std::abs(mu_dot) + std::abs(mu_div);
    return s > 0.0 ? std::abs(residual) / s : std::abs(residual);
  }
};

/// mu' = <grad mu, X> and div X by central differences with steps
/// rel * max(1, |z_i|).
template <class Field, class Density>
DivergenceResult weighted_divergence(const Field& field, const Density& density, const State& z,
                                     double rel = 1e-6) {
  const double mu = density(z);
  if (!(mu > 0.0)) throw DomainError("weighted_divergence: density must be positive");
  const State x = field(z);
  State grad(z.size());
  State zp = z;
  State zm = z;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double step = rel * std::max(1.0, std::abs(z[j]));
    zp[j] = z[j] + step;
    zm[j] = z[j] - step;
    grad[j] = (density(zp) - density(zm)) / (2.0 * step);
    zp[j] = z[j];
    zm[j] = z[j];
  }
  DivergenceResult out;
  out.divergence = numerical_jacobian(field, z, rel).trace();
  out.mu_dot = grad.dot(x);
  out.mu_div = mu * out.divergence;
  out.residual = out.mu_dot + out.mu_div;
  return out;
}

struct TransportResult {
  double max_deviation = 0.0;    // max_t |mu(z(t)) det J(t) / mu(z0) - 1|
  double final_deviation = 0.0;
  double max_density_change = 0.0;  // max_t |mu(z(t)) / mu(z0) - 1|
};

template <class Field, class Density>
TransportResult transport_check(const Field& field, const Density& density, const State& z0,
                                const IntegrateOptions& opt) {
  const FlowResult flow = tangent_flow(field, z0, opt);
  if (flow.aborted) throw IntegrationError("transport_check: " + flow.abort_reason);
  const double mu0 = density(z0);
  TransportResult out;
  for (std::size_t k = 0; k < flow.states.size(); ++k) {
    const double mu = density(flow.states[k]);
    const double dev = std::abs(mu * flow.tangents[k].determinant() / mu0 - 1.0);
    out.max_deviation = std::max(out.max_deviation, dev);
    out.final_deviation = dev;
    out.max_density_change = std::max(out.max_density_change, std::abs(mu / mu0 - 1.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random admissible states

using Rng = std::mt19937_64;

UnitVec3 random_unit(Rng& rng);

/// Omega uniform in [-1, 1]^3; Gamma_i uniform on S^2, resampled until the
/// no-collision margin is positive.
spherical::SphericalState random_spherical_state(const spherical::SphericalParams& p, Rng& rng);

/// Plate pose in [-1, 1]^2 x [-pi, pi), v uniform in [-1, 1]^3, ball offsets
/// uniform in the annulus r..4r around O with pairwise distance >= 2r.
planar::PlanarFullState random_planar_state(const planar::PlanarParams& p, Rng& rng,
                                            std::span<const double> spins = {});

// ---------------------------------------------------------------------------
// Drift reports

struct IntegralDrift {
  std::string name;
  double initial = 0.0;
  double max_abs_drift = 0.0;
  double final_drift = 0.0;
  double relative_drift = 0.0;  // max_abs_drift / max(1, |initial|)
};

struct DriftReport {
  std::string system;
  std::vector<IntegralDrift> integrals;
  double max_constraint_residual = 0.0;
  std::optional<double> measure_transport_deviation;
  std::optional<double> triangle_drift;
  std::optional<double> reference_deviation;
  std::optional<double> kinematics_residual;
  std::optional<double> orthogonality_drift;
  bool admissible = true;
  double min_admissibility_margin = 0.0;
  std::map<std::string, double> diagnostics;

  double h = 0.0;
  double t_end = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;

  const IntegralDrift* find(const std::string& name) const;
  double max_relative_drift() const;
};

/// Accumulates per-sample values of named integrals.
class DriftTracker {
public:
  void record(const std::string& name, double value);
  std::vector<IntegralDrift> finish() const;

private:
  std::vector<IntegralDrift> items_;
  std::map<std::string, std::size_t> index_;
};

struct RunOptions {
  double h = 1e-3;
  double t_end = 1.0;
  int sample_every = 10;
  std::uint64_t seed = 0;
  int renormalize_every = 100;
  double renormalize_threshold = 1e-10;
};

struct Run {
  DriftReport report;
  FlowResult flow;
};

struct SphericalRunOptions : RunOptions {
  bool reconstruct = false;          // integrate g, g_i alongside
  std::optional<double> transport_t_end;
  bool transport_unit_density = false;  // negative control: mu = 1
};

Run spherical_run(const spherical::SphericalParams& p, const spherical::SphericalState& s0,
                  const SphericalRunOptions& opt);

Run planar_run(const planar::PlanarParams& p, const planar::PlanarFullState& f0, const RunOptions& opt,
               std::optional<double> transport_t_end = std::nullopt);

struct LevelSetRunOptions : RunOptions {
  int divergence_samples = 50;
};

Run level_set_run(const planar::PlanarParams& p, const planar::LevelSetParams& d, const Vec3& y0,
                  const LevelSetRunOptions& opt);

/// Integrates the oracle and the reduced configuration system from the same
/// state; reference_deviation is the max difference of (v, N1, N2, M).
Run oracle_compare_run(const planar::PlanarParams& p, const planar::PlanarFullState& f0,
                       const RunOptions& opt);

/// Max entry of d/dt(Gamma-operator) - [Gamma-operator, hat(Omega)], the
/// derivative taken through the field's Gamma_i'. Vanishes when epsilon = 1.
double lr_evolution_residual(const spherical::SphericalParams& p, const spherical::SphericalState& s);

/// Max abs difference between the oracle-derived and the reduced derivative
/// of (v, N1, N2, M).
double derivative_agreement(const planar::PlanarParams& p, const planar::PlanarFullState& f);

/// Endpoint-error order estimate log2(e(h) / e(h/2)) from three runs at h, h/2, h/4,
/// using the finest as reference.
template <class Field>
double convergence_order(const Field& field, const State& z0, double h, double t_end) {
  auto endpoint = [&](double step) {
    return integrate(field, z0, {step, t_end, 1 << 30}).final_state();
  };
  const State a = endpoint(h);
  const State b = endpoint(h / 2.0);
  const State c = endpoint(h / 4.0);
  // Richardson: (a - b) / (b - c) -> 2^p.
  return std::log2((a - b).norm() / (b - c).norm());
}

}  // namespace bearing::verification

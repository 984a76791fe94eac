#pragma once

// Fixed-step classical RK4 over autonomous vector fields on R^d, with an
// optional variational (tangent) flow J' = Df(z) J integrated alongside.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bearing {

using State = Eigen::VectorXd;

class IntegrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Called after every accepted step with the step index, time and a mutable
/// state (renormalization hooks edit it in place). Returning false aborts.
using StepObserver = std::function<bool(std::int64_t step, double t, State& x)>;

struct IntegrateOptions {
  double h = 1e-3;
  double t_end = 1.0;
  int sample_every = 1;
};

struct FlowResult {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<Eigen::MatrixXd> tangents;  // empty unless produced by tangent_flow
  double h = 0.0;
  bool aborted = false;
  std::string abort_reason;

  const State& final_state() const { return states.back(); }
};

namespace detail {

inline std::string echo(const State& x) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ']';
  return os.str();
}

template <class Field>
State eval(const Field& f, const State& x) {
  State dx = f(x);
  if (dx.size() != x.size())
    throw IntegrationError("vector field returned dimension " + std::to_string(dx.size()) +
                           " for state of dimension " + std::to_string(x.size()));
  if (!dx.allFinite()) throw IntegrationError("non-finite vector field at state " + echo(x));
  return dx;
}

/// Number of full steps and the length of the trailing partial step.
inline std::pair<std::int64_t, double> step_plan(double h, double t_end) {
  const double ratio = t_end / h;
  auto full = static_cast<std::int64_t>(std::floor(ratio + 1e-9));
  double rest = t_end - static_cast<double>(full) * h;
  if (std::abs(rest) <= 1e-9 * h) rest = 0.0;
  return {full, rest};
}

}  // namespace detail

/// One classical fourth-order Runge-Kutta step.
template <class Field>
State rk4_step(const Field& f, const State& x, double h) {
  if (!(h > 0.0)) throw IntegrationError("rk4_step: step size must be positive");
  const State k1 = detail::eval(f, x);
  const State k2 = detail::eval(f, State(x + 0.5 * h * k1));
  const State k3 = detail::eval(f, State(x + 0.5 * h * k2));
  const State k4 = detail::eval(f, State(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Repeated rk4_step up to t_end, finishing with an exact partial step.
/// Samples t = 0, every `sample_every` steps, and the final time.
template <class Field>
FlowResult integrate(const Field& f, const State& x0, const IntegrateOptions& opt,
                     const StepObserver& observer = {}) {
  if (!(opt.t_end > 0.0)) throw IntegrationError("integrate: t_end must be positive");
  if (!(opt.h > 0.0)) throw IntegrationError("integrate: h must be positive");
  if (opt.sample_every < 1) throw IntegrationError("integrate: sample_every must be >= 1");

  FlowResult out;
  out.h = opt.h;
  out.times.push_back(0.0);
  out.states.push_back(x0);

  const auto [full, rest] = detail::step_plan(opt.h, opt.t_end);
  const std::int64_t total = full + (rest > 0.0 ? 1 : 0);
  State x = x0;
  for (std::int64_t k = 1; k <= total; ++k) {
    const bool partial = k > full;
    x = rk4_step(f, x, partial ? rest : opt.h);
    const double t = partial ? opt.t_end : static_cast<double>(k) * opt.h;
    if (observer && !observer(k, t, x)) {
      out.aborted = true;
      out.abort_reason = "observer aborted at t=" + std::to_string(t);
      out.times.push_back(t);
      out.states.push_back(x);
      return out;
    }
    if (k % opt.sample_every == 0 || k == total) {
      out.times.push_back(t);
      out.states.push_back(x);
    }
  }
  return out;
}

/// Central-difference Jacobian with per-component step rel * max(1, |z_i|).
template <class Field>
Eigen::MatrixXd numerical_jacobian(const Field& f, const State& z, double rel = 1e-6) {
  const Eigen::Index d = z.size();
  Eigen::MatrixXd jac(d, d);
  State zp = z;
  State zm = z;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double step = rel * std::max(1.0, std::abs(z[j]));
    zp[j] = z[j] + step;
    zm[j] = z[j] - step;
    jac.col(j) = (detail::eval(f, zp) - detail::eval(f, zm)) / (2.0 * step);
    zp[j] = z[j];
    zm[j] = z[j];
  }
  return jac;
}

/// Integrates the state together with its flow Jacobian J(t), J(0) = E,
/// using the same RK4 tableau for both.
template <class Field>
FlowResult tangent_flow(const Field& f, const State& x0, const IntegrateOptions& opt) {
  const Eigen::Index d = x0.size();
  auto augmented = [&f, d](const State& w) -> State {
    const State z = w.head(d);
    const Eigen::Map<const Eigen::MatrixXd> jac(w.data() + d, d, d);
    State out(w.size());
    out.head(d) = detail::eval(f, z);
    Eigen::Map<Eigen::MatrixXd>(out.data() + d, d, d) = numerical_jacobian(f, z) * jac;
    return out;
  };

  State w0(d + d * d);
  w0.head(d) = x0;
  Eigen::Map<Eigen::MatrixXd>(w0.data() + d, d, d).setIdentity();

  FlowResult raw = integrate(augmented, w0, opt);
  FlowResult out;
  out.h = raw.h;
  out.times = raw.times;
  out.aborted = raw.aborted;
  out.abort_reason = raw.abort_reason;
  for (const State& w : raw.states) {
    out.states.emplace_back(w.head(d));
    out.tangents.emplace_back(Eigen::Map<const Eigen::MatrixXd>(w.data() + d, d, d));
  }
  return out;
}

}  // namespace bearing

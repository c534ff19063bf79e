#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "tenkit/error.hpp"
#include "tenkit/mor.hpp"

namespace tenkit {

namespace {

std::string at_time(double t) {
  std::ostringstream os;
  os.precision(17);
  os << t;
  return os.str();
}

Vector input_at(const Dynamics& sys, const InputSignal& u, double t) {
  if (sys.inputs() == 0 && !u) return Vector();
  Vector v = u(t);
  if (v.size() != sys.inputs()) throw DimensionError("input signal returned " + std::to_string(v.size()) + " values at t=" + at_time(t));
  return v;
}

Vector rk4_step(const Dynamics& sys, const InputSignal& u, double t, double h, const Vector& x) {
  const Vector um = input_at(sys, u, t + 0.5 * h);
  const Vector k1 = sys.rhs(x, input_at(sys, u, t));
  const Vector k2 = sys.rhs(x + 0.5 * h * k1, um);
  const Vector k3 = sys.rhs(x + 0.5 * h * k2, um);
  const Vector k4 = sys.rhs(x + h * k3, input_at(sys, u, t + h));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Solves x - x_prev - h f(x, u(t+h)) = 0 by damped Newton.
Vector implicit_euler_step(const Dynamics& sys, const InputSignal& u, double t, double h, const Vector& x_prev,
                           const SimulationOptions& opts) {
  const Vector un = input_at(sys, u, t + h);
  auto residual = [&](const Vector& x) { return Vector(x - x_prev - h * sys.rhs(x, un)); };
  Vector x = x_prev;
  Vector g = residual(x);
  const Matrix id = Matrix::Identity(x.size(), x.size());
  for (int it = 0; it < opts.newton_max_iters; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= opts.newton_tol) return x;
    const Matrix jg = id - h * sys.jacobian(x, un);
    const Vector step = jg.partialPivLu().solve(-g);
    double alpha = 1.0;
    Vector trial = x + step;
    Vector gt = residual(trial);
    for (int halve = 0; halve < 10 && !(gt.norm() < g.norm()); ++halve) {
      alpha *= 0.5;
      trial = x + alpha * step;
      gt = residual(trial);
    }
    x = std::move(trial);
    g = std::move(gt);
    if (!x.allFinite()) break;
  }
  if (g.allFinite() && g.lpNorm<Eigen::Infinity>() <= opts.newton_tol) return x;
  throw NumericalError("Newton iteration failed to converge in " + std::to_string(opts.newton_max_iters) +
                       " iterations at t=" + at_time(t + h));
}

}  // namespace

Trajectory simulate(const Dynamics& sys, const InputSignal& u, const Vector& x0, const SimulationOptions& opts) {
  if (!(opts.dt > 0.0) || !std::isfinite(opts.dt)) throw ValidationError("time step must be positive");
  if (!(opts.t_end >= opts.t0) || !std::isfinite(opts.t_end - opts.t0)) throw ValidationError("time span must be finite and non-negative");
  if (x0.size() != sys.states()) throw DimensionError("initial state has the wrong length");
  if (sys.inputs() > 0 && !u) throw ValidationError("system has inputs but no input signal was given");
  const double span = opts.t_end - opts.t0;
  const auto steps = static_cast<Index>(std::ceil(span / opts.dt - 1e-9));
  Trajectory out;
  out.t.reserve(static_cast<std::size_t>(steps + 1));
  out.x.resize(sys.states(), steps + 1);
  out.t.push_back(opts.t0);
  out.x.col(0) = x0;
  Vector x = x0;
  for (Index k = 0; k < steps; ++k) {
    const double t = opts.t0 + static_cast<double>(k) * opts.dt;
    const double t_next = k + 1 == steps ? opts.t_end : opts.t0 + static_cast<double>(k + 1) * opts.dt;
    const double h = t_next - t;
    x = opts.integrator == Integrator::rk4 ? rk4_step(sys, u, t, h, x) : implicit_euler_step(sys, u, t, h, x, opts);
    if (!x.allFinite()) throw NumericalError("simulation diverged at t=" + at_time(t_next));
    out.t.push_back(t_next);
    out.x.col(k + 1) = x;
  }
  return out;
}

}  // namespace tenkit

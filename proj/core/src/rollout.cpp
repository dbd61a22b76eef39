#include "rhogap/rollout.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "rhogap/errors.hpp"
#include "rhogap/measure.hpp"

namespace rhogap {

namespace {

Vector closed_loop(VectorRef x, double t, const TrackingController& controller) {
  return BenchmarkSystem::dynamics(x, controller(x, t));
}

TraceRow make_row(VectorRef x, double t, const TrackingController& controller,
                  const LyapunovSpec& lyapunov, const UniformBoundParams* bounds) {
  TraceRow row;
  row.t = t;
  row.x = x;
  row.u = controller(x, t);
  row.x_ref = controller.reference().position(t);
  row.V = lyapunov.value(x, t);
  const Vector grad = lyapunov.gradient(x, t);
  row.vdot_nominal = grad.dot(controller.drift(x, row.u, t)) + lyapunov.time_derivative(x, t);
  row.vdot_sigma = std::numeric_limits<double>::quiet_NaN();
  const MultiOutputGP* model = controller.active_model(t);
  if (model != nullptr && bounds != nullptr && bounds->gamma.size() == model->kernel().latent_dim()) {
    Vector z(x.size() + row.u.size());
    z << x, row.u;
    const Vector var = model->latent_variances(z);
    const Vector w = lyapunov_weights(model->kernel().A(), grad);
    double total = 0.0;
    for (Eigen::Index i = 0; i < var.size(); ++i) {
      total += w(i) * uniform_error_bound(bounds->beta, std::sqrt(var(i)),
                                          bounds->gamma[static_cast<std::size_t>(i)]);
    }
    row.vdot_sigma = total;
  }
  return row;
}

}  // namespace

Vector rk4_step(VectorRef x, double t, double dt, const TrackingController& controller) {
  const Vector k1 = closed_loop(x, t, controller);
  const Vector k2 = closed_loop(x + 0.5 * dt * k1, t + 0.5 * dt, controller);
  const Vector k3 = closed_loop(x + 0.5 * dt * k2, t + 0.5 * dt, controller);
  const Vector k4 = closed_loop(x + dt * k3, t + dt, controller);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

RolloutResult rollout(const TrackingController& controller, VectorRef x0,
                      const RolloutOptions& options) {
  if (!(options.dt > 0.0)) throw InvalidArgument("rollout: dt must be positive");
  if (!(options.T >= options.dt)) throw InvalidArgument("rollout: T must be at least dt");
  if (options.log_stride == 0) throw InvalidArgument("rollout: log stride must be positive");
  if (x0.size() != 2 || !x0.allFinite()) throw InvalidArgument("rollout: x0 must be a finite 2-vector");

  const auto steps = static_cast<std::size_t>(std::llround(options.T / options.dt));
  const LyapunovSpec lyapunov = tracking_lyapunov(controller.reference());
  const double window_start = 0.5 * options.T;

  RolloutResult result;
  Vector x = x0;
  double sq_sum = 0.0;
  std::size_t sq_count = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * options.dt;
    if (options.record_trace && k % options.log_stride == 0) {
      result.trace.push_back(make_row(x, t, controller, lyapunov, options.bounds));
    }
    if (t >= window_start - 1e-12 * options.T) {
      sq_sum += (x - controller.reference().position(t)).squaredNorm();
      ++sq_count;
    }
    result.steps = k;
    if (k == steps) break;
    x = rk4_step(x, t, options.dt, controller);
    if (!x.allFinite() || x.norm() > kDivergenceNorm) {
      result.diverged = true;
      result.steps = k + 1;
      break;
    }
  }
  result.mse_steady_state = result.diverged || sq_count == 0
                                ? std::numeric_limits<double>::infinity()
                                : sq_sum / static_cast<double>(sq_count);
  return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "t,x1,x2,u1,u2,xref1,xref2,V,Vdot_nom,Vdot_sigma\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : trace) {
    out << r.t << ',' << r.x(0) << ',' << r.x(1) << ',' << r.u(0) << ',' << r.u(1) << ','
        << r.x_ref(0) << ',' << r.x_ref(1) << ',' << r.V << ',' << r.vdot_nominal << ',';
    if (std::isnan(r.vdot_sigma)) {
      out << "nan";
    } else {
      out << r.vdot_sigma;
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace rhogap

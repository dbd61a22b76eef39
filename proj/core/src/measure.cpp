#include "rhogap/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "rhogap/errors.hpp"

namespace rhogap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector join(VectorRef x, VectorRef u) {
  Vector z(x.size() + u.size());
  z << x, u;
  return z;
}

std::string describe_point(VectorRef x, double t) {
  std::ostringstream os;
  os << "x=(";
  for (Eigen::Index j = 0; j < x.size(); ++j) os << (j ? ", " : "") << x(j);
  os << "), t=" << t;
  return os.str();
}

}  // namespace

double fill_distance(const Dataset& data, VectorRef x, VectorRef u,
                     const SEKernelParams& kernel_i, std::size_t M) {
  if (M == 0) throw InvalidArgument("fill_distance: M must be at least 1");
  if (static_cast<std::size_t>(x.size()) != data.state_dim() ||
      static_cast<std::size_t>(u.size()) != data.input_dim()) {
    throw InvalidArgument("fill_distance: query dimensions do not match the dataset");
  }
  if (kernel_i.min_input_dim() > data.state_dim() + data.input_dim()) {
    throw InvalidArgument("fill_distance: kernel active dims exceed the input dimension");
  }
  if (M > data.size()) throw InsufficientData(data.size(), M);
  const Vector z = join(x, u);
  std::vector<double> sq(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    sq[n] = kernel_i.scaled_sq_distance_unchecked(z.data(), data[n].z.data());
  }
  std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(M - 1), sq.end());
  return std::sqrt(sq[M - 1]);
}

double theta_sq(const CoregKernel& kernel, const Matrix& noise, std::size_t M, std::size_t i) {
  if (i >= kernel.latent_dim()) throw InvalidArgument("theta_sq: output index out of range");
  const double s2 = kernel.kernel(i).signal_variance();
  const double col_sq = kernel.A().col(static_cast<Eigen::Index>(i)).squaredNorm();
  return std::log(s2 * col_sq / gershgorin_denominator(kernel, noise, M));
}

Vector lyapunov_weights(const Matrix& A, VectorRef grad_v) {
  if (grad_v.size() != A.rows()) {
    throw InvalidArgument("Lyapunov gradient has dimension " + std::to_string(grad_v.size()) +
                          ", expected " + std::to_string(A.rows()));
  }
  return A.cwiseAbs().transpose() * grad_v.cwiseAbs();
}

double vdot_nominal(VectorRef x, double t, const LyapunovSpec& lyapunov,
                    const MultiOutputGP& model, const Controller& controller) {
  const Vector z = join(x, controller(x, t));
  const Vector drift = model.kernel().A() * model.latent_means(z);
  return lyapunov.gradient(x, t).dot(drift) + lyapunov.time_derivative(x, t);
}

double vdot_uncertain(VectorRef x, double t, const LyapunovSpec& lyapunov,
                      const MultiOutputGP& model, const Controller& controller,
                      const UniformBoundParams& bounds) {
  const std::size_t df = model.kernel().latent_dim();
  if (bounds.gamma.size() != df) {
    throw InvalidArgument("vdot_uncertain: bound parameters do not match the model");
  }
  const Vector z = join(x, controller(x, t));
  const Vector var = model.latent_variances(z);
  const Vector w = lyapunov_weights(model.kernel().A(), lyapunov.gradient(x, t));
  double total = 0.0;
  for (std::size_t i = 0; i < df; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    total += w(ii) * uniform_error_bound(bounds.beta, std::sqrt(var(ii)), bounds.gamma[i]);
  }
  return total;
}

XiValue xi_from_terms(double vdot_effective, const Matrix& A, VectorRef grad_v, double beta,
                      double signal_variance_i, double nu, std::size_t i, XiCap cap) {
  if (i >= static_cast<std::size_t>(A.cols())) throw InvalidArgument("xi: output index out of range");
  if (!(nu > 0.0)) throw InvalidArgument("xi: nu must be positive");
  if (grad_v.size() != A.rows()) throw InvalidArgument("xi: gradient dimension mismatch");
  const auto col = A.col(static_cast<Eigen::Index>(i));
  const double share = col.cwiseAbs().sum() / A.cwiseAbs().sum();
  const double projected = cap == XiCap::kSignedSum ? std::abs(col.dot(grad_v))
                                                    : col.cwiseAbs().dot(grad_v.cwiseAbs());
  const double from_nominal = -vdot_effective * share;
  const double from_prior = 2.0 * std::sqrt(beta * signal_variance_i) * projected - nu;
  const double value = std::min(from_nominal, from_prior);
  if (!(value > 0.0)) return XiValue{0.0, true};
  return XiValue{value, false};
}

XiValue xi(VectorRef x, double t, std::size_t i, const LyapunovSpec& lyapunov,
           const MultiOutputGP& model, const Controller& controller,
           const UniformBoundParams& bounds, double nu, StabilityMode mode, XiCap cap) {
  double vdot = vdot_nominal(x, t, lyapunov, model, controller);
  if (mode == StabilityMode::kExponential) vdot += lyapunov.value(x, t);
  return xi_from_terms(vdot, model.kernel().A(), lyapunov.gradient(x, t), bounds.beta,
                       model.kernel().kernel(i).signal_variance(), nu, i, cap);
}

double phibar_sq(double xi_value, double weight, double beta, double signal_variance) {
  if (!(weight > 0.0)) {
    throw DomainError("phibar_sq: Lyapunov weight must be positive, got " + std::to_string(weight));
  }
  const double cap = 4.0 * beta * signal_variance * weight * weight;
  const double ratio = xi_value * xi_value / cap;
  if (!(ratio < 1.0)) {
    throw DomainError("phibar_sq: xi^2 = " + std::to_string(xi_value * xi_value) +
                      " violates xi^2 < 4 beta s^2 w^2 = " + std::to_string(cap));
  }
  const double value = -std::log1p(-ratio);
  return value >= kPhibarInfinity ? kInf : value;
}

RhoGapContext RhoGapContext::make(std::shared_ptr<const MultiOutputGP> model,
                                  LyapunovSpec lyapunov, Controller controller,
                                  UniformBoundParams bounds, std::size_t M, double nu,
                                  StabilityMode mode, XiCap cap) {
  if (!model) throw InvalidArgument("rho-gap context: model is null");
  if (M == 0) throw InvalidArgument("rho-gap context: M must be at least 1");
  if (!(nu > 0.0)) throw InvalidArgument("rho-gap context: nu must be positive");
  if (!lyapunov.value || !lyapunov.gradient || !lyapunov.time_derivative || !controller) {
    throw InvalidArgument("rho-gap context: Lyapunov function and controller are required");
  }
  if (bounds.gamma.size() != model->kernel().latent_dim()) {
    throw InvalidArgument("rho-gap context: bound parameters do not match the model");
  }
  RhoGapContext ctx;
  ctx.lyapunov = std::move(lyapunov);
  ctx.controller = std::move(controller);
  ctx.bounds = std::move(bounds);
  ctx.M = M;
  ctx.nu = nu;
  ctx.mode = mode;
  ctx.xi_cap = cap;
  for (std::size_t i = 0; i < model->kernel().latent_dim(); ++i) {
    ctx.theta_sq.push_back(rhogap::theta_sq(model->kernel(), model->noise(), M, i));
  }
  ctx.model = std::move(model);
  return ctx;
}

PointRequirement requirement_at(VectorRef x, double t, const RhoGapContext& ctx) {
  const MultiOutputGP& model = *ctx.model;
  const Matrix& A = model.kernel().A();
  PointRequirement req{Vector(x), ctx.controller(x, t), t, {}};
  const Vector z = join(x, req.u);
  const Vector grad = ctx.lyapunov.gradient(x, t);
  double vdot = grad.dot(A * model.latent_means(z)) + ctx.lyapunov.time_derivative(x, t);
  if (ctx.mode == StabilityMode::kExponential) vdot += ctx.lyapunov.value(x, t);
  const Vector w = lyapunov_weights(A, grad);

  const std::size_t df = model.kernel().latent_dim();
  req.outputs.resize(df);
  for (std::size_t i = 0; i < df; ++i) {
    const double s2 = model.kernel().kernel(i).signal_variance();
    const XiValue budget = xi_from_terms(vdot, A, grad, ctx.bounds.beta, s2, ctx.nu, i, ctx.xi_cap);
    auto& out = req.outputs[i];
    out.xi = budget.value;
    out.unsatisfiable = budget.unsatisfiable;
    out.weight = w(static_cast<Eigen::Index>(i));
    if (budget.unsatisfiable) {
      out.phibar_sq = 0.0;
    } else {
      try {
        out.phibar_sq = phibar_sq(budget.value, out.weight, ctx.bounds.beta, s2);
      } catch (const DomainError& e) {
        throw DomainError(std::string(e.what()) + " at " + describe_point(x, t) + ", output " +
                          std::to_string(i));
      }
    }
  }
  return req;
}

double rho_from(const std::vector<double>& fill_sq, const PointRequirement& req,
                const std::vector<double>& theta) {
  double rho = 0.0;
  for (std::size_t i = 0; i < req.outputs.size(); ++i) {
    const double phibar = req.outputs[i].phibar_sq;
    if (std::isinf(phibar)) continue;
    rho += std::max(0.0, fill_sq[i] - phibar - theta[i]);
  }
  return rho;
}

RhoGapBreakdown rho_gap_breakdown(VectorRef x, double t, const Dataset& subset,
                                  const RhoGapContext& ctx) {
  const PointRequirement req = requirement_at(x, t, ctx);
  const auto& kernel = ctx.model->kernel();
  RhoGapBreakdown out;
  for (std::size_t i = 0; i < kernel.latent_dim(); ++i) {
    const double phi = fill_distance(subset, x, req.u, kernel.kernel(i), ctx.M);
    out.fill_sq.push_back(phi * phi);
    out.phibar_sq.push_back(req.outputs[i].phibar_sq);
  }
  out.rho = rho_from(out.fill_sq, req, ctx.theta_sq);
  return out;
}

double rho_gap(VectorRef x, double t, const Dataset& subset, const RhoGapContext& ctx) {
  return rho_gap_breakdown(x, t, subset, ctx).rho;
}

bool certify_uncertainty_budget(VectorRef x, double t, std::size_t i, const Dataset& subset,
                                const RhoGapContext& ctx) {
  const auto& kernel = ctx.model->kernel();
  if (i >= kernel.latent_dim()) throw InvalidArgument("certify: output index out of range");
  if (ctx.M > subset.size()) throw InsufficientData(subset.size(), ctx.M);
  const PointRequirement req = requirement_at(x, t, ctx);
  const Vector z = join(x, req.u);
  // The guarantee concerns the model trained on `subset` itself.
  const MultiOutputGP subset_model =
      MultiOutputGP::fit(subset, kernel, ctx.model->noise(), ctx.model->prior_mean());
  const double sigma = std::sqrt(subset_model.posterior_component(z, i).variance);
  if (!(std::sqrt(ctx.bounds.beta) * sigma > ctx.bounds.gamma[i])) {
    throw DomainError("certify: tau precondition sqrt(beta) sigma > gamma fails at " +
                      describe_point(x, t) + ", output " + std::to_string(i));
  }
  const double phi = fill_distance(subset, x, req.u, kernel.kernel(i), ctx.M);
  return phi * phi <= req.outputs[i].phibar_sq + ctx.theta_sq[i];
}

}  // namespace rhogap

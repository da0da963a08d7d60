#include "flipforge/dpo.hpp"

#include <cmath>

#include "flipforge/error.hpp"

namespace flipforge {

namespace {

void check_dims(const DpoModel& model, const Comparison& c) {
  if (c.delta_psi.size() != model.theta.size())
    throw InvalidInput("comparison dimension does not match model dimension");
}

// o beta dpsi^T (theta - theta_mu)
double margin(const DpoModel& model, const Comparison& c) {
  check_dims(model, c);
  return c.label * model.beta * c.delta_psi.dot(model.theta - model.theta_mu);
}

}  // namespace

DpoModel DpoModel::at_reference(Eigen::Index d, double beta, double lambda) {
  return DpoModel{Vector::Zero(d), Vector::Zero(d), beta, lambda};
}

void DpoModel::validate() const {
  if (!(beta > 0.0)) throw InvalidInput("beta must be positive");
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be positive");
  if (theta.size() != theta_mu.size())
    throw InvalidInput("theta and theta_mu have different lengths");
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) noexcept {
  if (x > 30.0) return x + std::exp(-x);  // log1p(e^-x) == e^-x to double precision
  if (x < -30.0) return std::exp(x);
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double per_sample_loss(const DpoModel& model, const Comparison& c) {
  return softplus(-margin(model, c));
}

Vector per_sample_gradient(const DpoModel& model, const Comparison& c) {
  const double z = margin(model, c);
  return (-c.label * model.beta * sigmoid(-z)) * c.delta_psi;
}

Vector flip_shift(const Comparison& c, double beta) {
  if (!(beta > 0.0)) throw InvalidInput("beta must be positive");
  return (c.label * beta) * c.delta_psi;
}

double total_loss(const DpoModel& model, std::span<const Comparison> data) {
  double loss = 0.0;
  for (const Comparison& c : data) loss += per_sample_loss(model, c);
  return loss + 0.5 * model.lambda * (model.theta - model.theta_mu).squaredNorm();
}

Vector total_gradient(const DpoModel& model, std::span<const Comparison> data) {
  Vector g = Vector::Zero(model.theta.size());
  for (const Comparison& c : data) {
    const double z = margin(model, c);
    g += (-c.label * model.beta * sigmoid(-z)) * c.delta_psi;
  }
  return g + model.lambda * (model.theta - model.theta_mu);
}

Vector target_gradient(const DpoModel& model_at_target, std::span<const Comparison> data) {
  return total_gradient(model_at_target, data);
}

double smoothness_bound(double beta, double lambda, std::span<const Comparison> data) {
  double s = 0.0;
  for (const Comparison& c : data) s += c.delta_psi.squaredNorm();
  return lambda + 0.25 * beta * beta * s;
}

TrainResult train(std::span<const Comparison> data, const DpoModel& model_init,
                  const TrainConfig& cfg) {
  model_init.validate();
  if (!(cfg.learning_rate > 0.0)) throw InvalidInput("learning_rate must be positive");
  if (!(cfg.grad_tol > 0.0)) throw InvalidInput("grad_tol must be positive");

  TrainResult result{model_init, 0, 0.0, false};
  DpoModel& m = result.model;
  for (;;) {
    const Vector g = total_gradient(m, data);
    const double gnorm = g.norm();
    if (!std::isfinite(gnorm))
      throw NumericalFailure("divergence: non-finite gradient after " +
                             std::to_string(result.steps) + " steps");
    result.final_grad_norm = gnorm;
    if (gnorm <= cfg.grad_tol) {
      result.converged = true;
      break;
    }
    if (result.steps >= cfg.max_steps) break;
    m.theta -= cfg.learning_rate * g;
    ++result.steps;
  }
  if (!m.theta.allFinite()) throw NumericalFailure("divergence: non-finite parameters");
  return result;
}

double policy_l1_distance(const DpoModel& a, const DpoModel& b,
                          std::span<const Comparison> data) {
  if (a.theta.size() != b.theta.size()) throw InvalidInput("models have different dimensions");
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const Comparison& c : data) {
    check_dims(a, c);
    const double pa = sigmoid(c.delta_psi.dot(a.theta - a.theta_mu));
    const double pb = sigmoid(c.delta_psi.dot(b.theta - b.theta_mu));
    total += 2.0 * std::abs(pa - pb);
  }
  return total / static_cast<double>(data.size());
}

PolicyBound grad_to_policy_bound(double residual_eps, double m, std::size_t d) {
  if (!(m > 0.0)) throw InvalidInput("strong convexity constant must be positive");
  const double param = residual_eps / m;
  return {param, 2.0 * std::sqrt(static_cast<double>(d)) * param};
}

bool residual_meets_policy_tolerance(double residual_eps, double m, std::size_t d,
                                     double tolerance) {
  if (!(m > 0.0)) throw InvalidInput("strong convexity constant must be positive");
  return residual_eps <= m * tolerance / (2.0 * std::sqrt(static_cast<double>(d)));
}

}  // namespace flipforge

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "flipforge/dictionary.hpp"

namespace flipforge {

/// Log-linear DPO model: policy parameter, reference parameter, temperature
/// and l2 regularization weight.
struct DpoModel {
  Vector theta;
  Vector theta_mu;
  double beta = 1.0;
  double lambda = 1.0;

  /// Model with theta = theta_mu = 0 in dimension d.
  static DpoModel at_reference(Eigen::Index d, double beta, double lambda);
  /// Throws InvalidInput if beta/lambda are not positive or dimensions differ.
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t max_steps = 100000;
  double grad_tol = 1e-8;
  std::uint64_t seed = 0;  // recorded only; the default start is theta_mu
};

struct TrainResult {
  DpoModel model;
  std::size_t steps = 0;
  double final_grad_norm = 0.0;
  bool converged = false;
};

/// Overflow-safe sigma(x) and log(1 + exp(x)).
double sigmoid(double x) noexcept;
double softplus(double x) noexcept;

/// log(1 + exp(-o beta dpsi^T (theta - theta_mu)))
double per_sample_loss(const DpoModel& model, const Comparison& c);
/// -o beta sigma(-o beta dpsi^T (theta - theta_mu)) dpsi
Vector per_sample_gradient(const DpoModel& model, const Comparison& c);

/// Gradient change from flipping c's label; independent of theta.
Vector flip_shift(const Comparison& c, double beta);

/// Sum of per-sample losses plus (lambda/2) ||theta - theta_mu||^2.
double total_loss(const DpoModel& model, std::span<const Comparison> data);
/// Sum of per-sample gradients (input order) plus lambda (theta - theta_mu).
Vector total_gradient(const DpoModel& model, std::span<const Comparison> data);
/// g-dagger: the clean-data gradient evaluated at the target parameter.
Vector target_gradient(const DpoModel& model_at_target, std::span<const Comparison> data);

/// Upper bound on the gradient's Lipschitz constant: lambda + beta^2/4 sum ||dpsi||^2.
double smoothness_bound(double beta, double lambda, std::span<const Comparison> data);

/// Full-batch gradient descent from model_init.theta until ||grad|| <= grad_tol
/// or max_steps. Throws NumericalFailure("divergence") on non-finite values.
TrainResult train(std::span<const Comparison> data, const DpoModel& model_init,
                  const TrainConfig& cfg);

/// Mean over comparisons of 2 |p_a - p_b| with p = sigma(dpsi^T (theta - theta_mu)),
/// the l1 distance between the two models' pairwise action distributions.
double policy_l1_distance(const DpoModel& a, const DpoModel& b,
                          std::span<const Comparison> data);

struct PolicyBound {
  double parameter_bound;   // ||theta_hat - theta_dagger|| <= eps / m
  double policy_tolerance;  // smallest policy tolerance implied: 2 sqrt(d) eps / m
};

/// Strong-convexity bound from a gradient residual eps with curvature m.
PolicyBound grad_to_policy_bound(double residual_eps, double m, std::size_t d);

/// Whether residual eps guarantees policy tolerance `tolerance`: eps <= m tol / (2 sqrt d).
bool residual_meets_policy_tolerance(double residual_eps, double m, std::size_t d,
                                     double tolerance);

}  // namespace flipforge

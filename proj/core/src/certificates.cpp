#include "flipforge/certificates.hpp"

#include <algorithm>
#include <cmath>

#include "flipforge/combinations.hpp"
#include "flipforge/error.hpp"
#include "flipforge/rng.hpp"

namespace flipforge {

std::string_view to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::norm_lower_bound: return "norm_lower_bound";
    case CertificateKind::spectral_impossible: return "spectral_impossible";
    case CertificateKind::coherence_impossible: return "coherence_impossible";
  }
  return "unknown";
}

double flip_lower_bound(double g_norm, double beta, double eps) {
  if (!(beta > 0.0)) throw InvalidInput("beta must be positive");
  return std::max(0.0, (g_norm - eps) / (2.0 * beta));
}

double spectral_norm(const Matrix& V, double rel_tol, std::size_t max_iter) {
  const Eigen::Index n = V.cols();
  if (n == 0 || V.rows() == 0) return 0.0;
  Rng rng(0x5eedULL);
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.normal();
  x.normalize();
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const Vector y = V.transpose() * (V * x);
    const double next = x.dot(y);  // Rayleigh quotient of V^T V
    const double ynorm = y.norm();
    if (ynorm == 0.0) return 0.0;
    x = y / ynorm;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  // one more Rayleigh quotient at the converged direction
  lambda = std::max(lambda, (V * x).squaredNorm());
  return std::sqrt(lambda);
}

Certificate spectral_certificate(const FlipDictionary& dict, const Vector& g_dagger,
                                 std::size_t k, double eps) {
  if (k < 1) throw InvalidInput("budget K must be at least 1");
  if (g_dagger.size() != dict.dim()) throw InvalidInput("target gradient has wrong dimension");
  Certificate c{CertificateKind::spectral_impossible};
  c.budget_k = k;
  c.tolerance_eps = eps;
  c.lhs = g_dagger.norm() - eps;
  c.rhs = std::sqrt(static_cast<double>(k)) * spectral_norm(dict.matrix());
  c.fired = c.lhs > c.rhs;
  return c;
}

Certificate coherence_certificate(const FlipDictionary& dict, const Vector& g_dagger,
                                  std::size_t k, double eps) {
  if (k < 1) throw InvalidInput("budget K must be at least 1");
  if (g_dagger.size() != dict.dim()) throw InvalidInput("target gradient has wrong dimension");
  Certificate c{CertificateKind::coherence_impossible};
  c.budget_k = k;
  c.tolerance_eps = eps;
  const double gap = std::max(0.0, g_dagger.norm() - eps);
  // With a single column there are no pairs, so the coherence term is absent.
  const double mu = (k == 1 || dict.size() < 2) ? 0.0 : dict.coherence();
  const double K = static_cast<double>(k);
  const double B = dict.max_norm();
  c.lhs = gap * gap;
  c.rhs = B * B * (K + mu * K * (K - 1.0));
  c.fired = c.lhs > c.rhs;
  return c;
}

OracleResult brute_force_min_flip(const FlipDictionary& dict, const Vector& g_dagger, double eps,
                                  std::size_t max_n, std::optional<std::size_t> max_flips) {
  const auto n = static_cast<std::size_t>(dict.size());
  if (g_dagger.size() != dict.dim()) throw InvalidInput("target gradient has wrong dimension");
  if (n > max_n)
    throw Refused("oracle refused: n = " + std::to_string(n) + " exceeds max_n = " +
                  std::to_string(max_n));
  OracleResult out;
  out.flips.assign(n, 0);
  const std::size_t top = std::min(n, max_flips.value_or(n));
  Vector acc(dict.dim());
  for (std::size_t k = 0; k <= top; ++k) {
    bool found = false;
    for_each_combination(n, k, [&](std::span<const std::size_t> subset) {
      ++out.subsets_checked;
      // same accumulation order as attack_residual: ascending columns, then g
      acc.setZero();
      for (std::size_t i : subset) acc += dict.column(static_cast<Eigen::Index>(i));
      acc += g_dagger;
      const double res = acc.norm();
      if (res <= eps) {
        found = true;
        out.residual = res;
        for (std::size_t i : subset) out.flips[i] = 1;
        return false;
      }
      return true;
    });
    if (found) {
      out.feasible = true;
      out.k_star = k;
      return out;
    }
  }
  return out;
}

}  // namespace flipforge

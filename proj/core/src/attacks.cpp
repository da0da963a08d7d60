#include "flipforge/attacks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "flipforge/combinations.hpp"
#include "flipforge/error.hpp"

namespace flipforge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void finish(AttackResult& r, const FlipDictionary& dict, const Vector& g) {
  r.flip_count = static_cast<std::size_t>(std::count(r.flips.begin(), r.flips.end(), 1));
  r.residual = attack_residual(dict, r.flips, g);
}

void check_enumeration(std::size_t n, std::size_t k) {
  const std::uint64_t count = binomial(n, k);
  if (count > kEnumerationCap)
    throw Refused("enumeration too large: C(" + std::to_string(n) + ", " + std::to_string(k) +
                  ") = " + std::to_string(count) + " subsets exceeds the cap of " +
                  std::to_string(kEnumerationCap));
}

}  // namespace

Matrix embedded_basis(const FlipDictionary& dict, double penalty_m) {
  const Eigen::Index d = dict.dim();
  const Eigen::Index n = dict.size();
  Matrix basis = Matrix::Zero(d + n, n);
  basis.topRows(d) = dict.matrix();
  basis.bottomRows(n).diagonal().setConstant(penalty_m);
  return basis;
}

AttackResult bal_attack(const FlipDictionary& dict, const Vector& g_dagger, const BalConfig& cfg) {
  const auto start = Clock::now();
  if (g_dagger.size() != dict.dim())
    throw InvalidInput("target gradient has dimension " + std::to_string(g_dagger.size()) +
                       ", dictionary has " + std::to_string(dict.dim()));
  if (!(cfg.penalty_m > 0.0)) throw InvalidInput("penalty M must be positive");
  const Eigen::Index d = dict.dim();
  const Eigen::Index n = dict.size();

  AttackResult r;
  r.flips.assign(static_cast<std::size_t>(n), 0);
  r.raw_integers.assign(static_cast<std::size_t>(n), 0);
  if (g_dagger.isZero(0.0)) {
    finish(r, dict, g_dagger);
    r.wall_time = seconds_since(start);
    return r;
  }

  Vector target = Vector::Zero(d + n);
  target.head(d) = -g_dagger;

  IntVector x_int;
  try {
    const LatticeBasis basis(embedded_basis(dict, cfg.penalty_m));
    const ReductionResult reduction = lll_reduce(basis, cfg.lll_delta);
    const IntVector z = babai_nearest_plane(reduction.reduced, target);
    x_int = IntVector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::int64_t acc = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        std::int64_t prod = 0;
        if (__builtin_mul_overflow(reduction.transform(i, j), z[j], &prod) ||
            __builtin_add_overflow(acc, prod, &acc))
          throw NumericalFailure("T z overflowed 64 bits");
      }
      x_int[i] = acc;
    }
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(std::string("BAL-A: ") + e.what());
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string("BAL-A: ") + e.what());
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    r.raw_integers[k] = x_int[i];
    r.flips[k] = static_cast<int>(std::clamp<std::int64_t>(x_int[i], 0, 1));
  }
  finish(r, dict, g_dagger);
  r.wall_time = seconds_since(start);
  return r;
}

AttackResult bmp_attack(const FlipDictionary& dict, const Vector& target_y, const BmpConfig& cfg) {
  const auto start = Clock::now();
  if (target_y.size() != dict.dim())
    throw InvalidInput("target has dimension " + std::to_string(target_y.size()) +
                       ", dictionary has " + std::to_string(dict.dim()));
  if (cfg.budget_k < 1) throw InvalidInput("budget K must be at least 1");
  if (!(cfg.tolerance_eps >= 0.0)) throw InvalidInput("tolerance must be nonnegative");

  const Eigen::Index n = dict.size();
  AttackResult r;
  r.flips.assign(static_cast<std::size_t>(n), 0);
  const Vector g = -target_y;
  if (target_y.isZero(0.0)) {
    finish(r, dict, g);
    r.wall_time = seconds_since(start);
    return r;
  }

  const Vector& norms = dict.norms();
  Vector residual = target_y;
  const std::size_t budget = std::min<std::size_t>(cfg.budget_k, static_cast<std::size_t>(n));
  for (std::size_t t = 0; t < budget; ++t) {
    const Vector scores = (dict.matrix().transpose() * residual).cwiseAbs().cwiseQuotient(norms);
    Eigen::Index best = -1;
    double best_score = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (r.flips[static_cast<std::size_t>(i)]) continue;
      if (scores[i] > best_score) {  // strict: the lowest index wins ties
        best_score = scores[i];
        best = i;
      }
    }
    r.flips[static_cast<std::size_t>(best)] = 1;
    residual -= dict.column(best);
    ++r.iterations;
    if (residual.norm() <= cfg.tolerance_eps) break;
  }
  finish(r, dict, g);
  r.wall_time = seconds_since(start);
  return r;
}

double m0_bound(double max_norm_b, double residual_r, std::size_t k_star) {
  if (!(max_norm_b > 0.0)) throw InvalidInput("B must be positive");
  if (!(residual_r >= 0.0)) throw InvalidInput("R must be nonnegative");
  if (k_star < 1) throw InvalidInput("K* must be at least 1");
  const double B = max_norm_b;
  const double K = static_cast<double>(k_star);
  return (B * std::sqrt(K) + std::sqrt(B * B * K + 6.0 * B * residual_r + 3.0 * B * B)) / 3.0;
}

double best_k_residual(const FlipDictionary& dict, const Vector& g_dagger, std::size_t k) {
  if (g_dagger.size() != dict.dim()) throw InvalidInput("target gradient has wrong dimension");
  const auto n = static_cast<std::size_t>(dict.size());
  if (k > n) throw InvalidInput("k exceeds the number of columns");
  check_enumeration(n, k);
  double best = std::numeric_limits<double>::infinity();
  Vector acc(dict.dim());
  for_each_combination(n, k, [&](std::span<const std::size_t> subset) {
    acc = g_dagger;
    for (std::size_t i : subset) acc += dict.column(static_cast<Eigen::Index>(i));
    best = std::min(best, acc.norm());
    return true;
  });
  return best;
}

double separation_threshold(const FlipDictionary& dict, const Vector& g_dagger,
                            std::size_t k_star) {
  if (k_star < 1) throw InvalidInput("K* must be at least 1");
  const auto n = static_cast<std::size_t>(dict.size());
  if (k_star > n) throw InvalidInput("K* exceeds the number of columns");
  for (std::size_t k = 0; k < k_star; ++k) check_enumeration(n, k);
  double threshold = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_star; ++k) {
    const double rho = best_k_residual(dict, g_dagger, k);
    threshold = std::min(threshold, rho / std::sqrt(static_cast<double>(k_star - k)));
  }
  return threshold;
}

double surrogate_objective(const FlipDictionary& dict, const Vector& g_dagger,
                           const FlipVector& x, double penalty_m) {
  check_flip_vector(x, static_cast<std::size_t>(dict.size()));
  const double residual = attack_residual(dict, x, g_dagger);
  const auto ones = static_cast<double>(std::count(x.begin(), x.end(), 1));
  return residual * residual + penalty_m * penalty_m * ones;
}

}  // namespace flipforge

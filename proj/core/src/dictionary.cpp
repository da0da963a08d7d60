#include "flipforge/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flipforge/error.hpp"
#include "flipforge/rng.hpp"

namespace flipforge {

namespace {

double pair_correlation(const Matrix& columns, const Vector& norms, Eigen::Index i,
                        Eigen::Index j) {
  const double c = std::abs(columns.col(i).dot(columns.col(j))) / (norms[i] * norms[j]);
  return std::min(c, 1.0);
}

Vector unit_gaussian_column(Rng& rng, std::size_t d) {
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < v.size(); ++r) v[r] = rng.normal();
  const double norm = v.norm();
  // A zero draw has probability zero; redraw to keep the column valid anyway.
  if (norm == 0.0) return unit_gaussian_column(rng, d);
  return v / norm;
}

}  // namespace

FlipDictionary::FlipDictionary(Matrix columns, double beta, std::optional<double> coherence)
    : columns_(std::move(columns)), beta_(beta), coherence_(coherence) {
  if (!(beta_ > 0.0) || !std::isfinite(beta_))
    throw InvalidInput("beta must be a positive finite number");
  if (columns_.rows() == 0 || columns_.cols() == 0)
    throw InvalidInput("dictionary must have at least one row and one column");
  if (!columns_.allFinite()) throw InvalidInput("dictionary contains non-finite entries");
  norms_ = columns_.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < norms_.size(); ++i) {
    if (norms_[i] == 0.0)
      throw InvalidInput("degenerate comparison: zero flip-effect column",
                         static_cast<std::size_t>(i));
  }
  min_norm_ = norms_.minCoeff();
  max_norm_ = norms_.maxCoeff();
}

double FlipDictionary::coherence() const {
  if (coherence_) return *coherence_;
  return mutual_coherence(columns_);
}

FlipDictionary FlipDictionary::select(std::span<const std::size_t> indices) const {
  Matrix sub(dim(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= static_cast<std::size_t>(size()))
      throw InvalidInput("column index out of range", indices[k]);
    sub.col(static_cast<Eigen::Index>(k)) = columns_.col(static_cast<Eigen::Index>(indices[k]));
  }
  return FlipDictionary(std::move(sub), beta_);
}

FlipDictionary build_dictionary(std::span<const Comparison> comparisons, double beta) {
  if (comparisons.empty()) throw InvalidInput("no comparisons given");
  if (!(beta > 0.0)) throw InvalidInput("beta must be positive");
  const Eigen::Index d = comparisons.front().delta_psi.size();
  if (d == 0) throw InvalidInput("comparison has empty feature difference", 0);
  Matrix columns(d, static_cast<Eigen::Index>(comparisons.size()));
  for (std::size_t i = 0; i < comparisons.size(); ++i) {
    const Comparison& c = comparisons[i];
    if (c.delta_psi.size() != d)
      throw InvalidInput("dimension mismatch: expected " + std::to_string(d) + " features, got " +
                             std::to_string(c.delta_psi.size()),
                         i);
    if (c.label != 1 && c.label != -1) throw InvalidInput("label must be +1 or -1", i);
    if (c.delta_psi.norm() == 0.0) throw InvalidInput("degenerate comparison", i);
    columns.col(static_cast<Eigen::Index>(i)) = (c.label * beta) * c.delta_psi;
  }
  return FlipDictionary(std::move(columns), beta);
}

std::vector<std::size_t> unnormalized_comparisons(std::span<const Comparison> comparisons) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < comparisons.size(); ++i)
    if (comparisons[i].delta_psi.norm() > 2.0) out.push_back(i);
  return out;
}

double mutual_coherence(const Matrix& columns) {
  const Eigen::Index n = columns.cols();
  if (n < 2) throw InvalidInput("coherence undefined for fewer than two columns");
  const Vector norms = columns.colwise().norm().transpose();
  double mu = 0.0;
  // Sequential scan; the result does not depend on any evaluation schedule.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) mu = std::max(mu, pair_correlation(columns, norms, i, j));
  return mu;
}

double mutual_coherence(const FlipDictionary& dict) { return mutual_coherence(dict.matrix()); }

std::size_t max_guaranteed_sparsity(double mu, double min_norm, double max_norm,
                                    std::size_t cap) {
  auto holds = [&](std::size_t k) {
    return mu < min_norm / ((2.0 * static_cast<double>(k) - 1.0) * max_norm);
  };
  if (!holds(1)) return 0;
  if (mu <= 0.0) return cap;
  const double estimate = std::floor((min_norm / (mu * max_norm) + 1.0) / 2.0);
  std::size_t k = static_cast<std::size_t>(
      std::clamp(estimate, 1.0, static_cast<double>(std::max<std::size_t>(cap, 1))));
  // The closed form can land one off either way under rounding or ties.
  while (k > 1 && !holds(k)) --k;
  while (k < cap && holds(k + 1)) ++k;
  return std::min(k, cap);
}

std::size_t max_guaranteed_sparsity(const FlipDictionary& dict) {
  const auto n = static_cast<std::size_t>(dict.size());
  if (n < 2) return n;  // no pairs: mu = 0 and the single column is always recoverable
  return max_guaranteed_sparsity(dict.coherence(), dict.min_norm(), dict.max_norm(), n);
}

FlipDictionary gaussian_dictionary(std::size_t d, std::size_t n, std::uint64_t seed,
                                   bool unit_norm) {
  if (d == 0 || n == 0) throw InvalidInput("gaussian_dictionary needs d >= 1 and n >= 1");
  Rng rng(seed);
  Matrix columns(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    if (unit_norm) {
      columns.col(j) = unit_gaussian_column(rng, d);
    } else {
      for (Eigen::Index r = 0; r < columns.rows(); ++r) columns(r, j) = rng.normal();
    }
  }
  return FlipDictionary(std::move(columns), 1.0);
}

LowCoherenceResult low_coherence_dictionary(std::size_t d, std::size_t n, std::uint64_t seed,
                                            double target_mu, std::size_t max_resamples) {
  if (!(target_mu > 0.0 && target_mu < 1.0))
    throw InvalidInput("target_mu must lie in (0, 1)");
  if (d == 0 || n == 0) throw InvalidInput("low_coherence_dictionary needs d >= 1 and n >= 1");
  Rng rng(seed);
  const auto N = static_cast<Eigen::Index>(n);
  Matrix U(static_cast<Eigen::Index>(d), N);
  for (Eigen::Index j = 0; j < N; ++j) U.col(j) = unit_gaussian_column(rng, d);

  if (n < 2) return {FlipDictionary(std::move(U), 1.0), std::nullopt, true, 0};

  Matrix corr = (U.transpose() * U).cwiseAbs();
  std::size_t resamples = 0;
  while (true) {
    // argmax pair in row-major scan order; the lower index is resampled
    Eigen::Index bi = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = i + 1; j < N; ++j)
        if (corr(i, j) > best) {
          best = corr(i, j);
          bi = i;
        }
    if (best <= target_mu || resamples >= max_resamples) break;
    U.col(bi) = unit_gaussian_column(rng, d);
    const Vector row = (U.transpose() * U.col(bi)).cwiseAbs();
    corr.col(bi) = row;
    corr.row(bi) = row.transpose();
    ++resamples;
  }
  const double achieved = mutual_coherence(U);
  return {FlipDictionary(std::move(U), 1.0, achieved), achieved, achieved <= target_mu, resamples};
}

SubsetSelection low_coherence_subset(const FlipDictionary& dict, double threshold,
                                     std::size_t size, std::uint64_t seed) {
  if (!(threshold > 0.0)) throw InvalidInput("threshold must be positive");
  const auto n = static_cast<std::size_t>(dict.size());
  if (size > n) throw InvalidInput("subset size exceeds dictionary size");
  Rng rng(seed);
  const std::vector<std::size_t> order = rng.permutation(n);
  SubsetSelection out;
  for (std::size_t candidate : order) {
    if (out.indices.size() == size) break;
    bool admit = true;
    if (threshold < 1.0) {
      for (std::size_t chosen : out.indices) {
        if (pair_correlation(dict.matrix(), dict.norms(), static_cast<Eigen::Index>(candidate),
                             static_cast<Eigen::Index>(chosen)) >= threshold) {
          admit = false;
          break;
        }
      }
    }
    if (admit) out.indices.push_back(candidate);
  }
  out.complete = out.indices.size() == size;
  return out;
}

std::vector<Comparison> random_comparisons(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Comparison> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector chosen = unit_gaussian_column(rng, d);
    Vector rejected = unit_gaussian_column(rng, d);
    Comparison c{chosen - rejected, rng.uniform_index(2) == 0 ? 1 : -1};
    if (c.delta_psi.norm() == 0.0) c.delta_psi = chosen;  // measure-zero coincidence
    out.push_back(std::move(c));
  }
  return out;
}

void check_flip_vector(const FlipVector& flips, std::size_t n) {
  if (flips.size() != n)
    throw InvalidInput("flip vector has length " + std::to_string(flips.size()) + ", expected " +
                       std::to_string(n));
  for (std::size_t i = 0; i < flips.size(); ++i)
    if (flips[i] != 0 && flips[i] != 1) throw InvalidInput("flip entries must be 0 or 1", i);
}

Vector combine_columns(const FlipDictionary& dict, const FlipVector& flips) {
  check_flip_vector(flips, static_cast<std::size_t>(dict.size()));
  Vector sum = Vector::Zero(dict.dim());
  for (std::size_t i = 0; i < flips.size(); ++i)
    if (flips[i]) sum += dict.column(static_cast<Eigen::Index>(i));
  return sum;
}

double attack_residual(const FlipDictionary& dict, const FlipVector& flips, const Vector& g) {
  if (g.size() != dict.dim()) throw InvalidInput("target gradient has wrong dimension");
  return (combine_columns(dict, flips) + g).norm();
}

}  // namespace flipforge

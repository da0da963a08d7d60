#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace flipforge {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Binary flip selector: entry i is 1 when comparison i has its label flipped.
using FlipVector = std::vector<int>;

/// One preference pair reduced to its feature difference psi(s,a) - psi(s,a')
/// and the observed outcome.
struct Comparison {
  Vector delta_psi;
  int label = 1;  // +1 or -1
};

/// Flip-effect dictionary: column i is the gradient shift produced by flipping
/// comparison i, label_i * beta * delta_psi_i. Column norms are cached; the
/// mutual coherence is cached only when the producer already knows it.
class FlipDictionary {
 public:
  /// Throws InvalidInput on an empty matrix, a zero column or beta <= 0.
  FlipDictionary(Matrix columns, double beta, std::optional<double> coherence = std::nullopt);

  const Matrix& matrix() const noexcept { return columns_; }
  Eigen::Index dim() const noexcept { return columns_.rows(); }
  Eigen::Index size() const noexcept { return columns_.cols(); }
  auto column(Eigen::Index i) const { return columns_.col(i); }

  double beta() const noexcept { return beta_; }
  const Vector& norms() const noexcept { return norms_; }
  double min_norm() const noexcept { return min_norm_; }
  double max_norm() const noexcept { return max_norm_; }

  const std::optional<double>& cached_coherence() const noexcept { return coherence_; }
  /// Cached value when present, otherwise an exact pairwise scan (n >= 2).
  double coherence() const;

  /// Dictionary restricted to the given columns, in the given order.
  FlipDictionary select(std::span<const std::size_t> indices) const;

 private:
  Matrix columns_;
  double beta_;
  Vector norms_;
  double min_norm_ = 0.0;
  double max_norm_ = 0.0;
  std::optional<double> coherence_;
};

/// Builds V with columns label_i * beta * delta_psi_i, in input order.
FlipDictionary build_dictionary(std::span<const Comparison> comparisons, double beta);

/// Indices of comparisons whose ||delta_psi|| exceeds 2 (the bound implied by
/// unit-norm features). Such data is accepted but guarantees that rely on the
/// bound (e.g. the flip-count lower bound) may not hold.
std::vector<std::size_t> unnormalized_comparisons(std::span<const Comparison> comparisons);

/// max_{i != j} |<v_i, v_j>| / (||v_i|| ||v_j||), by exhaustive pairwise scan.
double mutual_coherence(const FlipDictionary& dict);
double mutual_coherence(const Matrix& columns);

/// Largest K with mu < b / ((2K - 1) B), capped at `cap`; 0 if even K = 1 fails.
std::size_t max_guaranteed_sparsity(double mu, double min_norm, double max_norm,
                                    std::size_t cap);
/// Same, for a dictionary (cap = n).
std::size_t max_guaranteed_sparsity(const FlipDictionary& dict);

/// d x n matrix of i.i.d. standard normals, columns optionally scaled to unit
/// norm. beta is recorded as 1.
FlipDictionary gaussian_dictionary(std::size_t d, std::size_t n, std::uint64_t seed,
                                   bool unit_norm = true);

struct LowCoherenceResult {
  FlipDictionary dictionary;
  std::optional<double> achieved_mu;  // empty when n < 2
  bool reached_target = false;
  std::size_t resamples = 0;
};

/// Unit-norm Gaussian dictionary decorrelated by repeatedly resampling the
/// lower-indexed column of the currently most coherent pair until
/// mu <= target_mu or `max_resamples` draws have been spent.
LowCoherenceResult low_coherence_dictionary(std::size_t d, std::size_t n, std::uint64_t seed,
                                            double target_mu, std::size_t max_resamples);

struct SubsetSelection {
  std::vector<std::size_t> indices;  // in selection order
  bool complete = false;             // true when `size` indices were found
};

/// Greedy low-coherence column selection over a seed-shuffled order. A column
/// is admitted when its normalized inner product with every admitted column is
/// below `threshold`; threshold >= 1 admits everything.
SubsetSelection low_coherence_subset(const FlipDictionary& dict, double threshold,
                                     std::size_t size, std::uint64_t seed);

/// Synthetic comparisons with unit-norm features: delta_psi is the difference
/// of two independent uniform directions, labels are fair coin flips.
std::vector<Comparison> random_comparisons(std::size_t n, std::size_t d, std::uint64_t seed);

/// V x, accumulating the selected columns in ascending index order.
Vector combine_columns(const FlipDictionary& dict, const FlipVector& flips);

/// ||V x + g||_2 with the column sum formed by `combine_columns`.
double attack_residual(const FlipDictionary& dict, const FlipVector& flips, const Vector& g);

/// Throws InvalidInput unless every entry is 0 or 1 and the length is n.
void check_flip_vector(const FlipVector& flips, std::size_t n);

}  // namespace flipforge

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace flipforge {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kDefaultLllDelta = 0.75;
/// Relative slack on |mu| <= 1/2 when checking size reduction.
inline constexpr double kMuTolerance = 1e-9;
/// Relative rank tolerance: a Gram-Schmidt norm below this times the largest
/// column norm counts as linear dependence.
inline constexpr double kRankTolerance = 1e-10;

/// m linearly independent columns in ambient dimension D >= m.
class LatticeBasis {
 public:
  /// Throws InvalidInput when D < m or the columns are (numerically) dependent.
  explicit LatticeBasis(Matrix columns);

  const Matrix& columns() const noexcept { return columns_; }
  Eigen::Index ambient_dim() const noexcept { return columns_.rows(); }
  Eigen::Index rank() const noexcept { return columns_.cols(); }
  double rank_tol() const noexcept;

 private:
  Matrix columns_;
};

struct GramSchmidt {
  Matrix orthogonal;  // column i is b*_i
  Matrix mu;          // mu(i, j) for j < i; unit diagonal, zero above
  Vector sq_norms;    // ||b*_i||^2
};

/// b*_i = b_i - sum_{j<i} mu_ij b*_j, mu_ij = <b_i, b*_j> / <b*_j, b*_j>.
GramSchmidt gram_schmidt(const LatticeBasis& basis);

struct ReductionResult {
  LatticeBasis reduced;  // B * T
  IntMatrix transform;   // unimodular T
  std::size_t swaps = 0;
};

/// delta-LLL reduction with exact integer tracking of the transform.
/// Throws InvalidInput for delta outside (1/4, 1) and NumericalFailure when
/// the swap cap trips ("reduction stalled") or a transform entry overflows.
ReductionResult lll_reduce(const LatticeBasis& basis, double delta = kDefaultLllDelta);

/// Nearest-plane decoding of `target` against `reduced`: integer z with B z
/// close to target. Rounding is half away from zero.
IntVector babai_nearest_plane(const LatticeBasis& reduced, const Vector& target);

struct ReductionReport {
  double max_abs_mu = 0.0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> size_violations;  // (i, j)
  std::vector<Eigen::Index> lovasz_violations;                          // k, for pair (k-1, k)
  bool unimodular = false;
  std::string determinant;  // exact det T in decimal
  double reconstruction_error = 0.0;  // ||B~ - B T||_F / ||B||_F

  bool size_reduced() const { return size_violations.empty(); }
  bool lovasz() const { return lovasz_violations.empty(); }
  bool reconstruction_ok() const { return reconstruction_error <= 1e-8; }
  bool passed() const { return size_reduced() && lovasz() && unimodular && reconstruction_ok(); }
};

/// Independent check of the LLL postconditions. Gram-Schmidt data is taken
/// from a Householder QR of the reduced basis and det T is computed exactly
/// with fraction-free elimination. Never throws on a bad result; it reports.
ReductionReport verify_reduction(const ReductionResult& result, const LatticeBasis& original,
                                 double delta = kDefaultLllDelta);

}  // namespace flipforge

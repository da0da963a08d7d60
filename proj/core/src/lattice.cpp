#include "flipforge/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "flipforge/error.hpp"

namespace flipforge {

namespace {

std::int64_t checked_axpy(std::int64_t a, std::int64_t q, std::int64_t b) {
  // a - q * b
  std::int64_t prod = 0;
  std::int64_t out = 0;
  if (__builtin_mul_overflow(q, b, &prod) || __builtin_sub_overflow(a, prod, &out))
    throw NumericalFailure("LLL transform entry overflowed 64 bits");
  return out;
}

std::int64_t round_to_int(double x) {
  const double r = std::round(x);  // half away from zero
  if (!(std::abs(r) < 9.0e18)) throw NumericalFailure("rounded coefficient out of 64-bit range");
  return static_cast<std::int64_t>(r);
}

double max_column_norm(const Matrix& m) {
  return m.cols() == 0 ? 0.0 : m.colwise().norm().maxCoeff();
}

// Gram-Schmidt row i, given rows [0, i) are current.
void orthogonalize_row(const Matrix& B, GramSchmidt& gso, Eigen::Index i) {
  Vector v = B.col(i);
  for (Eigen::Index j = 0; j < i; ++j) {
    const double mu = B.col(i).dot(gso.orthogonal.col(j)) / gso.sq_norms[j];
    gso.mu(i, j) = mu;
    v -= mu * gso.orthogonal.col(j);
  }
  gso.mu(i, i) = 1.0;
  for (Eigen::Index j = i + 1; j < B.cols(); ++j) gso.mu(i, j) = 0.0;
  gso.orthogonal.col(i) = v;
  gso.sq_norms[i] = v.squaredNorm();
}

void orthogonalize_from(const Matrix& B, GramSchmidt& gso, Eigen::Index from) {
  for (Eigen::Index i = from; i < B.cols(); ++i) orthogonalize_row(B, gso, i);
}

GramSchmidt orthogonalize(const Matrix& B) {
  GramSchmidt gso{Matrix::Zero(B.rows(), B.cols()), Matrix::Zero(B.cols(), B.cols()),
                  Vector::Zero(B.cols())};
  orthogonalize_from(B, gso, 0);
  return gso;
}

void check_rank(const GramSchmidt& gso, double tol) {
  for (Eigen::Index i = 0; i < gso.sq_norms.size(); ++i)
    if (!(std::sqrt(gso.sq_norms[i]) > tol))
      throw InvalidInput("rank deficient at index " + std::to_string(i),
                         static_cast<std::size_t>(i));
}

using BigInt = boost::multiprecision::cpp_int;

// Bareiss fraction-free elimination; exact for integer input.
BigInt exact_determinant(const IntMatrix& T) {
  const Eigen::Index n = T.rows();
  if (n == 0) return 1;
  std::vector<std::vector<BigInt>> a(n, std::vector<BigInt>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a[i][j] = T(i, j);
  BigInt prev = 1;
  int sign = 1;
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    if (a[k][k] == 0) {
      Eigen::Index p = k + 1;
      while (p < n && a[p][k] == 0) ++p;
      if (p == n) return 0;
      std::swap(a[k], a[p]);
      sign = -sign;
    }
    for (Eigen::Index i = k + 1; i < n; ++i)
      for (Eigen::Index j = k + 1; j < n; ++j)
        a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

}  // namespace

LatticeBasis::LatticeBasis(Matrix columns) : columns_(std::move(columns)) {
  if (columns_.cols() == 0) throw InvalidInput("lattice basis has no columns");
  if (columns_.rows() < columns_.cols())
    throw InvalidInput("lattice basis has more columns than ambient dimensions");
  if (!columns_.allFinite()) throw InvalidInput("lattice basis has non-finite entries");
  check_rank(orthogonalize(columns_), rank_tol());
}

double LatticeBasis::rank_tol() const noexcept {
  return kRankTolerance * max_column_norm(columns_);
}

GramSchmidt gram_schmidt(const LatticeBasis& basis) {
  GramSchmidt gso = orthogonalize(basis.columns());
  check_rank(gso, basis.rank_tol());
  return gso;
}

ReductionResult lll_reduce(const LatticeBasis& basis, double delta) {
  if (!(delta > 0.25 && delta < 1.0)) throw InvalidInput("LLL delta must lie in (1/4, 1)");

  Matrix B = basis.columns();
  const Eigen::Index m = B.cols();
  IntMatrix T = IntMatrix::Identity(m, m);
  GramSchmidt gso = orthogonalize(B);
  const double tol = basis.rank_tol();

  const double md = static_cast<double>(m);
  const double swap_cap =
      10.0 * md * md * std::log2(max_column_norm(B) + 2.0) + 1000.0;
  std::size_t swaps = 0;

  auto stalled = [&](const char* why, Eigen::Index k) {
    std::ostringstream os;
    os << "reduction stalled (" << why << ") at k=" << k << " after " << swaps
       << " swaps; |b*|^2 =";
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(m, 8); ++i) os << ' ' << gso.sq_norms[i];
    if (m > 8) os << " ...";
    return NumericalFailure(os.str());
  };

  auto size_reduce = [&](Eigen::Index k) {
    for (int pass = 0;; ++pass) {
      if (pass == 64) throw stalled("size reduction did not settle", k);
      bool changed = false;
      for (Eigen::Index j = k - 1; j >= 0; --j) {
        const double mu = gso.mu(k, j);
        // Slack past 1/2 stops ties from flipping sign on every refresh.
        if (std::abs(mu) <= 0.5 + 0.1 * kMuTolerance) continue;
        const std::int64_t q = round_to_int(mu);
        const double qd = static_cast<double>(q);
        B.col(k) -= qd * B.col(j);
        for (Eigen::Index r = 0; r < m; ++r) T(r, k) = checked_axpy(T(r, k), q, T(r, j));
        for (Eigen::Index l = 0; l < j; ++l) gso.mu(k, l) -= qd * gso.mu(j, l);
        gso.mu(k, j) -= qd;
        changed = true;
      }
      if (!changed) return;
      // Refresh row k against the drift of the incremental updates.
      orthogonalize_row(B, gso, k);
    }
  };

  Eigen::Index k = 1;
  while (k < m) {
    size_reduce(k);
    const double mu = gso.mu(k, k - 1);
    if (delta * gso.sq_norms[k - 1] <= gso.sq_norms[k] + mu * mu * gso.sq_norms[k - 1]) {
      ++k;
      continue;
    }
    B.col(k - 1).swap(B.col(k));
    T.col(k - 1).swap(T.col(k));
    if (static_cast<double>(++swaps) > swap_cap) throw stalled("swap cap exceeded", k);
    orthogonalize_from(B, gso, k - 1);
    if (!(std::sqrt(gso.sq_norms[k - 1]) > tol) || !(std::sqrt(gso.sq_norms[k]) > tol))
      throw stalled("basis lost rank", k);
    k = std::max<Eigen::Index>(k - 1, 1);
  }
  return ReductionResult{LatticeBasis(std::move(B)), std::move(T), swaps};
}

IntVector babai_nearest_plane(const LatticeBasis& reduced, const Vector& target) {
  const Matrix& B = reduced.columns();
  if (target.size() != B.rows())
    throw InvalidInput("target dimension does not match the lattice ambient dimension");
  const Eigen::Index m = B.cols();
  Eigen::HouseholderQR<Matrix> qr(B);
  const Matrix R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  const Vector y = (qr.householderQ().adjoint() * target).head(m);
  const double tol = reduced.rank_tol();

  IntVector z = IntVector::Zero(m);
  for (Eigen::Index i = m - 1; i >= 0; --i) {
    if (!(std::abs(R(i, i)) > tol))
      throw NumericalFailure("Babai: |R_ii| below rank tolerance at index " + std::to_string(i));
    double r = y[i];
    for (Eigen::Index j = i + 1; j < m; ++j) r -= R(i, j) * static_cast<double>(z[j]);
    z[i] = round_to_int(r / R(i, i));
  }
  return z;
}

ReductionReport verify_reduction(const ReductionResult& result, const LatticeBasis& original,
                                 double delta) {
  ReductionReport report;
  const Matrix& Bt = result.reduced.columns();
  const Eigen::Index m = Bt.cols();

  if (result.transform.rows() != m || result.transform.cols() != m ||
      original.columns().cols() != m || original.columns().rows() != Bt.rows()) {
    report.reconstruction_error = std::numeric_limits<double>::infinity();
    report.determinant = "shape mismatch";
    return report;
  }

  Eigen::HouseholderQR<Matrix> qr(Bt);
  const Matrix R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 1; i < m; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double mu = R(j, i) / R(j, j);
      report.max_abs_mu = std::max(report.max_abs_mu, std::abs(mu));
      if (std::abs(mu) > 0.5 + kMuTolerance) report.size_violations.emplace_back(i, j);
    }
  }
  for (Eigen::Index k = 1; k < m; ++k) {
    const double prev = R(k - 1, k - 1) * R(k - 1, k - 1);
    const double cur = R(k, k) * R(k, k);
    const double mu = R(k - 1, k) / R(k - 1, k - 1);
    if (delta * prev > cur + mu * mu * prev + kMuTolerance * prev)
      report.lovasz_violations.push_back(k);
  }

  const BigInt det = exact_determinant(result.transform);
  report.determinant = det.str();
  report.unimodular = det == 1 || det == -1;

  const double scale = original.columns().norm();
  const Matrix rebuilt = original.columns() * result.transform.cast<double>();
  report.reconstruction_error = (Bt - rebuilt).norm() / (scale > 0.0 ? scale : 1.0);
  return report;
}

}  // namespace flipforge

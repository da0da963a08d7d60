#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "flipforge/dictionary.hpp"

namespace flipforge {

enum class CertificateKind { norm_lower_bound, spectral_impossible, coherence_impossible };

std::string_view to_string(CertificateKind kind);

/// A checked inequality lhs > rhs. When `fired`, no attack with at most
/// `budget_k` flips reaches residual `tolerance_eps`. Not firing proves nothing.
struct Certificate {
  CertificateKind kind;
  bool fired = false;
  double lhs = 0.0;
  double rhs = 0.0;
  std::size_t budget_k = 0;
  double tolerance_eps = 0.0;
};

/// max(0, (||g|| - eps) / (2 beta)): the fewest flips any attack can use when
/// every flip-effect column has norm at most 2 beta.
double flip_lower_bound(double g_norm, double beta, double eps);

/// Largest singular value by power iteration on V^T V from a fixed start
/// vector, stopped at relative change `rel_tol`.
double spectral_norm(const Matrix& V, double rel_tol = 1e-9, std::size_t max_iter = 100000);

/// Fires iff ||g|| - eps > sqrt(K) ||V||_2.
Certificate spectral_certificate(const FlipDictionary& dict, const Vector& g_dagger,
                                 std::size_t k, double eps);

/// Fires iff (||g|| - eps)^2 > B^2 (K + mu K (K - 1)), with ||g|| - eps > 0.
/// The left side is recorded as max(0, ||g|| - eps)^2.
Certificate coherence_certificate(const FlipDictionary& dict, const Vector& g_dagger,
                                  std::size_t k, double eps);

inline constexpr std::size_t kDefaultOracleMaxN = 24;

struct OracleResult {
  bool feasible = false;
  FlipVector flips;   // minimum-flip solution (all zeros when infeasible)
  std::size_t k_star = 0;
  double residual = 0.0;
  std::size_t subsets_checked = 0;
};

/// Exhaustive minimum-flip search: subsets in increasing cardinality,
/// lexicographic within a cardinality; the first x with ||V x + g|| <= eps
/// wins. `max_flips` limits the cardinalities examined (infeasible within the
/// limit is reported as infeasible). Throws Refused when n > max_n.
OracleResult brute_force_min_flip(const FlipDictionary& dict, const Vector& g_dagger, double eps,
                                  std::size_t max_n = kDefaultOracleMaxN,
                                  std::optional<std::size_t> max_flips = std::nullopt);

}  // namespace flipforge

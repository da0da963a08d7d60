#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "flipforge/dictionary.hpp"
#include "flipforge/lattice.hpp"

namespace flipforge {

/// Lattice attack settings: penalty M on the coefficient block and LLL delta.
struct BalConfig {
  double penalty_m = 1.0;
  double lll_delta = kDefaultLllDelta;
  /// Reserved for the nonnegative-coefficient variant; the production decode
  /// always clamps, so this flag is recorded but does not change the result.
  bool nonneg_restrict = false;
};

/// Matching pursuit settings: at most `budget_k` selections, stop once the
/// residual norm drops to `tolerance_eps`.
struct BmpConfig {
  std::size_t budget_k = 1;
  double tolerance_eps = 0.0;
};

struct AttackResult {
  FlipVector flips;
  double residual = 0.0;  // ||V x + g||_2
  std::size_t flip_count = 0;
  std::vector<std::int64_t> raw_integers;  // lattice attack only: T z before clamping
  std::size_t iterations = 0;              // pursuit only
  double wall_time = 0.0;                  // seconds

  bool operator==(const AttackResult&) const = default;
};

/// Above this many subset evaluations the exact residual/threshold routines refuse.
inline constexpr std::uint64_t kEnumerationCap = 5'000'000;

/// Binary-aware lattice attack. Embeds columns (v_i; M e_i), LLL-reduces,
/// decodes t = (-g; 0) by nearest plane, maps back through T and clamps to {0,1}.
AttackResult bal_attack(const FlipDictionary& dict, const Vector& g_dagger, const BalConfig& cfg);

/// The embedded basis [v_i; M e_i] used by `bal_attack`.
Matrix embedded_basis(const FlipDictionary& dict, double penalty_m);

/// Binary matching pursuit toward target_y (= -g). Each step picks the
/// unselected column with the largest |<v_i, r>| / ||v_i|| (lowest index on
/// ties) and subtracts it from the residual.
AttackResult bmp_attack(const FlipDictionary& dict, const Vector& target_y, const BmpConfig& cfg);

/// Closed-form penalty above which every lattice minimizer has |z_i| <= 1:
/// (B sqrt(K) + sqrt(B^2 K + 6 B R + 3 B^2)) / 3.
double m0_bound(double max_norm_b, double residual_r, std::size_t k_star);

/// rho_k = min over k-subsets of ||V x + g||, by exhaustive enumeration.
/// Throws Refused when C(n, k) exceeds kEnumerationCap.
double best_k_residual(const FlipDictionary& dict, const Vector& g_dagger, std::size_t k);

/// min over k < K* of rho_k / sqrt(K* - k). Every M strictly below it satisfies
/// rho_k^2 > M^2 (K* - k) for all k < K*.
double separation_threshold(const FlipDictionary& dict, const Vector& g_dagger,
                            std::size_t k_star);

/// ||V x + g||^2 + M^2 * sum(x); throws InvalidInput for non-binary x.
double surrogate_objective(const FlipDictionary& dict, const Vector& g_dagger,
                           const FlipVector& x, double penalty_m);

}  // namespace flipforge

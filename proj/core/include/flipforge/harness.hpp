#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flipforge/attacks.hpp"
#include "flipforge/dictionary.hpp"
#include "flipforge/dpo.hpp"

namespace flipforge {

enum class ExperimentKind { m_sweep, k_sweep, single_attack, diagnose };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

/// Where a sweep gets its dictionary: a CSV file or one of the generators.
struct DictionarySource {
  enum class Generator { file, gaussian, low_coherence };
  Generator generator = Generator::gaussian;
  std::string path;
  std::size_t d = 64;
  std::size_t n = 20;
  bool unit_norm = true;
  double target_mu = 0.2;
  std::size_t max_resamples = 1'000'000;

  bool operator==(const DictionarySource&) const = default;
};

/// `count` log-spaced values from lo to hi inclusive.
struct LogGrid {
  double lo = 0.05;
  double hi = 3.0;
  std::size_t count = 25;

  std::vector<double> values() const;
  bool operator==(const LogGrid&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::m_sweep;
  DictionarySource dict_source;
  std::size_t k_star = 5;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  LogGrid m_grid;
  std::vector<std::size_t> k_grid;
  std::size_t bmp_budget = 0;  // 0: run K* + bmp_budget_slack iterations
  std::size_t bmp_budget_slack = 0;
  double bmp_eps = 0.0;
  double lll_delta = kDefaultLllDelta;
  /// Wall times are zeroed unless set, so that reports are byte-reproducible.
  bool record_timing = false;
  std::size_t threads = 1;

  /// Pursuit budget K* + 5 with tolerance 1e-3, instead of exactly K* iterations.
  void use_budgeted_pursuit() {
    bmp_budget = 0;
    bmp_budget_slack = 5;
    bmp_eps = 1e-3;
  }

  /// Throws InvalidInput when trials == 0 or the kind's grid is empty.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

struct Thresholds {
  double m0 = 0.0;
  std::optional<double> m_all_sep;
  std::size_t k_coh = 0;

  bool operator==(const Thresholds&) const = default;
};

struct TrialRecord {
  std::size_t trial_index = 0;
  std::uint64_t trial_seed = 0;
  double grid_value = 0.0;  // M for m_sweep, K* for k_sweep
  std::vector<std::size_t> planted_support;
  AttackResult attack_result;
  double tpr = 0.0;
  std::size_t fp_count = 0;
  std::size_t fn_count = 0;
  double residual = 0.0;
  Thresholds thresholds;

  bool operator==(const TrialRecord&) const = default;
};

struct GridAggregate {
  double grid_value = 0.0;
  std::size_t trials = 0;
  double mean_tpr = 0.0;
  double std_tpr = 0.0;  // population standard deviation
  double mean_residual = 0.0;
  double std_residual = 0.0;
  /// Trials whose separation threshold exceeds this grid value, and their mean TPR.
  std::size_t below_sep_trials = 0;
  std::optional<double> mean_tpr_below_sep;

  bool operator==(const GridAggregate&) const = default;
};

struct DictionarySummary {
  std::size_t d = 0;
  std::size_t n = 0;
  double min_norm = 0.0;
  double max_norm = 0.0;
  std::optional<double> coherence;
  std::size_t k_coh = 0;

  bool operator==(const DictionarySummary&) const = default;
};

struct ModelSummary {
  std::vector<double> theta;
  std::size_t steps = 0;
  double final_grad_norm = 0.0;
  bool converged = false;

  bool operator==(const ModelSummary&) const = default;
};

/// Retraining comparison between clean data, data flipped by an attack and
/// data flipped by the planted ground truth.
struct RetrainDiagnostics {
  ModelSummary clean;
  ModelSummary attacked;
  ModelSummary planted;
  double attack_vs_groundtruth_param = 0.0;   // ||theta_hat - theta_dagger||
  double attack_vs_groundtruth_policy = 0.0;  // policy l1 distance
  double clean_vs_attacked_param = 0.0;
  double clean_vs_attacked_policy = 0.0;

  bool operator==(const RetrainDiagnostics&) const = default;
};

struct Environment {
  std::string version;
  std::string prng;
  double wall_time = 0.0;

  bool operator==(const Environment&) const = default;
};

inline constexpr const char* kReportFormatVersion = "flipforge-report/1";

struct Report {
  std::string format_version = kReportFormatVersion;
  ExperimentConfig config;
  std::optional<DictionarySummary> dictionary;
  std::vector<TrialRecord> records;
  std::vector<GridAggregate> aggregates;
  std::optional<RetrainDiagnostics> diagnostics;
  Environment environment;

  bool operator==(const Report&) const = default;
};

struct PlantedAttack {
  std::vector<std::size_t> support;  // sorted
  FlipVector x_star;
  Vector g_dagger;  // -V x_star, so the planted flips have zero residual
};

/// Uniform random support of size k_star; throws InvalidInput if k_star > n.
PlantedAttack plant_attack(const FlipDictionary& dict, std::size_t k_star, std::uint64_t seed);

struct SupportMetrics {
  double tpr = 1.0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  bool operator==(const SupportMetrics&) const = default;
};

/// TPR = |recovered & planted| / |planted| (1 when planted is empty).
SupportMetrics support_metrics(const FlipVector& recovered, const FlipVector& planted);

/// Copy of the dataset with labels negated where flips[i] == 1.
std::vector<Comparison> apply_flips(std::span<const Comparison> data, const FlipVector& flips);

/// Planted attack at the DPO level: theta_dagger is the optimum of the data
/// with labels pre-flipped on a random support, so g_dagger + V x_star equals
/// the poisoned-loss gradient at theta_dagger (tiny by construction).
struct DpoPlantedAttack {
  std::vector<std::size_t> support;
  FlipVector x_star;
  DpoModel target;  // theta = theta_dagger
  Vector g_dagger;
  FlipDictionary dictionary;
  double poisoned_grad_norm = 0.0;
};

DpoPlantedAttack plant_retraining_attack(std::span<const Comparison> data, std::size_t k_star,
                                         std::uint64_t seed, const DpoModel& model_template,
                                         const TrainConfig& cfg);

RetrainDiagnostics retrain_diagnostics(std::span<const Comparison> data, const FlipVector& flips,
                                       const FlipVector& planted, const DpoModel& model_template,
                                       const TrainConfig& cfg);

/// Per-grid-value aggregates, in order of first appearance.
std::vector<GridAggregate> aggregate_records(std::span<const TrialRecord> records);

Report run_m_sweep(const ExperimentConfig& cfg);
Report run_k_sweep(const ExperimentConfig& cfg);

/// Dictionary described by a source; `seed` feeds the generators.
FlipDictionary make_dictionary(const DictionarySource& source, std::uint64_t seed);

std::string library_version();

}  // namespace flipforge

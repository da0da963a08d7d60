#include "flipforge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "flipforge/error.hpp"
#include "flipforge/io.hpp"
#include "flipforge/rng.hpp"

#ifndef FLIPFORGE_VERSION
#define FLIPFORGE_VERSION "0.0.0"
#endif

namespace flipforge {

namespace {

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
// writes only its own output slot, so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

FlipVector indicator(std::size_t n, std::span<const std::size_t> support) {
  FlipVector x(n, 0);
  for (std::size_t i : support) x[i] = 1;
  return x;
}

ModelSummary summarize(const TrainResult& r) {
  return ModelSummary{std::vector<double>(r.model.theta.data(),
                                          r.model.theta.data() + r.model.theta.size()),
                      r.steps, r.final_grad_norm, r.converged};
}

DictionarySummary summarize(const FlipDictionary& dict) {
  DictionarySummary s;
  s.d = static_cast<std::size_t>(dict.dim());
  s.n = static_cast<std::size_t>(dict.size());
  s.min_norm = dict.min_norm();
  s.max_norm = dict.max_norm();
  if (dict.size() >= 2) s.coherence = dict.coherence();
  s.k_coh = max_guaranteed_sparsity(dict);
  return s;
}

TrialRecord make_record(std::size_t trial, std::uint64_t trial_seed, double grid_value,
                        const PlantedAttack& planted, AttackResult result, bool record_timing,
                        const Thresholds& thresholds) {
  if (!record_timing) result.wall_time = 0.0;
  const SupportMetrics m = support_metrics(result.flips, planted.x_star);
  TrialRecord rec;
  rec.trial_index = trial;
  rec.trial_seed = trial_seed;
  rec.grid_value = grid_value;
  rec.planted_support = planted.support;
  rec.residual = result.residual;
  rec.attack_result = std::move(result);
  rec.tpr = m.tpr;
  rec.fp_count = m.fp;
  rec.fn_count = m.fn;
  rec.thresholds = thresholds;
  return rec;
}

Environment environment(bool record_timing, std::chrono::steady_clock::time_point start) {
  Environment env{library_version(), std::string(Rng::kName), 0.0};
  if (record_timing)
    env.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return env;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::m_sweep: return "m_sweep";
    case ExperimentKind::k_sweep: return "k_sweep";
    case ExperimentKind::single_attack: return "single_attack";
    case ExperimentKind::diagnose: return "diagnose";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "m_sweep") return ExperimentKind::m_sweep;
  if (s == "k_sweep") return ExperimentKind::k_sweep;
  if (s == "single_attack") return ExperimentKind::single_attack;
  if (s == "diagnose") return ExperimentKind::diagnose;
  throw InvalidInput("unknown experiment kind '" + s + "'");
}

std::vector<double> LogGrid::values() const {
  if (count == 0) return {};
  if (!(lo > 0.0 && hi >= lo)) throw InvalidInput("log grid needs 0 < lo <= hi");
  if (count == 1) return {lo};
  std::vector<double> out(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw InvalidInput("trials must be at least 1");
  if (!(lll_delta > 0.25 && lll_delta < 1.0)) throw InvalidInput("lll_delta must lie in (1/4, 1)");
  if (kind == ExperimentKind::m_sweep && m_grid.count == 0)
    throw InvalidInput("m_sweep needs a non-empty M grid");
  if (kind == ExperimentKind::k_sweep && k_grid.empty())
    throw InvalidInput("k_sweep needs a non-empty K grid");
  if (!(bmp_eps >= 0.0)) throw InvalidInput("bmp_eps must be nonnegative");
}

std::string library_version() { return FLIPFORGE_VERSION; }

FlipDictionary make_dictionary(const DictionarySource& source, std::uint64_t seed) {
  switch (source.generator) {
    case DictionarySource::Generator::file:
      return read_dictionary(source.path);
    case DictionarySource::Generator::gaussian:
      return gaussian_dictionary(source.d, source.n, seed, source.unit_norm);
    case DictionarySource::Generator::low_coherence:
      return low_coherence_dictionary(source.d, source.n, seed, source.target_mu,
                                      source.max_resamples)
          .dictionary;
  }
  throw InvalidInput("unknown dictionary source");
}

PlantedAttack plant_attack(const FlipDictionary& dict, std::size_t k_star, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(dict.size());
  if (k_star > n)
    throw InvalidInput("cannot plant " + std::to_string(k_star) + " flips among " +
                       std::to_string(n) + " comparisons");
  Rng rng(seed);
  PlantedAttack out;
  out.support = rng.sample_without_replacement(n, k_star);
  out.x_star = indicator(n, out.support);
  out.g_dagger = -combine_columns(dict, out.x_star);
  return out;
}

SupportMetrics support_metrics(const FlipVector& recovered, const FlipVector& planted) {
  if (recovered.size() != planted.size())
    throw InvalidInput("recovered and planted supports have different lengths");
  std::size_t tp = 0, fp = 0, fn = 0, planted_count = 0;
  for (std::size_t i = 0; i < planted.size(); ++i) {
    const bool r = recovered[i] != 0;
    const bool p = planted[i] != 0;
    planted_count += p;
    tp += r && p;
    fp += r && !p;
    fn += !r && p;
  }
  const double tpr =
      planted_count == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(planted_count);
  return {tpr, fp, fn};
}

std::vector<Comparison> apply_flips(std::span<const Comparison> data, const FlipVector& flips) {
  if (flips.size() != data.size())
    throw InvalidInput("flip vector has length " + std::to_string(flips.size()) +
                       ", dataset has " + std::to_string(data.size()));
  std::vector<Comparison> out(data.begin(), data.end());
  for (std::size_t i = 0; i < flips.size(); ++i) {
    if (flips[i] != 0 && flips[i] != 1) throw InvalidInput("flip entries must be 0 or 1", i);
    if (flips[i]) out[i].label = -out[i].label;
  }
  return out;
}

DpoPlantedAttack plant_retraining_attack(std::span<const Comparison> data, std::size_t k_star,
                                         std::uint64_t seed, const DpoModel& model_template,
                                         const TrainConfig& cfg) {
  if (k_star > data.size()) throw InvalidInput("k_star exceeds the dataset size");
  Rng rng(seed);
  const std::vector<std::size_t> support = rng.sample_without_replacement(data.size(), k_star);
  FlipVector x_star = indicator(data.size(), support);
  const std::vector<Comparison> poisoned = apply_flips(data, x_star);
  const TrainResult trained = train(poisoned, model_template, cfg);
  Vector g_dagger = target_gradient(trained.model, data);
  const double poisoned_norm = total_gradient(trained.model, poisoned).norm();
  return DpoPlantedAttack{support,
                          std::move(x_star),
                          trained.model,
                          std::move(g_dagger),
                          build_dictionary(data, model_template.beta),
                          poisoned_norm};
}

RetrainDiagnostics retrain_diagnostics(std::span<const Comparison> data, const FlipVector& flips,
                                       const FlipVector& planted, const DpoModel& model_template,
                                       const TrainConfig& cfg) {
  const TrainResult clean = train(data, model_template, cfg);
  const TrainResult attacked = train(apply_flips(data, flips), model_template, cfg);
  const TrainResult truth = train(apply_flips(data, planted), model_template, cfg);

  RetrainDiagnostics d;
  d.clean = summarize(clean);
  d.attacked = summarize(attacked);
  d.planted = summarize(truth);
  d.attack_vs_groundtruth_param = (attacked.model.theta - truth.model.theta).norm();
  d.attack_vs_groundtruth_policy = policy_l1_distance(attacked.model, truth.model, data);
  d.clean_vs_attacked_param = (clean.model.theta - attacked.model.theta).norm();
  d.clean_vs_attacked_policy = policy_l1_distance(clean.model, attacked.model, data);
  return d;
}

std::vector<GridAggregate> aggregate_records(std::span<const TrialRecord> records) {
  std::vector<GridAggregate> out;
  std::map<double, std::size_t> slot;
  std::vector<std::vector<const TrialRecord*>> groups;
  for (const TrialRecord& r : records) {
    auto [it, inserted] = slot.try_emplace(r.grid_value, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&r);
  }
  for (const auto& group : groups) {
    GridAggregate a;
    a.grid_value = group.front()->grid_value;
    a.trials = group.size();
    const double count = static_cast<double>(group.size());
    double tpr_sum = 0.0, res_sum = 0.0, sep_sum = 0.0;
    for (const TrialRecord* r : group) {
      tpr_sum += r->tpr;
      res_sum += r->residual;
      if (r->thresholds.m_all_sep && a.grid_value < *r->thresholds.m_all_sep) {
        ++a.below_sep_trials;
        sep_sum += r->tpr;
      }
    }
    a.mean_tpr = tpr_sum / count;
    a.mean_residual = res_sum / count;
    double tpr_var = 0.0, res_var = 0.0;
    for (const TrialRecord* r : group) {
      tpr_var += (r->tpr - a.mean_tpr) * (r->tpr - a.mean_tpr);
      res_var += (r->residual - a.mean_residual) * (r->residual - a.mean_residual);
    }
    a.std_tpr = std::sqrt(tpr_var / count);
    a.std_residual = std::sqrt(res_var / count);
    if (a.below_sep_trials > 0)
      a.mean_tpr_below_sep = sep_sum / static_cast<double>(a.below_sep_trials);
    out.push_back(a);
  }
  return out;
}

// Separation thresholds need exhaustive k-subset enumeration; only done at small scale.
static bool separation_affordable(std::size_t n, std::size_t k_star) {
  return n <= 20 && k_star <= 6;
}

Report run_m_sweep(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  if (cfg.kind != ExperimentKind::m_sweep) throw InvalidInput("config kind is not m_sweep");
  if (cfg.k_star < 1) throw InvalidInput("k_star must be at least 1");
  const std::vector<double> grid = cfg.m_grid.values();
  const Rng root(cfg.seed);

  std::optional<FlipDictionary> shared;
  if (cfg.dict_source.generator == DictionarySource::Generator::file)
    shared = make_dictionary(cfg.dict_source, cfg.seed);

  Report report;
  report.config = cfg;
  if (shared) report.dictionary = summarize(*shared);
  report.records.resize(cfg.trials * grid.size());

  parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
    const std::uint64_t trial_seed = root.split(t).seed();
    const FlipDictionary dict =
        shared ? *shared : make_dictionary(cfg.dict_source, splitmix64(trial_seed ^ 1));
    const PlantedAttack planted = plant_attack(dict, cfg.k_star, splitmix64(trial_seed ^ 2));

    Thresholds th;
    th.m0 = m0_bound(dict.max_norm(), 0.0, cfg.k_star);
    th.k_coh = max_guaranteed_sparsity(dict);
    if (separation_affordable(static_cast<std::size_t>(dict.size()), cfg.k_star))
      th.m_all_sep = separation_threshold(dict, planted.g_dagger, cfg.k_star);

    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      BalConfig bal{grid[gi], cfg.lll_delta, false};
      report.records[t * grid.size() + gi] =
          make_record(t, trial_seed, grid[gi], planted, bal_attack(dict, planted.g_dagger, bal),
                      cfg.record_timing, th);
    }
  });

  report.aggregates = aggregate_records(report.records);
  report.environment = environment(cfg.record_timing, start);
  return report;
}

Report run_k_sweep(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  if (cfg.kind != ExperimentKind::k_sweep) throw InvalidInput("config kind is not k_sweep");
  const Rng root(cfg.seed);
  const FlipDictionary dict = make_dictionary(cfg.dict_source, root.split(0).seed());
  const auto n = static_cast<std::size_t>(dict.size());
  for (std::size_t k : cfg.k_grid)
    if (k < 1 || k > n) throw InvalidInput("K grid value " + std::to_string(k) + " out of range");

  Report report;
  report.config = cfg;
  report.dictionary = summarize(dict);
  const std::size_t k_coh = report.dictionary->k_coh;
  const std::size_t total = cfg.k_grid.size() * cfg.trials;
  report.records.resize(total);

  parallel_for(total, cfg.threads, [&](std::size_t slot) {
    const std::size_t ki = slot / cfg.trials;
    const std::size_t t = slot % cfg.trials;
    const std::size_t k_star = cfg.k_grid[ki];
    const std::uint64_t trial_seed = root.split(1 + slot).seed();
    const PlantedAttack planted = plant_attack(dict, k_star, trial_seed);
    Thresholds th;
    th.m0 = m0_bound(dict.max_norm(), 0.0, k_star);
    th.k_coh = k_coh;
    const BmpConfig bmp{cfg.bmp_budget == 0 ? k_star + cfg.bmp_budget_slack : cfg.bmp_budget, cfg.bmp_eps};
    report.records[slot] =
        make_record(t, trial_seed, static_cast<double>(k_star), planted,
                    bmp_attack(dict, -planted.g_dagger, bmp), cfg.record_timing, th);
  });

  report.aggregates = aggregate_records(report.records);
  report.environment = environment(cfg.record_timing, start);
  return report;
}

}  // namespace flipforge

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <flipforge/error.hpp>
#include <flipforge/harness.hpp>
#include <flipforge/report.hpp>
#include <flipforge/rng.hpp>

using namespace flipforge;

namespace {

ExperimentConfig small_m_sweep() {
  ExperimentConfig c;
  c.kind = ExperimentKind::m_sweep;
  c.dict_source.d = 16;
  c.dict_source.n = 10;
  c.k_star = 3;
  c.trials = 6;
  c.seed = 42;
  c.m_grid = {0.05, 3.0, 4};
  return c;
}

ExperimentConfig small_k_sweep() {
  ExperimentConfig c;
  c.kind = ExperimentKind::k_sweep;
  c.dict_source.generator = DictionarySource::Generator::low_coherence;
  c.dict_source.d = 60;
  c.dict_source.n = 60;
  c.dict_source.target_mu = 0.5;
  c.trials = 5;
  c.seed = 9;
  c.k_grid = {1, 2, 4, 8};
  return c;
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
  CHECK(Rng(5).split(0).seed() != Rng(5).split(1).seed());
  CHECK(Rng(5).split(3).seed() == Rng(5).split(3).seed());
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  Rng c(1);
  const auto s = c.sample_without_replacement(10, 4);
  CHECK(s.size() == 4);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
  auto p = c.permutation(7);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < 7; ++i) CHECK(p[i] == i);
}

TEST_CASE("log grid endpoints and spacing") {
  const auto v = LogGrid{0.05, 3.0, 25}.values();
  REQUIRE(v.size() == 25);
  CHECK(v.front() == 0.05);
  CHECK(v.back() == 3.0);
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    CHECK(v[i] / v[i - 1] == doctest::Approx(v[i + 1] / v[i]).epsilon(1e-12));
  CHECK(LogGrid{2.0, 2.0, 1}.values() == std::vector<double>{2.0});
  CHECK_THROWS_AS(LogGrid({0.0, 1.0, 3}).values(), InvalidInput);
}

TEST_CASE("planted attack has zero residual") {
  const FlipDictionary dict = gaussian_dictionary(8, 12, 3);
  const PlantedAttack p = plant_attack(dict, 4, 17);
  CHECK(p.support.size() == 4);
  CHECK(std::is_sorted(p.support.begin(), p.support.end()));
  CHECK(attack_residual(dict, p.x_star, p.g_dagger) == 0.0);
  CHECK_THROWS_AS(plant_attack(dict, 13, 1), InvalidInput);
}

TEST_CASE("support metrics") {
  const SupportMetrics m = support_metrics({1, 1, 0, 0, 1}, {1, 0, 1, 0, 1});
  CHECK(m.tpr == doctest::Approx(2.0 / 3.0));
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(support_metrics({0, 0}, {0, 0}).tpr == 1.0);
  CHECK_THROWS_AS(support_metrics({1}, {1, 0}), InvalidInput);
}

TEST_CASE("applying flips twice restores the dataset") {
  const auto data = random_comparisons(9, 3, 4);
  const FlipVector x = {1, 0, 1, 1, 0, 0, 1, 0, 1};
  const auto once = apply_flips(data, x);
  const auto twice = apply_flips(once, x);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(once[i].label == (x[i] ? -data[i].label : data[i].label));
    CHECK(twice[i].label == data[i].label);
    CHECK(twice[i].delta_psi == data[i].delta_psi);
  }
  CHECK_THROWS_AS(apply_flips(data, FlipVector(3, 0)), InvalidInput);
}

TEST_CASE("DPO-level planted attack satisfies the gradient identity") {
  const auto data = random_comparisons(30, 6, 5);
  const DpoModel tmpl = DpoModel::at_reference(6, 1.0, 0.5);
  TrainConfig cfg;
  cfg.learning_rate = 1.0 / smoothness_bound(1.0, 0.5, data);
  cfg.grad_tol = 1e-11;
  cfg.max_steps = 1'000'000;
  const DpoPlantedAttack p = plant_retraining_attack(data, 5, 2, tmpl, cfg);
  CHECK(p.support.size() == 5);
  const Vector poisoned = total_gradient(p.target, apply_flips(data, p.x_star));
  CHECK((p.g_dagger + combine_columns(p.dictionary, p.x_star) - poisoned).norm() <= 1e-12);
  CHECK(poisoned.norm() == doctest::Approx(p.poisoned_grad_norm));
  CHECK(p.poisoned_grad_norm <= 1e-11);
}

TEST_CASE("retraining diagnostics order clean, attacked and planted models") {
  const auto data = random_comparisons(40, 8, 6);
  const DpoModel tmpl = DpoModel::at_reference(8, 1.0, 0.1);
  TrainConfig cfg;
  cfg.learning_rate = 1.0 / smoothness_bound(1.0, 0.1, data);
  cfg.grad_tol = 1e-10;
  cfg.max_steps = 1'000'000;
  Rng rng(3);
  FlipVector planted(40, 0);
  for (std::size_t i : rng.sample_without_replacement(40, 6)) planted[i] = 1;
  const RetrainDiagnostics d = retrain_diagnostics(data, planted, planted, tmpl, cfg);
  CHECK(d.clean.converged);
  CHECK(d.attacked.converged);
  CHECK(d.attack_vs_groundtruth_param == 0.0);
  CHECK(d.attack_vs_groundtruth_policy == 0.0);
  CHECK(d.clean_vs_attacked_policy > d.attack_vs_groundtruth_policy);
  CHECK(d.clean_vs_attacked_param > 0.0);
}

TEST_CASE("m-sweep is deterministic, thread-count independent and aggregates correctly") {
  const ExperimentConfig cfg = small_m_sweep();
  const Report a = run_m_sweep(cfg);
  const Report b = run_m_sweep(cfg);
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK(a.environment.wall_time == 0.0);

  ExperimentConfig threaded = cfg;
  threaded.threads = 3;
  Report c = run_m_sweep(threaded);
  c.config.threads = 1;
  CHECK(report_to_json(a) == report_to_json(c));

  REQUIRE(a.records.size() == cfg.trials * cfg.m_grid.count);
  REQUIRE(a.aggregates.size() == cfg.m_grid.count);
  std::map<double, std::vector<const TrialRecord*>> by_m;
  for (const TrialRecord& r : a.records) {
    CHECK(r.attack_result.wall_time == 0.0);
    CHECK(r.planted_support.size() == cfg.k_star);
    REQUIRE(r.thresholds.m_all_sep.has_value());
    by_m[r.grid_value].push_back(&r);
  }
  for (const GridAggregate& agg : a.aggregates) {
    const auto& rs = by_m.at(agg.grid_value);
    CHECK(agg.trials == rs.size());
    double sum = 0.0, sq = 0.0, below_sum = 0.0;
    std::size_t below = 0;
    for (const TrialRecord* r : rs) {
      sum += r->tpr;
      sq += r->tpr * r->tpr;
      if (agg.grid_value < *r->thresholds.m_all_sep) {
        ++below;
        below_sum += r->tpr;
      }
    }
    const double mean = sum / static_cast<double>(rs.size());
    CHECK(agg.mean_tpr == doctest::Approx(mean).epsilon(1e-12));
    CHECK(agg.std_tpr == doctest::Approx(std::sqrt(std::max(0.0, sq / rs.size() - mean * mean))).epsilon(1e-9));
    CHECK(agg.below_sep_trials == below);
    if (below > 0) CHECK(*agg.mean_tpr_below_sep == doctest::Approx(below_sum / below).epsilon(1e-12));
  }
  // Small penalties recover the planted support.
  CHECK(a.aggregates.front().mean_tpr == 1.0);
}

TEST_CASE("k-sweep shares one dictionary and reports it") {
  const ExperimentConfig cfg = small_k_sweep();
  const Report r = run_k_sweep(cfg);
  REQUIRE(r.dictionary.has_value());
  CHECK(r.dictionary->n == 60);
  REQUIRE(r.dictionary->coherence.has_value());
  CHECK(*r.dictionary->coherence <= 0.5);
  CHECK(r.records.size() == cfg.trials * cfg.k_grid.size());
  CHECK(r.aggregates.front().grid_value == 1.0);
  CHECK(r.aggregates.front().mean_tpr == 1.0);
  for (const TrialRecord& t : r.records) CHECK(t.attack_result.iterations <= static_cast<std::size_t>(t.grid_value));
  CHECK(report_to_json(r) == report_to_json(run_k_sweep(cfg)));
}

TEST_CASE("budgeted pursuit runs past K* until the tolerance is met") {
  ExperimentConfig cfg = small_k_sweep();
  cfg.use_budgeted_pursuit();
  const Report r = run_k_sweep(cfg);
  for (const TrialRecord& t : r.records) {
    const auto k = static_cast<std::size_t>(t.grid_value);
    CHECK(t.attack_result.iterations <= k + 5);
    CHECK((t.attack_result.residual <= 1e-3 || t.attack_result.iterations == k + 5));
  }
  CHECK(experiment_config_from_json(experiment_config_to_json(cfg)) == cfg);
}

TEST_CASE("timing is recorded only on request") {
  ExperimentConfig cfg = small_m_sweep();
  cfg.trials = 2;
  cfg.record_timing = true;
  const Report r = run_m_sweep(cfg);
  CHECK(r.environment.wall_time > 0.0);
}

TEST_CASE("config validation") {
  ExperimentConfig c = small_m_sweep();
  c.trials = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = small_k_sweep();
  c.k_grid.clear();
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = small_m_sweep();
  c.lll_delta = 1.0;
  CHECK_THROWS_AS(run_m_sweep(c), InvalidInput);
  CHECK(to_string(ExperimentKind::k_sweep) == "k_sweep");
  CHECK(experiment_kind_from_string("m_sweep") == ExperimentKind::m_sweep);
  CHECK_THROWS_AS(experiment_kind_from_string("nope"), InvalidInput);
}

TEST_CASE("report round-trips exactly") {
  Report r = run_m_sweep(small_m_sweep());
  r.diagnostics = RetrainDiagnostics{{{0.1, -0.2}, 3, 1e-9, true}, {{0.3, 0.4}, 5, 2e-9, true},
                                     {{0.3, 0.4}, 5, 2e-9, false}, 0.0, 0.0, 0.5, 0.25};
  const std::string text = report_to_json(r);
  const Report back = report_from_json(text);
  CHECK(back == r);
  CHECK(report_to_json(back) == text);

  const auto path = std::filesystem::temp_directory_path() / "flipforge_report_roundtrip.json";
  write_report(r, path);
  CHECK(read_report(path) == r);
  std::filesystem::remove(path);
}

TEST_CASE("report reader rejects unknown versions and damaged files") {
  const Report r = run_k_sweep(small_k_sweep());
  std::string text = report_to_json(r);

  std::string wrong = text;
  const auto at = wrong.find(kReportFormatVersion);
  wrong.replace(at, std::string(kReportFormatVersion).size(), "flipforge-report/99");
  CHECK_THROWS_AS(report_from_json(wrong), InvalidInput);

  const std::string truncated = text.substr(0, text.size() / 2);
  try {
    report_from_json(truncated);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() > 1);
    CHECK(e.byte_offset() <= truncated.size() + 1);
  }

  CHECK_THROWS_AS(report_from_json(R"({"format_version": "flipforge-report/1"})"), InvalidInput);
}

TEST_CASE("experiment config files") {
  const ExperimentConfig c = experiment_config_from_json(R"({
    "kind": "k_sweep",
    "dict_source": {"generator": "low_coherence", "d": 200, "n": 200, "target_mu": 0.2},
    "trials": 200,
    "seed": 7,
    "k_grid": {"lo": 1, "hi": 60}
  })");
  CHECK(c.kind == ExperimentKind::k_sweep);
  CHECK(c.k_grid.size() == 60);
  CHECK(c.k_grid.back() == 60);
  CHECK(c.dict_source.generator == DictionarySource::Generator::low_coherence);
  CHECK(c.lll_delta == kDefaultLllDelta);
  CHECK(experiment_config_from_json(experiment_config_to_json(c)) == c);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"kind": "m_sweep", "trials": "many"})"), InvalidInput);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"kind": "k_sweep"})"), InvalidInput);
  CHECK_THROWS_AS(experiment_config_from_json("{\"kind\": "), ParseError);
}

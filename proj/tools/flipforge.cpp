// flipforge: command-line front end for the flip-attack library.
//
// Exit codes: 0 success, 2 invalid input, 3 refused/infeasible, 4 numerical
// failure, 1 anything unexpected.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <flipforge/attacks.hpp>
#include <flipforge/certificates.hpp>
#include <flipforge/dictionary.hpp>
#include <flipforge/dpo.hpp>
#include <flipforge/error.hpp>
#include <flipforge/harness.hpp>
#include <flipforge/io.hpp>
#include <flipforge/report.hpp>
#include <flipforge/rng.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace flipforge;

namespace {

void write_json(const std::string& path, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path);
  out << text;
  if (!out) throw InvalidInput("write failed for " + path);
}

json attack_json(const std::string& algorithm, const AttackResult& r, const json& settings) {
  json j;
  j["algorithm"] = algorithm;
  j["settings"] = settings;
  j["flip_count"] = r.flip_count;
  j["residual"] = r.residual;
  j["flips"] = r.flips;
  if (!r.raw_integers.empty()) j["raw_integers"] = r.raw_integers;
  j["iterations"] = r.iterations;
  j["wall_time"] = r.wall_time;
  return j;
}

json certificate_json(const Certificate& c) {
  return json{{"kind", std::string(to_string(c.kind))}, {"fired", c.fired}, {"lhs", c.lhs},
              {"rhs", c.rhs},  {"budget_k", c.budget_k},  {"tolerance_eps", c.tolerance_eps}};
}

// ---- gen-dict --------------------------------------------------------------

struct GenDictArgs {
  std::size_t d = 64;
  std::size_t n = 20;
  std::uint64_t seed = 0;
  std::optional<double> target_mu;
  std::size_t max_resamples = 1'000'000;
  bool raw = false;
  std::string out;
  std::size_t plant = 0;
  std::string target_out;
  std::string flips_out;
};

int run_gen_dict(const GenDictArgs& a) {
  DictionaryMeta meta;
  meta.seed = a.seed;
  std::optional<FlipDictionary> dict;
  if (a.target_mu) {
    LowCoherenceResult r = low_coherence_dictionary(a.d, a.n, a.seed, *a.target_mu, a.max_resamples);
    meta.source = "low_coherence";
    if (!r.reached_target)
      std::cerr << "warning: target coherence " << *a.target_mu << " not reached after "
                << r.resamples << " resamples (achieved " << r.achieved_mu.value_or(0.0) << ")\n";
    dict.emplace(std::move(r.dictionary));
  } else {
    meta.source = "gaussian";
    dict.emplace(gaussian_dictionary(a.d, a.n, a.seed, !a.raw));
  }
  write_dictionary(a.out, *dict, meta);

  json summary{{"dictionary", a.out}, {"d", a.d}, {"n", a.n}, {"seed", a.seed}};
  if (a.n >= 2) {
    const double mu = dict->coherence();
    summary["coherence"] = mu;
    summary["k_coh"] = max_guaranteed_sparsity(*dict);
  }
  if (a.plant > 0) {
    if (a.target_out.empty()) throw InvalidInput("--plant needs --target-out");
    const PlantedAttack p = plant_attack(*dict, a.plant, Rng(a.seed).split(1).seed());
    write_vector(a.target_out, p.g_dagger);
    if (!a.flips_out.empty()) write_flips(a.flips_out, p.x_star);
    summary["planted_support"] = p.support;
    summary["target"] = a.target_out;
  }
  write_json("-", summary);
  return 0;
}

// ---- build-dict ------------------------------------------------------------

struct BuildDictArgs {
  std::string dataset;
  double beta = 1.0;
  std::string out;
};

int run_build_dict(const BuildDictArgs& a) {
  const auto data = read_comparisons(a.dataset);
  for (std::size_t i : unnormalized_comparisons(data))
    std::cerr << "warning: comparison " << i << " has ||delta_psi|| > 2\n";
  const FlipDictionary dict = build_dictionary(data, a.beta);
  DictionaryMeta meta;
  meta.source = "dataset";
  write_dictionary(a.out, dict, meta);
  json summary{{"dictionary", a.out}, {"d", dict.dim()}, {"n", dict.size()},
               {"min_norm", dict.min_norm()}, {"max_norm", dict.max_norm()}};
  if (dict.size() >= 2) summary["coherence"] = dict.coherence();
  write_json("-", summary);
  return 0;
}

// ---- attack ----------------------------------------------------------------

struct AttackArgs {
  std::string dict;
  std::string target;
  std::string out;
  std::string flips_out;
  double penalty_m = 1.0;
  double delta = kDefaultLllDelta;
  std::size_t budget = 1;
  double eps = 0.0;
};

int finish_attack(const AttackArgs& a, const json& j, const AttackResult& r) {
  write_json(a.out, j);
  if (!a.flips_out.empty()) write_flips(a.flips_out, r.flips);
  return 0;
}

int run_attack_bal(const AttackArgs& a) {
  const FlipDictionary dict = read_dictionary(a.dict);
  const Vector g = read_vector(a.target);
  const AttackResult r = bal_attack(dict, g, {a.penalty_m, a.delta, false});
  json settings{{"penalty_m", a.penalty_m}, {"lll_delta", a.delta}};
  return finish_attack(a, attack_json("bal", r, settings), r);
}

int run_attack_bmp(const AttackArgs& a) {
  const FlipDictionary dict = read_dictionary(a.dict);
  const Vector g = read_vector(a.target);
  const AttackResult r = bmp_attack(dict, -g, {a.budget, a.eps});
  json settings{{"budget", a.budget}, {"eps", a.eps}};
  return finish_attack(a, attack_json("bmp", r, settings), r);
}

// ---- certify ---------------------------------------------------------------

struct CertifyArgs {
  std::string dict;
  std::string target;
  std::size_t budget = 1;
  double eps = 0.0;
  bool oracle = false;
  std::size_t max_n = kDefaultOracleMaxN;
  std::string out;
};

int run_certify(const CertifyArgs& a) {
  const FlipDictionary dict = read_dictionary(a.dict);
  const Vector g = read_vector(a.target);
  const double lb = flip_lower_bound(g.norm(), dict.beta(), a.eps);
  json j;
  j["budget_k"] = a.budget;
  j["tolerance_eps"] = a.eps;
  j["g_norm"] = g.norm();
  j["norm_lower_bound"] = {{"kind", std::string(to_string(CertificateKind::norm_lower_bound))},
                           {"min_flips", lb},
                           {"fired", static_cast<double>(a.budget) < lb}};
  j["spectral"] = certificate_json(spectral_certificate(dict, g, a.budget, a.eps));
  j["coherence"] = certificate_json(coherence_certificate(dict, g, a.budget, a.eps));
  if (a.oracle) {
    // Refused (exit 3) when n exceeds --max-n.
    const OracleResult o = brute_force_min_flip(dict, g, a.eps, a.max_n);
    j["oracle"] = {{"feasible", o.feasible},     {"k_star", o.k_star},
                   {"residual", o.residual},     {"flips", o.flips},
                   {"subsets_checked", o.subsets_checked},
                   {"feasible_within_budget", o.feasible && o.k_star <= a.budget}};
  }
  write_json(a.out, j);
  return 0;
}

// ---- sweep -----------------------------------------------------------------

struct SweepArgs {
  std::string which;
  std::string config;
  std::string out;
  std::optional<std::size_t> threads;
  bool budgeted = false;
};

int run_sweep(const SweepArgs& a) {
  ExperimentConfig cfg = read_experiment_config(a.config);
  if (a.threads) cfg.threads = *a.threads;
  if (a.budgeted) cfg.use_budgeted_pursuit();
  const ExperimentKind expected = a.which == "m" ? ExperimentKind::m_sweep : ExperimentKind::k_sweep;
  if (cfg.kind != expected)
    throw InvalidInput("config kind is '" + to_string(cfg.kind) + "' but 'sweep " + a.which +
                       "' was requested");
  const Report report = a.which == "m" ? run_m_sweep(cfg) : run_k_sweep(cfg);
  write_report(report, a.out);
  json summary = json::array();
  for (const GridAggregate& g : report.aggregates)
    summary.push_back({{"grid_value", g.grid_value}, {"mean_tpr", g.mean_tpr},
                       {"mean_residual", g.mean_residual}});
  write_json("-", summary);
  return 0;
}

// ---- diagnose --------------------------------------------------------------

struct DiagnoseArgs {
  std::string dataset;
  std::string flips;
  std::string planted;
  double lr = 0.0;  // 0: 1 / smoothness bound
  std::size_t steps = 100000;
  double beta = 1.0;
  double lambda = 1.0;
  double grad_tol = 1e-8;
  std::string out;
};

int run_diagnose(const DiagnoseArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const auto data = read_comparisons(a.dataset);
  const FlipVector flips = read_flips(a.flips);
  const FlipVector planted = read_flips(a.planted);
  const DpoModel tmpl = DpoModel::at_reference(data.front().delta_psi.size(), a.beta, a.lambda);
  TrainConfig cfg;
  cfg.learning_rate = a.lr > 0.0 ? a.lr : 1.0 / smoothness_bound(a.beta, a.lambda, data);
  cfg.max_steps = a.steps;
  cfg.grad_tol = a.grad_tol;
  const RetrainDiagnostics d = retrain_diagnostics(data, flips, planted, tmpl, cfg);

  Report report;
  report.config.kind = ExperimentKind::diagnose;
  report.config.trials = 1;
  report.diagnostics = d;
  report.environment = {library_version(), std::string(Rng::kName),
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
  write_report(report, a.out);
  write_json("-", json{{"clean_vs_attacked_policy", d.clean_vs_attacked_policy},
                       {"attack_vs_groundtruth_policy", d.attack_vs_groundtruth_policy},
                       {"clean_vs_attacked_param", d.clean_vs_attacked_param},
                       {"attack_vs_groundtruth_param", d.attack_vs_groundtruth_param},
                       {"converged", d.clean.converged && d.attacked.converged && d.planted.converged}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flipforge: label-flip attacks, certificates and experiments for log-linear DPO"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);

  GenDictArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-dict", "Generate a synthetic flip dictionary");
  gen_cmd->add_option("--d", gen.d, "Feature dimension")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n", gen.n, "Number of columns")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--target-mu", gen.target_mu, "Decorrelate until coherence <= target");
  gen_cmd->add_option("--max-resamples", gen.max_resamples, "Resampling budget for --target-mu");
  gen_cmd->add_flag("--raw", gen.raw, "Keep Gaussian column norms (no unit normalization)");
  gen_cmd->add_option("--out", gen.out, "Output CSV path")->required();
  gen_cmd->add_option("--plant", gen.plant, "Also plant a K-flip attack of this size");
  gen_cmd->add_option("--target-out", gen.target_out, "Where to write the planted target gradient");
  gen_cmd->add_option("--flips-out", gen.flips_out, "Where to write the planted flips");

  BuildDictArgs build;
  auto* build_cmd = app.add_subcommand("build-dict", "Build a dictionary from a comparison dataset");
  build_cmd->add_option("--dataset", build.dataset, "Comparison CSV (label, features...)")->required();
  build_cmd->add_option("--beta", build.beta, "DPO temperature");
  build_cmd->add_option("--out", build.out, "Output CSV path")->required();

  AttackArgs attack;
  auto* attack_cmd = app.add_subcommand("attack", "Run an attack against a target gradient");
  attack_cmd->require_subcommand(1);
  auto add_common = [&attack](CLI::App* cmd) {
    cmd->add_option("--dict", attack.dict, "Dictionary CSV")->required();
    cmd->add_option("--target", attack.target, "Target gradient g (one value per line)")->required();
    cmd->add_option("--out", attack.out, "Result JSON path ('-' for stdout)");
    cmd->add_option("--flips-out", attack.flips_out, "Also write the flips as CSV");
  };
  auto* bal_cmd = attack_cmd->add_subcommand("bal", "Binary-aware lattice attack");
  add_common(bal_cmd);
  bal_cmd->add_option("--penalty-m", attack.penalty_m, "Penalty M on the coefficient block");
  bal_cmd->add_option("--delta", attack.delta, "LLL parameter");
  auto* bmp_cmd = attack_cmd->add_subcommand("bmp", "Binary matching pursuit attack");
  add_common(bmp_cmd);
  bmp_cmd->add_option("--budget", attack.budget, "Maximum number of flips")->check(CLI::PositiveNumber);
  bmp_cmd->add_option("--eps", attack.eps, "Residual tolerance");

  CertifyArgs cert;
  auto* cert_cmd = app.add_subcommand("certify", "Evaluate impossibility certificates");
  cert_cmd->add_option("--dict", cert.dict, "Dictionary CSV")->required();
  cert_cmd->add_option("--target", cert.target, "Target gradient g")->required();
  cert_cmd->add_option("--budget", cert.budget, "Flip budget K")->check(CLI::PositiveNumber);
  cert_cmd->add_option("--eps", cert.eps, "Residual tolerance");
  cert_cmd->add_flag("--oracle", cert.oracle, "Also run the exhaustive oracle");
  cert_cmd->add_option("--max-n", cert.max_n, "Largest n the oracle will enumerate");
  cert_cmd->add_option("--out", cert.out, "Result JSON path (default stdout)");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an M-sweep or K-sweep experiment");
  sweep_cmd->add_option("which", sweep.which, "m or k")->required()->check(CLI::IsMember({"m", "k"}));
  sweep_cmd->add_option("--config", sweep.config, "Experiment config JSON")->required();
  sweep_cmd->add_option("--out", sweep.out, "Report JSON path")->required();
  sweep_cmd->add_option("--threads", sweep.threads, "Override the config's thread count");
  sweep_cmd->add_flag("--budgeted", sweep.budgeted, "Pursuit budget K*+5 with eps 1e-3 (k sweeps)");

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Retrain on clean, attacked and planted labels");
  diag_cmd->add_option("--dataset", diag.dataset, "Comparison CSV")->required();
  diag_cmd->add_option("--flips", diag.flips, "Attack flips CSV")->required();
  diag_cmd->add_option("--planted", diag.planted, "Ground-truth flips CSV")->required();
  diag_cmd->add_option("--lr", diag.lr, "Learning rate (default 1/L)");
  diag_cmd->add_option("--steps", diag.steps, "Maximum gradient steps");
  diag_cmd->add_option("--beta", diag.beta, "DPO temperature");
  diag_cmd->add_option("--lambda", diag.lambda, "l2 regularization weight");
  diag_cmd->add_option("--grad-tol", diag.grad_tol, "Stop when ||grad|| falls below this");
  diag_cmd->add_option("--out", diag.out, "Report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::invalid_input);
  }

  try {
    if (*gen_cmd) return run_gen_dict(gen);
    if (*build_cmd) return run_build_dict(build);
    if (*bal_cmd) return run_attack_bal(attack);
    if (*bmp_cmd) return run_attack_bmp(attack);
    if (*cert_cmd) return run_certify(cert);
    if (*sweep_cmd) return run_sweep(sweep);
    if (*diag_cmd) return run_diagnose(diag);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << " (line " << e.line() << ", byte " << e.byte_offset()
              << ")\n";
    return static_cast<int>(e.kind());
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what();
    if (e.index()) std::cerr << " (index " << *e.index() << ")";
    std::cerr << "\n";
    return static_cast<int>(e.kind());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

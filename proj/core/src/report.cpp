#include "flipforge/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flipforge/error.hpp"

namespace flipforge {

namespace {

using json = nlohmann::ordered_json;

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string generator_name(DictionarySource::Generator g) {
  switch (g) {
    case DictionarySource::Generator::file: return "file";
    case DictionarySource::Generator::gaussian: return "gaussian";
    case DictionarySource::Generator::low_coherence: return "low_coherence";
  }
  return "unknown";
}

DictionarySource::Generator generator_from_name(const std::string& s) {
  if (s == "file") return DictionarySource::Generator::file;
  if (s == "gaussian") return DictionarySource::Generator::gaussian;
  if (s == "low_coherence") return DictionarySource::Generator::low_coherence;
  throw InvalidInput("unknown dictionary generator '" + s + "'");
}

json to_json(const DictionarySource& s) {
  json j;
  j["generator"] = generator_name(s.generator);
  if (s.generator == DictionarySource::Generator::file) j["path"] = s.path;
  j["d"] = s.d;
  j["n"] = s.n;
  j["unit_norm"] = s.unit_norm;
  j["target_mu"] = s.target_mu;
  j["max_resamples"] = s.max_resamples;
  return j;
}

DictionarySource source_from_json(const json& j) {
  DictionarySource s;
  s.generator = generator_from_name(j.value("generator", std::string("gaussian")));
  s.path = j.value("path", std::string{});
  s.d = j.value("d", s.d);
  s.n = j.value("n", s.n);
  s.unit_norm = j.value("unit_norm", s.unit_norm);
  s.target_mu = j.value("target_mu", s.target_mu);
  s.max_resamples = j.value("max_resamples", s.max_resamples);
  if (s.generator == DictionarySource::Generator::file && s.path.empty())
    throw InvalidInput("file dictionary source needs a path");
  return s;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["dict_source"] = to_json(c.dict_source);
  j["k_star"] = c.k_star;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["m_grid"] = {{"lo", c.m_grid.lo}, {"hi", c.m_grid.hi}, {"count", c.m_grid.count}};
  j["k_grid"] = c.k_grid;
  j["bmp_budget"] = c.bmp_budget;
  j["bmp_budget_slack"] = c.bmp_budget_slack;
  j["bmp_eps"] = c.bmp_eps;
  j["lll_delta"] = c.lll_delta;
  j["record_timing"] = c.record_timing;
  j["threads"] = c.threads;
  return j;
}

// Missing keys take their defaults so hand-written config files stay short.
ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("dict_source")) c.dict_source = source_from_json(j.at("dict_source"));
  c.k_star = j.value("k_star", c.k_star);
  c.trials = j.value("trials", c.trials);
  c.seed = j.value("seed", c.seed);
  if (j.contains("m_grid")) {
    const json& g = j.at("m_grid");
    c.m_grid.lo = g.value("lo", c.m_grid.lo);
    c.m_grid.hi = g.value("hi", c.m_grid.hi);
    c.m_grid.count = g.value("count", c.m_grid.count);
  }
  if (j.contains("k_grid")) {
    const json& g = j.at("k_grid");
    if (g.is_object()) {  // {"lo": 1, "hi": 60} shorthand for an inclusive range
      for (std::size_t k = g.at("lo").get<std::size_t>(); k <= g.at("hi").get<std::size_t>(); ++k)
        c.k_grid.push_back(k);
    } else {
      c.k_grid = g.get<std::vector<std::size_t>>();
    }
  }
  c.bmp_budget = j.value("bmp_budget", c.bmp_budget);
  c.bmp_budget_slack = j.value("bmp_budget_slack", c.bmp_budget_slack);
  c.bmp_eps = j.value("bmp_eps", c.bmp_eps);
  c.lll_delta = j.value("lll_delta", c.lll_delta);
  c.record_timing = j.value("record_timing", c.record_timing);
  c.threads = j.value("threads", c.threads);
  return c;
}

json to_json(const AttackResult& r) {
  json j;
  j["flips"] = r.flips;
  j["residual"] = r.residual;
  j["flip_count"] = r.flip_count;
  j["raw_integers"] = r.raw_integers;
  j["iterations"] = r.iterations;
  j["wall_time"] = r.wall_time;
  return j;
}

AttackResult attack_from_json(const json& j) {
  AttackResult r;
  r.flips = j.at("flips").get<FlipVector>();
  r.residual = j.at("residual").get<double>();
  r.flip_count = j.at("flip_count").get<std::size_t>();
  r.raw_integers = j.at("raw_integers").get<std::vector<std::int64_t>>();
  r.iterations = j.at("iterations").get<std::size_t>();
  r.wall_time = j.at("wall_time").get<double>();
  return r;
}

json to_json(const TrialRecord& r) {
  json j;
  j["trial_index"] = r.trial_index;
  j["trial_seed"] = r.trial_seed;
  j["grid_value"] = r.grid_value;
  j["planted_support"] = r.planted_support;
  j["attack_result"] = to_json(r.attack_result);
  j["tpr"] = r.tpr;
  j["fp_count"] = r.fp_count;
  j["fn_count"] = r.fn_count;
  j["residual"] = r.residual;
  json th;
  th["m0"] = r.thresholds.m0;
  put_optional(th, "m_all_sep", r.thresholds.m_all_sep);
  th["k_coh"] = r.thresholds.k_coh;
  j["thresholds"] = th;
  return j;
}

TrialRecord record_from_json(const json& j) {
  TrialRecord r;
  r.trial_index = j.at("trial_index").get<std::size_t>();
  r.trial_seed = j.at("trial_seed").get<std::uint64_t>();
  r.grid_value = j.at("grid_value").get<double>();
  r.planted_support = j.at("planted_support").get<std::vector<std::size_t>>();
  r.attack_result = attack_from_json(j.at("attack_result"));
  r.tpr = j.at("tpr").get<double>();
  r.fp_count = j.at("fp_count").get<std::size_t>();
  r.fn_count = j.at("fn_count").get<std::size_t>();
  r.residual = j.at("residual").get<double>();
  const json& th = j.at("thresholds");
  r.thresholds.m0 = th.at("m0").get<double>();
  r.thresholds.m_all_sep = get_optional<double>(th, "m_all_sep");
  r.thresholds.k_coh = th.at("k_coh").get<std::size_t>();
  return r;
}

json to_json(const GridAggregate& a) {
  json j;
  j["grid_value"] = a.grid_value;
  j["trials"] = a.trials;
  j["mean_tpr"] = a.mean_tpr;
  j["std_tpr"] = a.std_tpr;
  j["mean_residual"] = a.mean_residual;
  j["std_residual"] = a.std_residual;
  j["below_sep_trials"] = a.below_sep_trials;
  put_optional(j, "mean_tpr_below_sep", a.mean_tpr_below_sep);
  return j;
}

GridAggregate aggregate_from_json(const json& j) {
  GridAggregate a;
  a.grid_value = j.at("grid_value").get<double>();
  a.trials = j.at("trials").get<std::size_t>();
  a.mean_tpr = j.at("mean_tpr").get<double>();
  a.std_tpr = j.at("std_tpr").get<double>();
  a.mean_residual = j.at("mean_residual").get<double>();
  a.std_residual = j.at("std_residual").get<double>();
  a.below_sep_trials = j.at("below_sep_trials").get<std::size_t>();
  a.mean_tpr_below_sep = get_optional<double>(j, "mean_tpr_below_sep");
  return a;
}

json to_json(const ModelSummary& m) {
  return json{{"theta", m.theta},
              {"steps", m.steps},
              {"final_grad_norm", m.final_grad_norm},
              {"converged", m.converged}};
}

ModelSummary model_from_json(const json& j) {
  return ModelSummary{j.at("theta").get<std::vector<double>>(), j.at("steps").get<std::size_t>(),
                      j.at("final_grad_norm").get<double>(), j.at("converged").get<bool>()};
}

json to_json(const RetrainDiagnostics& d) {
  json j;
  j["clean"] = to_json(d.clean);
  j["attacked"] = to_json(d.attacked);
  j["planted"] = to_json(d.planted);
  j["attack_vs_groundtruth"] = {{"param_distance", d.attack_vs_groundtruth_param},
                                {"policy_l1", d.attack_vs_groundtruth_policy}};
  j["clean_vs_attacked"] = {{"param_distance", d.clean_vs_attacked_param},
                            {"policy_l1", d.clean_vs_attacked_policy}};
  return j;
}

RetrainDiagnostics diagnostics_from_json(const json& j) {
  RetrainDiagnostics d;
  d.clean = model_from_json(j.at("clean"));
  d.attacked = model_from_json(j.at("attacked"));
  d.planted = model_from_json(j.at("planted"));
  d.attack_vs_groundtruth_param = j.at("attack_vs_groundtruth").at("param_distance").get<double>();
  d.attack_vs_groundtruth_policy = j.at("attack_vs_groundtruth").at("policy_l1").get<double>();
  d.clean_vs_attacked_param = j.at("clean_vs_attacked").at("param_distance").get<double>();
  d.clean_vs_attacked_policy = j.at("clean_vs_attacked").at("policy_l1").get<double>();
  return d;
}

json to_json(const DictionarySummary& s) {
  json j;
  j["d"] = s.d;
  j["n"] = s.n;
  j["min_norm"] = s.min_norm;
  j["max_norm"] = s.max_norm;
  put_optional(j, "coherence", s.coherence);
  j["k_coh"] = s.k_coh;
  return j;
}

DictionarySummary summary_from_json(const json& j) {
  DictionarySummary s;
  s.d = j.at("d").get<std::size_t>();
  s.n = j.at("n").get<std::size_t>();
  s.min_norm = j.at("min_norm").get<double>();
  s.max_norm = j.at("max_norm").get<double>();
  s.coherence = get_optional<double>(j, "coherence");
  s.k_coh = j.at("k_coh").get<std::size_t>();
  return s;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
  return 1 + static_cast<std::size_t>(std::count(text.begin(), end, '\n'));
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what(), line_of(text, e.byte), e.byte);
  }
}

}  // namespace

std::string report_to_json(const Report& report) {
  json j;
  j["format_version"] = report.format_version;
  j["config"] = to_json(report.config);
  j["dictionary"] = report.dictionary ? to_json(*report.dictionary) : json(nullptr);
  json records = json::array();
  for (const TrialRecord& r : report.records) records.push_back(to_json(r));
  j["records"] = std::move(records);
  json aggregates = json::array();
  for (const GridAggregate& a : report.aggregates) aggregates.push_back(to_json(a));
  j["aggregates"] = std::move(aggregates);
  j["diagnostics"] = report.diagnostics ? to_json(*report.diagnostics) : json(nullptr);
  j["environment"] = {{"version", report.environment.version},
                      {"prng", report.environment.prng},
                      {"wall_time", report.environment.wall_time}};
  return j.dump(1) + "\n";
}

Report report_from_json(const std::string& text) {
  const json j = parse(text, "report");
  try {
    Report r;
    r.format_version = j.at("format_version").get<std::string>();
    if (r.format_version != kReportFormatVersion)
      throw InvalidInput("unsupported report format_version '" + r.format_version +
                         "' (expected '" + kReportFormatVersion + "')");
    r.config = config_from_json(j.at("config"));
    if (!j.at("dictionary").is_null()) r.dictionary = summary_from_json(j.at("dictionary"));
    for (const json& rec : j.at("records")) r.records.push_back(record_from_json(rec));
    for (const json& agg : j.at("aggregates")) r.aggregates.push_back(aggregate_from_json(agg));
    if (!j.at("diagnostics").is_null()) r.diagnostics = diagnostics_from_json(j.at("diagnostics"));
    const json& env = j.at("environment");
    r.environment.version = env.at("version").get<std::string>();
    r.environment.prng = env.at("prng").get<std::string>();
    r.environment.wall_time = env.at("wall_time").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("report does not match the schema: ") + e.what());
  }
}

void write_report(const Report& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << report_to_json(report);
  if (!out) throw InvalidInput("write failed for " + path.string());
}

Report read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const json j = parse(text, "experiment config");
  try {
    ExperimentConfig c = config_from_json(j);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("experiment config does not match the schema: ") + e.what());
  }
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  return to_json(cfg).dump(2) + "\n";
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return experiment_config_from_json(ss.str());
}

}  // namespace flipforge

// hyperdisc: simulate, identify, estimate and run Monte Carlo studies for
// finite-horizon logit choice models with present-biased discounting.

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "hyperdisc/config_io.hpp"

namespace fs = std::filesystem;
using namespace hyperdisc;

namespace {

enum ExitCode : int { kOk = 0, kIo = 1, kValidation = 2, kAssumption = 3, kNonConvergence = 4 };

constexpr std::uint64_t kDefaultSeed = 20240101;

struct Options {
  std::string model, panel, config, out, manifest, pairs, macro, anchor, initial_dist;
  std::string mode = "right-inverse";
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  int agents = 0;
  int jobs = default_jobs();
  double rank_tol = kDefaultRankTol;
};

/// Collects what the manifest records and writes it once the command ends.
class Run {
 public:
  explicit Run(std::string subcommand)
      : subcommand_(std::move(subcommand)), wall_start_(std::chrono::system_clock::now()),
        start_(std::chrono::steady_clock::now()) {}

  json config = json::object();
  json inputs = json::object();
  json outputs = json::object();
  std::optional<std::uint64_t> seed;
  std::string manifest_path;  // empty: stderr

  void finish(int exit_code, const std::string& error) const {
    json m;
    m["tool"] = "hyperdisc";
    m["version"] = kVersion;
    m["subcommand"] = subcommand_;
    m["config"] = config;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["seed"] = seed ? json(*seed) : json(nullptr);
    m["started_at"] = iso_time(wall_start_);
    m["duration_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["exit_code"] = exit_code;
    if (!error.empty()) m["error"] = error;
    const std::string text = m.dump(2) + "\n";
    if (manifest_path.empty()) {
      std::cerr << text;
      return;
    }
    try {
      write_text_file(manifest_path, text);
    } catch (const std::exception& e) {
      std::cerr << "hyperdisc: could not write manifest: " << e.what() << "\n";
    }
  }

 private:
  static std::string iso_time(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
  }

  std::string subcommand_;
  std::chrono::system_clock::time_point wall_start_;
  std::chrono::steady_clock::time_point start_;
};

std::uint64_t parse_seed_text(const std::string& text, const std::string& source) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw InvalidInput(source + " must be a non-negative 64-bit integer, got '" + text + "'");
  return v;
}

/// --seed, then HYPERDISC_SEED, then the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("HYPERDISC_SEED")) return parse_seed_text(env, "HYPERDISC_SEED");
  return fallback;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

json load_json(const std::string& path) { return parse_json_text(read_text_file(path), path); }

SolveMode parse_mode(const std::string& s) {
  if (s == "right-inverse") return SolveMode::RightInverse;
  if (s == "constrained-ls") return SolveMode::ConstrainedLs;
  throw InvalidInput("--mode must be right-inverse or constrained-ls");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(item);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw InvalidInput(what + ": '" + s + "' is not a number");
  }
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw InvalidInput(what + ": '" + s + "' is not an integer");
  return v;
}

UtilityAnchor parse_anchor(const std::string& s) {
  const auto parts = split_commas(s);
  if (parts.size() != 3) throw InvalidInput("--anchor expects action,state,value");
  return {parse_int(parts[0], "--anchor action"), parse_int(parts[1], "--anchor state"),
          parse_double(parts[2], "--anchor value")};
}

Vec parse_distribution(const std::string& s, int num_states) {
  if (s.empty()) return uniform_distribution(num_states);
  const auto parts = split_commas(s);
  Vec d(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i)
    d(static_cast<Eigen::Index>(i)) = parse_double(parts[i], "--initial-dist");
  if (d.size() != num_states) throw InvalidInput("--initial-dist needs one entry per state");
  return d;
}

std::string default_manifest(const Options& o) { return o.out.empty() ? "" : o.out + ".manifest.json"; }

// ---------------------------------------------------------------------------

int cmd_design(const Options& o, Run& run) {
  McConfig cfg = o.config.empty() ? McConfig{} : mc_config_from_json(load_json(o.config));
  if (!o.config.empty()) run.inputs["config"] = o.config;
  cfg.base_seed = resolve_seed(o.seed, cfg.base_seed);
  run.seed = cfg.base_seed;
  run.config = mc_config_to_json(cfg);
  const ModelSpec m = design_model(cfg, 0);
  emit(o.out, model_to_json(m).dump(2) + "\n");
  if (!o.out.empty()) run.outputs["model"] = o.out;
  return kOk;
}

int cmd_simulate(const Options& o, Run& run) {
  run.inputs["model"] = o.model;
  const ModelSpec m = load_model(o.model);
  const Vec init = parse_distribution(o.initial_dist, m.num_states);
  const std::uint64_t seed = resolve_seed(o.seed, kDefaultSeed);
  run.seed = seed;
  run.config = {{"agents", o.agents}, {"initial_dist", to_json_vector(init)}, {"jobs", o.jobs}};
  const ValueSolution sol = solve_backward(m);
  const PanelData panel = simulate_panel(m, sol, o.agents, init, seed, o.jobs);
  emit(o.out, panel_to_csv(panel));
  if (!o.out.empty()) run.outputs["panel"] = o.out;
  return kOk;
}

int cmd_identify(const Options& o, Run& run) {
  IdentifyOptions opt;
  opt.mode = parse_mode(o.mode);
  opt.rank_tol = o.rank_tol;
  if (!o.anchor.empty()) opt.anchor = parse_anchor(o.anchor);
  if (!o.macro.empty()) {
    run.inputs["macro"] = o.macro;
    opt.macro_H = macro_matrix_from_json(load_json(o.macro));
  }
  run.config = {{"mode", o.mode}, {"rank_tol", o.rank_tol}, {"anchor", o.anchor}};

  std::optional<ModelSpec> model;
  if (!o.model.empty()) {
    run.inputs["model"] = o.model;
    model = load_model(o.model);
  }
  std::optional<PairDocument> pair_doc;
  if (!o.pairs.empty()) {
    run.inputs["pairs"] = o.pairs;
    pair_doc = pair_document_from_json(load_json(o.pairs));
  }

  json report;
  if (o.panel.empty()) {
    if (!model) throw InvalidInput("identify needs --model (exact mode) or --panel (data mode)");
    const auto pairs = pair_doc ? pair_doc->pairs : model->equality_pairs;
    if (pair_doc && (pair_doc->num_states != model->num_states || pair_doc->num_actions != model->num_actions))
      throw InvalidInput("pair document sizes do not match the model");
    run.config["input_mode"] = "exact";
    const ValueSolution sol = solve_backward(*model);
    report["input_mode"] = "exact";
    report["equality_pairs"] = pairs_to_json(pairs);
    report["truth"] = {{"beta", model->beta}, {"delta", model->delta}};
    report["inclusive_value_gaps"] = to_json_vector(inclusive_value_gaps(sol, pairs));
    const IdentificationResult r = identify(sol.P, model->transitions, pairs, opt);
    report["result"] = identification_result_to_json(r);
  } else {
    run.inputs["panel"] = o.panel;
    int J = 0;
    int K = 0;
    std::vector<EqualityPair> pairs;
    if (pair_doc) {
      J = pair_doc->num_states;
      K = pair_doc->num_actions;
      pairs = pair_doc->pairs;
    } else if (model) {
      J = model->num_states;
      K = model->num_actions;
      pairs = model->equality_pairs;
    } else {
      throw InvalidInput("data mode needs --pairs or --model to supply the equality pairs");
    }
    run.config["input_mode"] = "data";
    const PanelData panel = panel_from_csv(read_text_file(o.panel));
    panel.validate(J, K);
    const SmoothedCcps ccps = smooth_ccps(empirical_ccps(panel, J, K, panel.horizon));
    const TransitionEstimate f_hat = estimate_transitions(panel, J, K);
    report["input_mode"] = "data";
    report["equality_pairs"] = pairs_to_json(pairs);
    report["ccp_smoothing"] = {{"method", "add_one_half"},
                               {"smoothed_cells", ccps.smoothed_cells},
                               {"unvisited_cells", ccps.unvisited_cells}};
    report["unvisited_transition_rows"] = (!f_hat.visited).count();
    const IdentificationResult r = identify(ccps.P, f_hat.f_hat, pairs, opt);
    report["result"] = identification_result_to_json(r);
  }
  emit(o.out, report.dump(2) + "\n");
  if (!o.out.empty()) run.outputs["report"] = o.out;
  return kOk;
}

int cmd_estimate(const Options& o, Run& run) {
  run.inputs["panel"] = o.panel;
  run.inputs["config"] = o.config;
  EstimationConfig cfg = estimation_config_from_json(load_json(o.config));
  cfg.mle.jobs = o.jobs;
  run.config = estimation_config_to_json(cfg);
  run.config["jobs"] = o.jobs;
  const PanelData panel = panel_from_csv(read_text_file(o.panel));
  const int J = cfg.utility.num_states;
  const int K = cfg.utility.num_actions;
  panel.validate(J, K);
  const TransitionEstimate f_hat = estimate_transitions(panel, J, K);

  json report;
  report["num_agents"] = panel.num_agents;
  report["horizon"] = panel.horizon;
  json f = json::array();
  for (const auto& m : f_hat.f_hat) f.push_back(to_json_matrix(m));
  report["transitions"] = {{"f_hat", std::move(f)}, {"unvisited_rows", (!f_hat.visited).count()}};
  if (!o.out.empty()) run.outputs["report"] = o.out;
  try {
    const MleResult r = fit_mle(panel, cfg.utility, f_hat, cfg.mle);
    report["status"] = "converged";
    report["result"] = mle_result_to_json(r);
  } catch (const MleNonConvergence& e) {
    report["status"] = "non_convergence";
    report["per_start"] = start_records_to_json(e.records());
    emit(o.out, report.dump(2) + "\n");
    throw;
  }
  emit(o.out, report.dump(2) + "\n");
  return kOk;
}

int cmd_montecarlo(const Options& o, Run& run) {
  McConfig cfg = o.config.empty() ? McConfig{} : mc_config_from_json(load_json(o.config));
  if (!o.config.empty()) run.inputs["config"] = o.config;
  if (o.reps) cfg.replications = *o.reps;
  cfg.base_seed = resolve_seed(o.seed, cfg.base_seed);
  cfg.jobs = o.jobs;
  cfg.validate();
  run.seed = cfg.base_seed;
  run.config = mc_config_to_json(cfg);
  run.config["jobs"] = cfg.jobs;

  const std::vector<ReplicationRecord> records = run_replications(cfg);
  const McSummary summary = summarize(records, cfg);
  const std::string table = render_table(summary);
  std::cout << table;
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    const fs::path dir(o.out);
    write_text_file((dir / "summary.csv").string(), summary_csv(summary));
    write_text_file((dir / "summary.txt").string(), table);
    write_text_file((dir / "replications.csv").string(), replications_csv(records));
    run.outputs = {{"summary_csv", (dir / "summary.csv").string()},
                   {"summary_table", (dir / "summary.txt").string()},
                   {"replications_csv", (dir / "replications.csv").string()}};
  }
  return kOk;
}

int cmd_check(const Options& o, Run& run) {
  run.inputs["model"] = o.model;
  const ModelSpec m = load_model(o.model);
  std::optional<Mat> H;
  if (!o.macro.empty()) {
    run.inputs["macro"] = o.macro;
    H = macro_matrix_from_json(load_json(o.macro));
  }
  run.config = {{"rank_tol", o.rank_tol}};
  const AssumptionReport rep = check_assumptions(m, o.rank_tol, H);
  json report = assumption_report_to_json(rep);
  report["inclusive_value_gaps"] = to_json_vector(inclusive_value_gaps(solve_backward(m), m.equality_pairs));
  emit(o.out, report.dump(2) + "\n");
  if (!o.out.empty()) run.outputs["report"] = o.out;
  if (!rep.all_passed()) {
    for (const auto& c : rep.checks)
      if (!c.passed) std::cerr << "hyperdisc: Assumption " << label(c.which) << " failed: " << c.detail << "\n";
    return kAssumption;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation, identification and estimation for present-biased dynamic discrete choice models"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "RNG seed (falls back to HYPERDISC_SEED)");
  };
  auto add_jobs = [&](CLI::App* c) {
    c->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  };
  auto add_manifest = [&](CLI::App* c) {
    c->add_option("--manifest", o.manifest, "manifest path (default: next to --out, else stderr)");
  };

  auto* design = app.add_subcommand("design", "write the two-action linear design model");
  design->add_option("--config", o.config, "Monte Carlo config (JSON)")->check(CLI::ExistingFile);
  design->add_option("--out", o.out, "model file (default stdout)");
  add_seed(design);
  add_manifest(design);

  auto* simulate = app.add_subcommand("simulate", "simulate a panel from a model");
  simulate->add_option("--model", o.model, "model file (JSON)")->required();
  simulate->add_option("--agents,-n", o.agents, "number of agents")->required()->check(CLI::NonNegativeNumber);
  simulate->add_option("--initial-dist", o.initial_dist, "comma-separated initial state distribution");
  simulate->add_option("--out", o.out, "panel CSV (default stdout)");
  add_seed(simulate);
  add_jobs(simulate);
  add_manifest(simulate);

  auto* identify = app.add_subcommand("identify", "closed-form recovery of beta, delta and utilities");
  identify->add_option("--model", o.model, "model file; alone it selects exact mode");
  identify->add_option("--panel", o.panel, "panel CSV; selects data mode");
  identify->add_option("--pairs", o.pairs, "equality-pair document (JSON)");
  identify->add_option("--macro", o.macro, "macro-state transition matrix H (JSON)");
  identify->add_option("--mode", o.mode, "right-inverse or constrained-ls")
      ->check(CLI::IsMember({"right-inverse", "constrained-ls"}));
  identify->add_option("--rank-tol", o.rank_tol, "relative singular-value threshold");
  identify->add_option("--anchor", o.anchor, "utility anchor action,state,value (default: K-1,J-1,0)");
  identify->add_option("--out", o.out, "report file (default stdout)");
  add_manifest(identify);

  auto* estimate = app.add_subcommand("estimate", "maximum likelihood estimation from a panel");
  estimate->add_option("--panel", o.panel, "panel CSV")->required();
  estimate->add_option("--config", o.config, "estimation config (JSON)")->required();
  estimate->add_option("--out", o.out, "report file (default stdout)");
  add_jobs(estimate);
  add_manifest(estimate);

  auto* montecarlo = app.add_subcommand("montecarlo", "replicated simulate-and-estimate study");
  montecarlo->add_option("--config", o.config, "Monte Carlo config (JSON)")->check(CLI::ExistingFile);
  montecarlo->add_option("--reps", o.reps, "replication count override")->check(CLI::PositiveNumber);
  montecarlo->add_option("--out", o.out, "output directory");
  add_seed(montecarlo);
  add_jobs(montecarlo);
  add_manifest(montecarlo);

  auto* check = app.add_subcommand("check", "evaluate the identifying conditions on a model");
  check->add_option("--model", o.model, "model file (JSON)")->required();
  check->add_option("--macro", o.macro, "macro-state transition matrix H (JSON)");
  check->add_option("--rank-tol", o.rank_tol, "relative singular-value threshold");
  check->add_option("--out", o.out, "report file (default stdout)");
  add_manifest(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  Run run(sub->get_name());
  run.manifest_path = o.manifest;
  if (run.manifest_path.empty()) {
    run.manifest_path = sub == montecarlo ? (o.out.empty() ? "" : (fs::path(o.out) / "manifest.json").string())
                                          : default_manifest(o);
  }

  int code = kOk;
  std::string error;
  try {
    if (sub == design) code = cmd_design(o, run);
    else if (sub == simulate) code = cmd_simulate(o, run);
    else if (sub == identify) code = cmd_identify(o, run);
    else if (sub == estimate) code = cmd_estimate(o, run);
    else if (sub == montecarlo) code = cmd_montecarlo(o, run);
    else code = cmd_check(o, run);
  } catch (const AssumptionViolation& e) {
    code = kAssumption;
    error = e.what();
  } catch (const NonConvergence& e) {
    code = kNonConvergence;
    error = e.what();
  } catch (const EmptySummary& e) {
    code = kNonConvergence;
    error = e.what();
  } catch (const std::ios_base::failure& e) {
    code = kIo;
    error = e.what();
  } catch (const fs::filesystem_error& e) {
    code = kIo;
    error = e.what();
  } catch (const std::exception& e) {
    code = kValidation;
    error = e.what();
  }
  if (!error.empty()) std::cerr << "hyperdisc " << sub->get_name() << ": " << error << "\n";
  run.finish(code, error);
  return code;
}

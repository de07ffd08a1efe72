#pragma once

// JSON documents for estimation and Monte Carlo configs, and the reports the
// tool writes. Unknown keys are rejected so that typos surface as errors.

#include <set>
#include <string>

#include "hyperdisc/identification.hpp"
#include "hyperdisc/model_io.hpp"
#include "hyperdisc/montecarlo.hpp"

namespace hyperdisc {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw InvalidInput(where + ": unknown field '" + key + "'");
}

template <class T>
T optional_field(const json& j, const char* field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(std::string("field '") + field + "' has the wrong type");
  }
}

inline json non_finite_as_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json matrix_or_null(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(non_finite_as_null(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Estimation

struct EstimationConfig {
  UtilitySpec utility;
  MleConfig mle;
};

inline Parameters parameters_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + " must be an object");
  detail::reject_unknown(j, {"theta_u", "beta", "delta"}, where);
  if (!j.contains("theta_u")) throw InvalidInput(where + ": missing field 'theta_u'");
  Parameters p;
  p.theta_u = vector_from_json(j["theta_u"], "theta_u");
  p.beta = detail::required<double>(j, "beta");
  p.delta = detail::required<double>(j, "delta");
  return p;
}

inline json parameters_to_json(const Parameters& p) {
  return {{"theta_u", to_json_vector(p.theta_u)}, {"beta", p.beta}, {"delta", p.delta}};
}

/// Optimizer fields shared by `estimate` and `montecarlo`. Starts come either
/// from "starts" or from "reference_theta", which expands to the nine-point
/// grid; when neither is present the starts are left empty.
inline void read_mle_fields(const json& j, MleConfig& cfg) {
  if (j.contains("starts") && j.contains("reference_theta"))
    throw InvalidInput("give either 'starts' or 'reference_theta', not both");
  if (j.contains("starts")) {
    if (!j["starts"].is_array() || j["starts"].empty()) throw InvalidInput("field 'starts' must be a non-empty array");
    cfg.starts.clear();
    for (std::size_t s = 0; s < j["starts"].size(); ++s)
      cfg.starts.push_back(parameters_from_json(j["starts"][s], "starts[" + std::to_string(s) + "]"));
  }
  if (j.contains("reference_theta")) cfg.starts = default_starts(vector_from_json(j["reference_theta"], "reference_theta"));
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) throw InvalidInput("field 'tolerances' must be an object");
    detail::reject_unknown(t, {"step", "objective", "fd_step"}, "tolerances");
    cfg.step_tol = detail::optional_field(t, "step", cfg.step_tol);
    cfg.objective_tol = detail::optional_field(t, "objective", cfg.objective_tol);
    cfg.fd_step = detail::optional_field(t, "fd_step", cfg.fd_step);
  }
  cfg.max_iterations = detail::optional_field(j, "max_iterations", cfg.max_iterations);
  if (j.contains("fixed_parameters")) {
    const json& f = j["fixed_parameters"];
    if (!f.is_object()) throw InvalidInput("field 'fixed_parameters' must be an object");
    detail::reject_unknown(f, {"beta", "delta"}, "fixed_parameters");
    if (f.contains("beta")) cfg.fixed_beta = detail::required<double>(f, "beta");
    if (f.contains("delta")) cfg.fixed_delta = detail::required<double>(f, "delta");
  }
  if (!(cfg.step_tol > 0) || !(cfg.objective_tol > 0) || !(cfg.fd_step > 0))
    throw InvalidInput("tolerances must be positive");
  if (cfg.max_iterations < 1) throw InvalidInput("max_iterations must be at least 1");
  if (cfg.fixed_beta && !(*cfg.fixed_beta > 0.0 && *cfg.fixed_beta <= 1.0))
    throw InvalidInput("fixed beta must be in (0, 1]");
  if (cfg.fixed_delta && !(*cfg.fixed_delta > 0.0 && *cfg.fixed_delta < 1.0))
    throw InvalidInput("fixed delta must be in (0, 1)");
}

inline json mle_fields_to_json(const MleConfig& cfg) {
  json j;
  json starts = json::array();
  for (const auto& s : cfg.starts) starts.push_back(parameters_to_json(s));
  j["starts"] = std::move(starts);
  j["tolerances"] = {{"step", cfg.step_tol}, {"objective", cfg.objective_tol}, {"fd_step", cfg.fd_step}};
  j["max_iterations"] = cfg.max_iterations;
  json fixed = json::object();
  if (cfg.fixed_beta) fixed["beta"] = *cfg.fixed_beta;
  if (cfg.fixed_delta) fixed["delta"] = *cfg.fixed_delta;
  j["fixed_parameters"] = std::move(fixed);
  return j;
}

inline UtilityForm utility_form_from_string(const std::string& s) {
  if (s == "linear_in_state") return UtilityForm::LinearInState;
  if (s == "free_table") return UtilityForm::FreeTable;
  throw InvalidInput("utility_form must be 'linear_in_state' or 'free_table', got '" + s + "'");
}

inline EstimationConfig estimation_config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("estimation config must be a JSON object");
  detail::reject_unknown(j,
                         {"num_states", "num_actions", "state_values", "utility_form", "reference_action", "starts",
                          "reference_theta", "tolerances", "max_iterations", "fixed_parameters"},
                         "estimation config");
  EstimationConfig cfg;
  auto& us = cfg.utility;
  us.num_states = detail::required<int>(j, "num_states");
  us.num_actions = detail::optional_field(j, "num_actions", 2);
  us.form = utility_form_from_string(detail::optional_field<std::string>(j, "utility_form", "linear_in_state"));
  us.reference_action = detail::optional_field(j, "reference_action", us.num_actions - 1);
  us.state_values = j.contains("state_values") ? vector_from_json(j["state_values"], "state_values")
                                               : Vec::LinSpaced(std::max(us.num_states, 1), 0.0,
                                                                std::max(us.num_states - 1, 0));
  us.validate();
  read_mle_fields(j, cfg.mle);
  if (cfg.mle.starts.empty()) throw InvalidInput("estimation config needs 'starts' or 'reference_theta'");
  for (const auto& s : cfg.mle.starts)
    if (s.theta_u.size() != us.num_parameters())
      throw InvalidInput("each start needs " + std::to_string(us.num_parameters()) + " utility parameters");
  return cfg;
}

inline json estimation_config_to_json(const EstimationConfig& cfg) {
  json j = mle_fields_to_json(cfg.mle);
  j["num_states"] = cfg.utility.num_states;
  j["num_actions"] = cfg.utility.num_actions;
  j["state_values"] = to_json_vector(cfg.utility.state_values);
  j["utility_form"] = to_string(cfg.utility.form);
  j["reference_action"] = cfg.utility.reference_action;
  return j;
}

inline json start_records_to_json(const std::vector<StartRecord>& records) {
  json out = json::array();
  for (const auto& r : records)
    out.push_back({{"start", parameters_to_json(r.start)},
                   {"final", parameters_to_json(r.final)},
                   {"converged", r.converged},
                   {"final_loglik", detail::non_finite_as_null(r.final_loglik)},
                   {"iterations", r.iterations}});
  return out;
}

inline json mle_result_to_json(const MleResult& r) {
  return {{"theta_u_hat", to_json_vector(r.estimate.theta_u)},
          {"beta_hat", r.estimate.beta},
          {"delta_hat", r.estimate.delta},
          {"loglik", r.loglik},
          {"best_start_index", r.best_start_index},
          {"per_start", start_records_to_json(r.per_start)}};
}

// ---------------------------------------------------------------------------
// Identification

inline json identification_result_to_json(const IdentificationResult& r) {
  const auto& d = r.diagnostics;
  json j;
  j["mode"] = to_string(r.mode);
  j["beta_hat"] = detail::non_finite_as_null(r.beta_hat);
  j["delta_hat"] = detail::non_finite_as_null(r.delta_hat);
  j["c1"] = detail::non_finite_as_null(r.c1);
  j["c2"] = detail::non_finite_as_null(r.c2);
  j["in_range"] = r.in_range;
  j["coefficient_matrix"] = detail::matrix_or_null(r.coefficient_matrix);
  j["diagnostics"] = {{"block1_residual", d.block1_residual},
                      {"block2_offdiag_max", d.block2_offdiag_max},
                      {"block3_offdiag_max", d.block3_offdiag_max},
                      {"block2_diag_spread", d.block2_diag_spread},
                      {"block3_diag_spread", d.block3_diag_spread},
                      {"condition_AAt", detail::non_finite_as_null(d.condition_AAt)},
                      {"system_residual", detail::non_finite_as_null(d.system_residual)},
                      {"rank", d.rank},
                      {"rows", d.rows},
                      {"cols", d.cols},
                      {"singular_values", to_json_vector(d.singular_values)}};
  if (r.utilities_hat) {
    const auto& u = *r.utilities_hat;
    j["utilities_hat"] = {{"utilities", detail::matrix_or_null(u.utilities)},
                          {"differences", detail::matrix_or_null(u.differences)},
                          {"level_identified", u.level_identified}};
  }
  return j;
}

inline json assumption_report_to_json(const AssumptionReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"assumption", std::string(label(c.which))}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"all_passed", rep.all_passed()}, {"checks", std::move(checks)}};
}

/// Accepts either a bare matrix or an object with field "H".
inline Mat macro_matrix_from_json(const json& j) {
  if (j.is_object()) {
    detail::reject_unknown(j, {"H"}, "macro transition document");
    if (!j.contains("H")) throw InvalidInput("missing field 'H'");
    return matrix_from_json(j["H"], "H");
  }
  return matrix_from_json(j, "H");
}

/// Pair documents: {"num_states", "num_actions", "equality_pairs"}.
struct PairDocument {
  int num_states = 0;
  int num_actions = 0;
  std::vector<EqualityPair> pairs;
};

inline PairDocument pair_document_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("pair document must be a JSON object");
  detail::reject_unknown(j, {"num_states", "num_actions", "equality_pairs"}, "pair document");
  PairDocument d;
  d.num_states = detail::required<int>(j, "num_states");
  d.num_actions = detail::required<int>(j, "num_actions");
  if (d.num_states < 2 || d.num_actions < 2) throw InvalidInput("pair document needs at least two states and actions");
  if (!j.contains("equality_pairs")) throw InvalidInput("missing field 'equality_pairs'");
  d.pairs = pairs_from_json(j["equality_pairs"]);
  for (const auto& p : d.pairs) check_pair_indices(p, d.num_actions, d.num_states);
  return d;
}

// ---------------------------------------------------------------------------
// Monte Carlo

inline TransitionPolicy transition_policy_from_string(const std::string& s) {
  if (s == "fixed_across_reps") return TransitionPolicy::FixedAcrossReps;
  if (s == "fresh_per_rep") return TransitionPolicy::FreshPerRep;
  throw InvalidInput("transition_policy must be 'fixed_across_reps' or 'fresh_per_rep', got '" + s + "'");
}

inline std::string to_string(TransitionPolicy p) {
  return p == TransitionPolicy::FixedAcrossReps ? "fixed_across_reps" : "fresh_per_rep";
}

inline McConfig mc_config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("Monte Carlo config must be a JSON object");
  detail::reject_unknown(j,
                         {"num_states", "horizon", "alpha0", "alpha1", "beta", "delta", "state_values", "sample_sizes",
                          "replications", "seed", "transition_policy", "initial_dist", "estimation"},
                         "Monte Carlo config");
  McConfig cfg;
  cfg.num_states = detail::optional_field(j, "num_states", cfg.num_states);
  cfg.horizon = detail::optional_field(j, "horizon", cfg.horizon);
  cfg.alpha0 = detail::optional_field(j, "alpha0", cfg.alpha0);
  cfg.alpha1 = detail::optional_field(j, "alpha1", cfg.alpha1);
  cfg.beta = detail::optional_field(j, "beta", cfg.beta);
  cfg.delta = detail::optional_field(j, "delta", cfg.delta);
  if (j.contains("state_values")) cfg.state_values = vector_from_json(j["state_values"], "state_values");
  if (j.contains("sample_sizes")) cfg.sample_sizes = detail::required<std::vector<int>>(j, "sample_sizes");
  cfg.replications = detail::optional_field(j, "replications", cfg.replications);
  cfg.base_seed = detail::optional_field(j, "seed", cfg.base_seed);
  cfg.transition_policy =
      transition_policy_from_string(detail::optional_field<std::string>(j, "transition_policy", "fixed_across_reps"));
  if (j.contains("initial_dist")) cfg.initial_dist = vector_from_json(j["initial_dist"], "initial_dist");
  if (j.contains("estimation")) {
    const json& e = j["estimation"];
    if (!e.is_object()) throw InvalidInput("field 'estimation' must be an object");
    detail::reject_unknown(e, {"starts", "reference_theta", "tolerances", "max_iterations", "fixed_parameters"},
                           "estimation");
    read_mle_fields(e, cfg.mle);
  }
  cfg.validate();
  if (cfg.initial_dist.size() != 0 && cfg.initial_dist.size() != cfg.num_states)
    throw InvalidInput("initial_dist must have num_states entries");
  return cfg;
}

inline json mc_config_to_json(const McConfig& cfg) {
  json j;
  j["num_states"] = cfg.num_states;
  j["horizon"] = cfg.horizon;
  j["alpha0"] = cfg.alpha0;
  j["alpha1"] = cfg.alpha1;
  j["beta"] = cfg.beta;
  j["delta"] = cfg.delta;
  j["state_values"] = to_json_vector(cfg.resolved_state_values());
  j["sample_sizes"] = cfg.sample_sizes;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.base_seed;
  j["transition_policy"] = to_string(cfg.transition_policy);
  j["initial_dist"] = to_json_vector(cfg.resolved_initial_dist());
  j["estimation"] = mle_fields_to_json(cfg.mle);
  return j;
}

}  // namespace hyperdisc

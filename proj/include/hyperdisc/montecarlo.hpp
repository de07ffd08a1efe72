#pragma once

// Replication harness: draw a design, solve it, simulate panels, re-estimate,
// and summarize the spread of the estimates across replications.

#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hyperdisc/estimation.hpp"
#include "hyperdisc/parallel.hpp"
#include "hyperdisc/simulation.hpp"

namespace hyperdisc {

enum class TransitionPolicy { FixedAcrossReps, FreshPerRep };

struct McConfig {
  int num_states = 5;
  int horizon = 16;
  double alpha0 = 0.5;
  double alpha1 = -0.2;
  double beta = 0.85;
  double delta = 0.9;
  Vec state_values;  // defaults to 0..J-1
  std::vector<int> sample_sizes{2000};
  int replications = 100;
  std::uint64_t base_seed = 20240101;
  int jobs = 1;
  TransitionPolicy transition_policy = TransitionPolicy::FixedAcrossReps;
  Vec initial_dist;  // defaults to uniform
  // estimation; starts are filled from the truth when empty
  MleConfig mle;

  void validate() const {
    if (num_states < 2) throw InvalidInput("Monte Carlo design needs at least two states");
    if (horizon < 2) throw InvalidInput("Monte Carlo design needs at least two periods");
    if (replications < 1) throw InvalidInput("replication count must be at least 1");
    if (sample_sizes.empty()) throw InvalidInput("at least one sample size is required");
    for (int n : sample_sizes)
      if (n < 1) throw InvalidInput("sample sizes must be positive");
    if (!(beta > 0.0 && beta <= 1.0) || !(delta > 0.0 && delta < 1.0))
      throw InvalidInput("true beta must be in (0, 1] and delta in (0, 1)");
    if (state_values.size() != 0 && state_values.size() != num_states)
      throw InvalidInput("state_values must have num_states entries");
  }

  Vec resolved_state_values() const {
    return state_values.size() ? state_values : Vec::LinSpaced(num_states, 0.0, num_states - 1.0);
  }
  Vec resolved_initial_dist() const { return initial_dist.size() ? initial_dist : uniform_distribution(num_states); }
};

/// Stream tags mixed into the base seed.
inline constexpr std::uint64_t kTransitionStream = 1;
inline constexpr std::uint64_t kPanelStream = 2;

inline std::uint64_t transition_seed(const McConfig& cfg, int replication) {
  return cfg.transition_policy == TransitionPolicy::FixedAcrossReps
             ? derive_seed(cfg.base_seed, {kTransitionStream})
             : derive_seed(cfg.base_seed, {kTransitionStream, static_cast<std::uint64_t>(replication)});
}

inline std::uint64_t panel_seed(const McConfig& cfg, int replication, int n_agents) {
  return derive_seed(cfg.base_seed,
                     {kPanelStream, static_cast<std::uint64_t>(replication), static_cast<std::uint64_t>(n_agents)});
}

/// The two-action linear design: u_1 = alpha0 + alpha1 s(x), u_2 = 0, and
/// cross-state pairs (2, 2, x, J) from the zero reference row.
inline ModelSpec design_model(const McConfig& cfg, int replication = 0) {
  ModelSpec m;
  m.num_states = cfg.num_states;
  m.num_actions = 2;
  m.horizon = cfg.horizon;
  m.beta = cfg.beta;
  m.delta = cfg.delta;
  m.state_values = cfg.resolved_state_values();
  m.utility = linear_two_action_utility(cfg.alpha0, cfg.alpha1, m.state_values);
  m.transitions = random_transitions(cfg.num_states, 2, transition_seed(cfg, replication));
  for (int x = 0; x + 1 < cfg.num_states; ++x) m.equality_pairs.push_back({1, 1, x, cfg.num_states - 1});
  return m;
}

inline UtilitySpec design_utility_spec(const McConfig& cfg) {
  UtilitySpec us;
  us.form = UtilityForm::LinearInState;
  us.num_actions = 2;
  us.num_states = cfg.num_states;
  us.reference_action = 1;
  us.state_values = cfg.resolved_state_values();
  return us;
}

struct ReplicationRecord {
  int replication = 0;
  int n_agents = 0;
  bool ok = false;
  Parameters estimate;
  double loglik = 0.0;
  int best_start = -1;
  std::string error;
};

/// One record per (replication, sample size), ordered replication-major.
/// Individual failures are recorded, not thrown.
inline std::vector<ReplicationRecord> run_replications(const McConfig& cfg) {
  cfg.validate();
  const int S = static_cast<int>(cfg.sample_sizes.size());
  std::vector<ReplicationRecord> out(static_cast<std::size_t>(cfg.replications) * S);
  const UtilitySpec us = design_utility_spec(cfg);
  Vec truth_theta(2);
  truth_theta << cfg.alpha0, cfg.alpha1;
  MleConfig mle = cfg.mle;
  mle.jobs = 1;  // parallelism lives at the replication level
  if (mle.starts.empty()) mle.starts = default_starts(truth_theta);

  parallel_for(static_cast<int>(out.size()), cfg.jobs, [&](int task) {
    const int r = task / S;
    const int n = cfg.sample_sizes[task % S];
    auto& rec = out[task];
    rec.replication = r;
    rec.n_agents = n;
    try {
      const ModelSpec model = design_model(cfg, r);
      const ValueSolution sol = solve_backward(model);
      const PanelData panel = simulate_panel(model, sol, n, cfg.resolved_initial_dist(), panel_seed(cfg, r, n));
      const TransitionEstimate f_hat = estimate_transitions(panel, model.num_states, model.num_actions);
      const MleResult fit = fit_mle(panel, us, f_hat, mle);
      rec.ok = true;
      rec.estimate = fit.estimate;
      rec.loglik = fit.loglik;
      rec.best_start = fit.best_start_index;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });
  return out;
}

struct SummaryRow {
  std::string parameter;
  int n_agents = 0;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;  // divisor n-1; 0 for a single replication
  int replications = 0;
  int failures = 0;
};

struct McSummary {
  std::vector<std::string> parameters;
  std::vector<int> sample_sizes;
  std::vector<SummaryRow> rows;  // parameter-major, then sample size

  const SummaryRow& at(const std::string& parameter, int n_agents) const {
    for (const auto& r : rows)
      if (r.parameter == parameter && r.n_agents == n_agents) return r;
    throw InvalidInput("no summary row for " + parameter + " at N=" + std::to_string(n_agents));
  }
};

/// Mean and sample standard deviation (n-1 divisor; 0 when n == 1).
inline std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) throw EmptySummary("no values to summarize");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

/// Per (parameter, N) summary in the row order alpha0, alpha1, delta, beta.
inline McSummary summarize(const std::vector<ReplicationRecord>& records, const McConfig& cfg) {
  McSummary s;
  s.parameters = {"alpha0", "alpha1", "delta", "beta"};
  s.sample_sizes = cfg.sample_sizes;
  const std::map<std::string, double> truth{
      {"alpha0", cfg.alpha0}, {"alpha1", cfg.alpha1}, {"delta", cfg.delta}, {"beta", cfg.beta}};
  auto pick = [](const Parameters& p, const std::string& name) {
    if (name == "alpha0") return p.theta_u(0);
    if (name == "alpha1") return p.theta_u(1);
    if (name == "delta") return p.delta;
    return p.beta;
  };
  bool any_success = false;
  for (const auto& name : s.parameters) {
    for (int n : s.sample_sizes) {
      std::vector<double> vals;
      int failures = 0;
      for (const auto& r : records) {
        if (r.n_agents != n) continue;
        if (r.ok) vals.push_back(pick(r.estimate, name));
        else ++failures;
      }
      SummaryRow row{name, n, truth.at(name), 0.0, 0.0, static_cast<int>(vals.size()) + failures, failures};
      if (!vals.empty()) {
        std::tie(row.mean, row.sd) = mean_sd(vals);
        any_success = true;
      } else {
        row.mean = row.sd = std::numeric_limits<double>::quiet_NaN();
      }
      s.rows.push_back(row);
    }
  }
  if (!any_success) throw EmptySummary("no replication succeeded");
  return s;
}

/// Aligned text: one mean row and one parenthesized SD row per parameter.
inline std::string render_table(const McSummary& s) {
  std::ostringstream out;
  out << std::fixed;
  out << std::left << std::setw(10) << "" << std::right << std::setw(9) << "True";
  for (int n : s.sample_sizes) out << std::setw(12) << ("N=" + std::to_string(n));
  out << "\n";
  for (const auto& name : s.parameters) {
    out << std::left << std::setw(10) << name << std::right << std::setw(9) << std::setprecision(3)
        << s.at(name, s.sample_sizes.front()).truth;
    for (int n : s.sample_sizes) out << std::setw(12) << std::setprecision(3) << s.at(name, n).mean;
    out << "\n" << std::left << std::setw(10) << "" << std::right << std::setw(9) << "";
    for (int n : s.sample_sizes) {
      std::ostringstream sd;
      sd << std::fixed << std::setprecision(3) << "(" << s.at(name, n).sd << ")";
      out << std::setw(12) << sd.str();
    }
    out << "\n";
  }
  out << "SD: cross-replication standard deviation of the estimates\n";
  return out.str();
}

inline std::string summary_csv(const McSummary& s) {
  std::ostringstream out;
  out << "parameter,n_agents,truth,mean,sd,replications,failures\n";
  out << std::setprecision(10);
  for (const auto& r : s.rows)
    out << r.parameter << ',' << r.n_agents << ',' << r.truth << ',' << r.mean << ',' << r.sd << ','
        << r.replications << ',' << r.failures << '\n';
  return out.str();
}

inline std::string replications_csv(const std::vector<ReplicationRecord>& records) {
  std::ostringstream out;
  out << "replication,n_agents,ok,alpha0,alpha1,delta,beta,loglik,best_start,error\n";
  out << std::setprecision(12);
  for (const auto& r : records) {
    out << r.replication << ',' << r.n_agents << ',' << (r.ok ? 1 : 0) << ',';
    if (r.ok) {
      out << r.estimate.theta_u(0) << ',' << r.estimate.theta_u(1) << ',' << r.estimate.delta << ','
          << r.estimate.beta << ',' << r.loglik << ',' << r.best_start << ',';
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << ",,,,,," << msg;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace hyperdisc

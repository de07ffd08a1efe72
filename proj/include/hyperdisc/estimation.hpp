#pragma once

// Two-step maximum likelihood. Transitions are estimated by cell frequencies;
// (theta_u, beta, delta) then maximize the CCP block of the log-likelihood
// with backward induction nested inside every evaluation.

#include <optional>
#include <string>
#include <vector>

#include "hyperdisc/model.hpp"
#include "hyperdisc/optimize.hpp"
#include "hyperdisc/parallel.hpp"
#include "hyperdisc/simulation.hpp"

namespace hyperdisc {

enum class UtilityForm { LinearInState, FreeTable };

inline std::string to_string(UtilityForm f) { return f == UtilityForm::LinearInState ? "linear_in_state" : "free_table"; }

/// Maps a parameter vector to a K x J utility table. The reference action row
/// is fixed at zero.
///   linear_in_state: (a0_i, a1_i) per non-reference action i, u_i(x) = a0_i + a1_i s(x)
///   free_table:      one free entry per (non-reference action, state)
struct UtilitySpec {
  UtilityForm form = UtilityForm::LinearInState;
  int num_actions = 2;
  int num_states = 0;
  int reference_action = 1;
  Vec state_values;

  int num_parameters() const {
    const int free_actions = num_actions - 1;
    return form == UtilityForm::LinearInState ? 2 * free_actions : free_actions * num_states;
  }

  void validate() const {
    if (num_actions < 2) throw InvalidInput("utility spec needs at least two actions");
    if (num_states < 1) throw InvalidInput("utility spec needs at least one state");
    if (reference_action < 0 || reference_action >= num_actions) throw InvalidInput("reference action out of range");
    if (state_values.size() != num_states) throw InvalidInput("state_values must have num_states entries");
    if (num_parameters() >= num_actions * num_states)
      throw InvalidInput("utility has as many parameters as table cells and cannot be identified");
  }

  Mat utility(const Vec& theta) const {
    if (theta.size() != num_parameters())
      throw InvalidInput("expected " + std::to_string(num_parameters()) + " utility parameters, got " +
                         std::to_string(theta.size()));
    Mat u = Mat::Zero(num_actions, num_states);
    int slot = 0;
    for (int i = 0; i < num_actions; ++i) {
      if (i == reference_action) continue;
      if (form == UtilityForm::LinearInState) {
        u.row(i) = (theta(2 * slot) + theta(2 * slot + 1) * state_values.array()).matrix().transpose();
      } else {
        u.row(i) = theta.segment(static_cast<Eigen::Index>(slot) * num_states, num_states).transpose();
      }
      ++slot;
    }
    return u;
  }
};

/// Structural parameters in natural units.
struct Parameters {
  Vec theta_u;
  double beta = 0.0;
  double delta = 0.0;
};

inline double logistic(double r) {
  return r >= 0 ? 1.0 / (1.0 + std::exp(-r)) : std::exp(r) / (1.0 + std::exp(r));
}

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("logit is defined on (0, 1) only");
  return std::log(p) - std::log1p(-p);
}

/// Unconstrained coordinates: theta_u as is, then logit(beta) and logit(delta)
/// for whichever of the two is free.
struct ParamTransform {
  int num_theta = 0;
  std::optional<double> fixed_beta;
  std::optional<double> fixed_delta;

  int raw_size() const { return num_theta + (fixed_beta ? 0 : 1) + (fixed_delta ? 0 : 1); }

  Parameters from_raw(const Vec& raw) const {
    if (raw.size() != raw_size()) throw InvalidInput("raw parameter vector has the wrong length");
    Parameters p;
    p.theta_u = raw.head(num_theta);
    Eigen::Index k = num_theta;
    p.beta = fixed_beta ? *fixed_beta : logistic(raw(k++));
    p.delta = fixed_delta ? *fixed_delta : logistic(raw(k++));
    return p;
  }

  Vec to_raw(const Parameters& p) const {
    if (p.theta_u.size() != num_theta) throw InvalidInput("theta_u has the wrong length");
    Vec raw(raw_size());
    raw.head(num_theta) = p.theta_u;
    Eigen::Index k = num_theta;
    if (!fixed_beta) raw(k++) = logit(p.beta);
    if (!fixed_delta) raw(k++) = logit(p.delta);
    return raw;
  }
};

/// Choice counts per (t, i, x); the sufficient statistic of the CCP block.
using ChoiceCounts = std::vector<Eigen::MatrixXi>;

inline ChoiceCounts choice_counts(const PanelData& panel, int num_states, int num_actions) {
  panel.validate(num_states, num_actions);
  ChoiceCounts c(panel.horizon, Eigen::MatrixXi::Zero(num_actions, num_states));
  for (const auto& r : panel.records) c[r.period - 1](r.action, r.state) += 1;
  return c;
}

inline ModelSpec model_from_parameters(const UtilitySpec& us, const Parameters& p, const std::vector<Mat>& transitions,
                                       int horizon) {
  ModelSpec m;
  m.num_states = us.num_states;
  m.num_actions = us.num_actions;
  m.horizon = horizon;
  m.beta = p.beta;
  m.delta = p.delta;
  m.utility = us.utility(p.theta_u);
  m.transitions = transitions;
  m.state_values = us.state_values;
  return m;
}

/// Sum over observations of log P_t(a | x) = W - logsumexp(W). The transition
/// block is excluded; it does not depend on (theta_u, beta, delta).
inline double log_likelihood(const ChoiceCounts& counts, const UtilitySpec& us, const Parameters& p,
                             const std::vector<Mat>& transitions) {
  if (!(p.beta > 0.0 && p.beta <= 1.0) || !(p.delta > 0.0 && p.delta < 1.0))
    throw InvalidInput("beta must be in (0, 1] and delta in (0, 1)");
  const int T = static_cast<int>(counts.size());
  const ValueSolution sol = solve_backward(model_from_parameters(us, p, transitions, T));
  double ll = 0.0;
  for (int t = 0; t < T; ++t) {
    const Mat& w = sol.W[t];
    for (Eigen::Index x = 0; x < w.cols(); ++x) {
      if (counts[t].col(x).sum() == 0) continue;
      const double lse = logsumexp(Vec(w.col(x)));
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        if (counts[t](i, x) > 0) ll += counts[t](i, x) * (w(i, x) - lse);
    }
  }
  return ll;
}

inline double log_likelihood(const PanelData& panel, const UtilitySpec& us, const Parameters& p,
                             const TransitionEstimate& f_hat) {
  return log_likelihood(choice_counts(panel, us.num_states, us.num_actions), us, p, f_hat.f_hat);
}

/// Transition block: sum of log f(x_{t+1} | x_t, a_t).
inline double transition_log_likelihood(const PanelData& panel, const std::vector<Mat>& transitions) {
  double ll = 0.0;
  for (int a = 0; a < panel.num_agents; ++a)
    for (int t = 0; t + 1 < panel.horizon; ++t) {
      const auto& r = panel.at(a, t);
      ll += std::log(transitions[r.action](r.state, panel.at(a, t + 1).state));
    }
  return ll;
}

struct MleConfig {
  std::vector<Parameters> starts;
  double step_tol = 1e-8;
  double objective_tol = 1e-10;
  int max_iterations = 500;
  double fd_step = 1e-5;
  std::optional<double> fixed_beta;
  std::optional<double> fixed_delta;
  int jobs = 1;
};

/// theta_u at 0.95 x reference, (delta, beta) over {0.7, 0.8, 0.9}^2.
inline std::vector<Parameters> default_starts(const Vec& reference_theta) {
  std::vector<Parameters> out;
  for (double d : {0.7, 0.8, 0.9})
    for (double b : {0.7, 0.8, 0.9}) out.push_back({0.95 * reference_theta, b, d});
  return out;
}

struct StartRecord {
  Parameters start;
  Parameters final;
  bool converged = false;
  double final_loglik = -std::numeric_limits<double>::infinity();
  int iterations = 0;
};

struct MleResult {
  Parameters estimate;
  double loglik = -std::numeric_limits<double>::infinity();
  std::vector<StartRecord> per_start;
  int best_start_index = -1;
};

class MleNonConvergence : public NonConvergence {
 public:
  MleNonConvergence(const std::string& what, std::vector<StartRecord> records)
      : NonConvergence(what), records_(std::move(records)) {}
  const std::vector<StartRecord>& records() const { return records_; }

 private:
  std::vector<StartRecord> records_;
};

inline ParamTransform transform_for(const UtilitySpec& us, const MleConfig& cfg) {
  return {us.num_parameters(), cfg.fixed_beta, cfg.fixed_delta};
}

/// Negative log-likelihood in unconstrained coordinates; +inf where the model
/// cannot be solved.
inline Objective negative_loglik_objective(const ChoiceCounts& counts, const UtilitySpec& us,
                                           const std::vector<Mat>& transitions, const ParamTransform& tr) {
  return [&counts, &us, &transitions, tr](const Vec& raw) {
    try {
      const double ll = log_likelihood(counts, us, tr.from_raw(raw), transitions);
      return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
    } catch (const InvalidInput&) {
      return std::numeric_limits<double>::infinity();
    }
  };
}

inline MleResult fit_mle(const ChoiceCounts& counts, const UtilitySpec& us, const std::vector<Mat>& transitions,
                         const MleConfig& cfg) {
  us.validate();
  if (cfg.starts.empty()) throw InvalidInput("at least one start point is required");
  const ParamTransform tr = transform_for(us, cfg);
  const Objective objective = negative_loglik_objective(counts, us, transitions, tr);
  OptimizerOptions opt;
  opt.step_tol = cfg.step_tol;
  opt.objective_tol = cfg.objective_tol;
  opt.max_iterations = cfg.max_iterations;
  opt.fd_step = cfg.fd_step;

  MleResult res;
  res.per_start.resize(cfg.starts.size());
  parallel_for(static_cast<int>(cfg.starts.size()), cfg.jobs, [&](int s) {
    Parameters start = cfg.starts[s];
    if (cfg.fixed_beta) start.beta = *cfg.fixed_beta;
    if (cfg.fixed_delta) start.delta = *cfg.fixed_delta;
    const OptimizerResult o = minimize_bfgs(objective, tr.to_raw(start), opt);
    auto& rec = res.per_start[s];
    rec.start = start;
    rec.final = tr.from_raw(o.x);
    rec.converged = o.converged && std::isfinite(o.value);
    rec.final_loglik = -o.value;
    rec.iterations = o.iterations;
  });

  const bool any_converged =
      std::any_of(res.per_start.begin(), res.per_start.end(), [](const StartRecord& r) { return r.converged; });
  if (!any_converged) throw MleNonConvergence("no start point converged", res.per_start);
  for (int s = 0; s < static_cast<int>(res.per_start.size()); ++s) {
    const auto& r = res.per_start[s];
    if (std::isfinite(r.final_loglik) && (res.best_start_index < 0 || r.final_loglik > res.loglik)) {
      res.best_start_index = s;
      res.loglik = r.final_loglik;
    }
  }
  res.estimate = res.per_start[res.best_start_index].final;
  return res;
}

inline MleResult fit_mle(const PanelData& panel, const UtilitySpec& us, const TransitionEstimate& f_hat,
                         const MleConfig& cfg) {
  return fit_mle(choice_counts(panel, us.num_states, us.num_actions), us, f_hat.f_hat, cfg);
}

}  // namespace hyperdisc

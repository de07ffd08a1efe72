#pragma once

// Finite-horizon logit dynamic discrete choice with quasi-hyperbolic
// discounting, solved for a sophisticated agent by backward induction.
//
// Conventions:
//   * states and actions are 0-based; the reference action is K-1 and the
//     reference state is J-1;
//   * periods are stored 0-based (index t holds calendar period t+1);
//   * shocks are mean-zero type-1 extreme value, so E max_i {W_i + e_i} is
//     exactly logsumexp(W) with no Euler-Mascheroni shift;
//   * the continuation value after the last period is zero.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyperdisc/error.hpp"

namespace hyperdisc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Asserts u_k(x1) == u_l(x2). Indices are 0-based.
struct EqualityPair {
  int k = 0;
  int l = 0;
  int x1 = 0;
  int x2 = 0;

  friend bool operator==(const EqualityPair&, const EqualityPair&) = default;
};

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kPairTol = 1e-12;

/// Full primitive set of the model.
struct ModelSpec {
  int num_states = 0;   // J
  int num_actions = 0;  // K
  int horizon = 0;      // T
  double beta = 1.0;    // present bias, (0, 1]
  double delta = 0.9;   // long-run discount factor, (0, 1)
  Mat utility;                  // K x J, u_i(x)
  std::vector<Mat> transitions; // K matrices, J x J, row x = f(. | x, i)
  Vec state_values;             // covariate value of each state index
  std::vector<EqualityPair> equality_pairs;

  /// Throws InvalidInput on any broken invariant.
  void validate() const;
};

inline void check_row_stochastic(const Mat& m, const std::string& what, double tol = kStochasticTol) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (!std::isfinite(v) || v < 0.0)
        throw InvalidInput(what + ": entry (" + std::to_string(r) + "," + std::to_string(c) +
                           ") is negative or non-finite");
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol)
      throw InvalidInput(what + ": row " + std::to_string(r) + " sums to " + std::to_string(sum));
  }
}

inline void check_pair_indices(const EqualityPair& p, int num_actions, int num_states) {
  if (p.k < 0 || p.k >= num_actions || p.l < 0 || p.l >= num_actions || p.x1 < 0 ||
      p.x1 >= num_states || p.x2 < 0 || p.x2 >= num_states)
    throw InvalidInput("equality pair (" + std::to_string(p.k) + "," + std::to_string(p.l) + "," +
                       std::to_string(p.x1) + "," + std::to_string(p.x2) + ") out of range");
}

inline void ModelSpec::validate() const {
  if (num_states < 1) throw InvalidInput("num_states must be positive");
  if (num_actions < 2) throw InvalidInput("num_actions must be at least 2");
  if (horizon < 1) throw InvalidInput("horizon must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidInput("beta must lie in (0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  if (utility.rows() != num_actions || utility.cols() != num_states)
    throw InvalidInput("utility must be num_actions x num_states");
  if (!utility.allFinite()) throw InvalidInput("utility entries must be finite");
  if (static_cast<int>(transitions.size()) != num_actions)
    throw InvalidInput("need one transition matrix per action");
  for (int i = 0; i < num_actions; ++i) {
    if (transitions[i].rows() != num_states || transitions[i].cols() != num_states)
      throw InvalidInput("transition matrix " + std::to_string(i) + " must be num_states square");
    check_row_stochastic(transitions[i], "transitions[" + std::to_string(i) + "]");
  }
  if (state_values.size() != num_states) throw InvalidInput("state_values must have num_states entries");
  for (const auto& p : equality_pairs) {
    check_pair_indices(p, num_actions, num_states);
    if (std::abs(utility(p.k, p.x1) - utility(p.l, p.x2)) > kPairTol)
      throw InvalidInput("equality pair (" + std::to_string(p.k) + "," + std::to_string(p.l) + "," +
                         std::to_string(p.x1) + "," + std::to_string(p.x2) +
                         ") does not hold for the supplied utilities");
  }
}

/// Values and choice probabilities for every period, 0-based in t.
struct ValueSolution {
  std::vector<Vec> V;  // perceived long-run value V_t(x), length J
  std::vector<Mat> W;  // current choice-specific value W_{t,i}(x), K x J
  std::vector<Mat> P;  // CCP P_{t,i}(x), K x J

  int horizon() const { return static_cast<int>(P.size()); }
};

// ---------------------------------------------------------------------------

/// log(sum(exp(values))) shifted by the maximum so large inputs do not overflow.
inline double logsumexp(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("logsumexp of an empty list");
  double top = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInput("logsumexp requires finite values");
    top = std::max(top, v);
  }
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

inline double logsumexp(const Vec& values) { return logsumexp(std::span<const double>(values.data(), values.size())); }

/// Logit choice probabilities for one (t, x) column of choice values.
inline Vec ccp_from_values(const Vec& w) {
  const double lse = logsumexp(w);
  return (w.array() - lse).exp().matrix();
}

inline std::vector<double> ccp_from_values(std::span<const double> w) {
  const double lse = logsumexp(w);
  std::vector<double> out(w.size());
  std::transform(w.begin(), w.end(), out.begin(), [lse](double v) { return std::exp(v - lse); });
  return out;
}

/// Expected next-period value E[v_next(x') | x, i] as a K x J table.
inline Mat expected_next_values(const std::vector<Mat>& f, const Vec& v_next) {
  const auto K = static_cast<Eigen::Index>(f.size());
  if (K == 0) throw InvalidInput("no transition matrices");
  const Eigen::Index J = f.front().rows();
  if (v_next.size() != J) throw InvalidInput("continuation value has wrong length");
  Mat ev(K, J);
  for (Eigen::Index i = 0; i < K; ++i) {
    if (f[i].rows() != J || f[i].cols() != J) throw InvalidInput("transition matrices must be J x J");
    ev.row(i) = (f[i] * v_next).transpose();
  }
  return ev;
}

/// W_{t,i}(x) = u_i(x) + beta*delta*E[v_next | x, i]. With beta = 1 this is
/// the long-run choice-specific value V_{t,i}(x).
inline Mat choice_values(const Mat& u, const std::vector<Mat>& f, double beta, double delta, const Vec& v_next) {
  if (static_cast<Eigen::Index>(f.size()) != u.rows()) throw InvalidInput("one transition matrix per action required");
  if (v_next.size() != u.cols()) throw InvalidInput("continuation value has wrong length");
  return u + beta * delta * expected_next_values(f, v_next);
}

inline Mat choice_long_run_values(const Mat& u, const std::vector<Mat>& f, double delta, const Vec& v_next) {
  return choice_values(u, f, 1.0, delta, v_next);
}

inline void check_ccp_columns(const Mat& p, double tol = kStochasticTol) {
  for (Eigen::Index x = 0; x < p.cols(); ++x) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double v = p(i, x);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw InvalidInput("CCP entry (" + std::to_string(i) + "," + std::to_string(x) + ") outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) throw InvalidInput("CCP column " + std::to_string(x) + " does not sum to one");
  }
}

/// Perceived long-run value one period back:
///   V_t(x) = logsumexp_i W_{t,i}(x) + (1-beta)*delta*sum_j P_{t,j}(x) E[v_next | x, j].
inline Vec perceived_value_step(const Mat& w_t, const Mat& p_t, const std::vector<Mat>& f, double beta, double delta,
                                const Vec& v_next) {
  if (w_t.rows() != p_t.rows() || w_t.cols() != p_t.cols()) throw InvalidInput("W and P shapes differ");
  check_ccp_columns(p_t);
  const Mat ev = expected_next_values(f, v_next);
  Vec v(w_t.cols());
  for (Eigen::Index x = 0; x < w_t.cols(); ++x)
    v(x) = logsumexp(Vec(w_t.col(x))) + (1.0 - beta) * delta * p_t.col(x).dot(ev.col(x));
  return v;
}

/// Same quantity through the reference-action inversion
///   logsumexp_i W_{t,i}(x) = W_{t,K}(x) - log P_{t,K}(x).
inline Vec perceived_value_step_inverted(const Mat& w_t, const Mat& p_t, const std::vector<Mat>& f, double beta,
                                         double delta, const Vec& v_next) {
  check_ccp_columns(p_t);
  const Mat ev = expected_next_values(f, v_next);
  const Eigen::Index ref = w_t.rows() - 1;
  Vec v(w_t.cols());
  for (Eigen::Index x = 0; x < w_t.cols(); ++x)
    v(x) = -std::log(p_t(ref, x)) + w_t(ref, x) + (1.0 - beta) * delta * p_t.col(x).dot(ev.col(x));
  return v;
}

/// Backward induction from the zero terminal continuation value.
inline ValueSolution solve_backward(const ModelSpec& model) {
  model.validate();
  const int T = model.horizon;
  ValueSolution sol;
  sol.V.resize(T);
  sol.W.resize(T);
  sol.P.resize(T);
  Vec v_next = Vec::Zero(model.num_states);
  for (int t = T - 1; t >= 0; --t) {
    Mat w = choice_values(model.utility, model.transitions, model.beta, model.delta, v_next);
    Mat p(w.rows(), w.cols());
    for (Eigen::Index x = 0; x < w.cols(); ++x) p.col(x) = ccp_from_values(Vec(w.col(x)));
    Vec v = perceived_value_step(w, p, model.transitions, model.beta, model.delta, v_next);
#ifndef NDEBUG
    const Vec alt = perceived_value_step_inverted(w, p, model.transitions, model.beta, model.delta, v_next);
    if (alt.allFinite() && (alt - v).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + v.cwiseAbs().maxCoeff()))
      throw std::logic_error("perceived value forms disagree");
#endif
    sol.W[t] = std::move(w);
    sol.P[t] = std::move(p);
    sol.V[t] = v;
    v_next = std::move(v);
  }
  return sol;
}

/// Utility rows u_1(x) = alpha0 + alpha1 * s(x) and u_2(x) = 0, the two-action
/// linear design used for the Monte Carlo study.
inline Mat linear_two_action_utility(double alpha0, double alpha1, const Vec& state_values) {
  Mat u = Mat::Zero(2, state_values.size());
  u.row(0) = (alpha0 + alpha1 * state_values.array()).matrix().transpose();
  return u;
}

}  // namespace hyperdisc

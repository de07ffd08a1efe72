#pragma once

// Test-side model generators and independent reference implementations.
// The oracles use plain loops over std::vector and never call into the
// library's solver paths.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hyperdisc/model.hpp"
#include "hyperdisc/rng.hpp"

namespace hyperdisc::testing {

using Table = std::vector<std::vector<double>>;  // [row][col]

inline Table to_table(const Mat& m) {
  Table t(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t[r][c] = m(r, c);
  return t;
}

inline Mat random_stochastic(Rng& rng, int J) {
  Mat f(J, J);
  for (int r = 0; r < J; ++r) {
    double s = 0.0;
    for (int c = 0; c < J; ++c) s += f(r, c) = rng.uniform() + 1e-3;
    f.row(r) /= s;
  }
  return f;
}

/// Random utilities on [-scale, scale] and uniform-row transitions; no pairs.
inline ModelSpec random_model(std::uint64_t seed, int J, int K, int T, double beta, double delta,
                              double scale = 2.0) {
  Rng rng(seed);
  ModelSpec m;
  m.num_states = J;
  m.num_actions = K;
  m.horizon = T;
  m.beta = beta;
  m.delta = delta;
  m.utility.resize(K, J);
  for (int i = 0; i < K; ++i)
    for (int x = 0; x < J; ++x) m.utility(i, x) = scale * (2.0 * rng.uniform() - 1.0);
  for (int i = 0; i < K; ++i) m.transitions.push_back(random_stochastic(rng, J));
  m.state_values = Vec::LinSpaced(J, 0.0, J - 1.0);
  return m;
}

/// Random model with J-1 same-state pairs (0, 1, x, x), x < J-1. Action 0
/// mostly stays put so the value differences persist over the horizon.
inline ModelSpec same_state_model(std::uint64_t seed, int J, int K, int T, double beta, double delta,
                                  double scale = 2.0) {
  ModelSpec m = random_model(seed, J, K, T, beta, delta, scale);
  m.transitions[0] = 0.9 * Mat::Identity(J, J) + 0.1 * m.transitions[0];
  for (int x = 0; x + 1 < J; ++x) {
    m.utility(0, x) = m.utility(1, x);
    m.equality_pairs.push_back({0, 1, x, x});
  }
  return m;
}

// ---------------------------------------------------------------------------

struct OracleSolution {
  std::vector<std::vector<double>> V;  // [t][x]
  std::vector<Table> P;                // [t][i][x]
};

inline double expected_next(const Table& f, int x, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t y = 0; y < v.size(); ++y) s += f[x][y] * v[y];
  return s;
}

/// Standard exponential-discounting recursion
///   V_t(x) = log sum_i exp(u_i(x) + delta E[V_{t+1} | x, i]).
inline OracleSolution exponential_oracle(const ModelSpec& m) {
  const int J = m.num_states, K = m.num_actions, T = m.horizon;
  const Table u = to_table(m.utility);
  std::vector<Table> f;
  for (const auto& t : m.transitions) f.push_back(to_table(t));
  OracleSolution out;
  out.V.assign(T, std::vector<double>(J));
  out.P.assign(T, Table(K, std::vector<double>(J)));
  std::vector<double> next(J, 0.0);
  for (int t = T - 1; t >= 0; --t) {
    for (int x = 0; x < J; ++x) {
      std::vector<double> w(K);
      double top = -INFINITY;
      for (int i = 0; i < K; ++i) {
        w[i] = u[i][x] + m.delta * expected_next(f[i], x, next);
        top = std::max(top, w[i]);
      }
      double z = 0.0;
      for (int i = 0; i < K; ++i) z += std::exp(w[i] - top);
      out.V[t][x] = top + std::log(z);
      for (int i = 0; i < K; ++i) out.P[t][i][x] = std::exp(w[i] - top) / z;
    }
    next = out.V[t];
  }
  return out;
}

/// Present-biased recursion written as an expectation over the chosen action:
///   V_t(x) = sum_j P_j(x) (u_j(x) + delta E[V_{t+1} | x, j] + E[eps_j | j chosen]),
/// with E[eps_j | j chosen] = -log P_j(x) for mean-zero extreme-value shocks and
/// P the logit of u + beta*delta E[V_{t+1}].
inline OracleSolution present_bias_oracle(const ModelSpec& m) {
  const int J = m.num_states, K = m.num_actions, T = m.horizon;
  const Table u = to_table(m.utility);
  std::vector<Table> f;
  for (const auto& t : m.transitions) f.push_back(to_table(t));
  OracleSolution out;
  out.V.assign(T, std::vector<double>(J));
  out.P.assign(T, Table(K, std::vector<double>(J)));
  std::vector<double> next(J, 0.0);
  for (int t = T - 1; t >= 0; --t) {
    for (int x = 0; x < J; ++x) {
      std::vector<double> ev(K), w(K);
      double top = -INFINITY;
      for (int i = 0; i < K; ++i) {
        ev[i] = expected_next(f[i], x, next);
        w[i] = u[i][x] + m.beta * m.delta * ev[i];
        top = std::max(top, w[i]);
      }
      double z = 0.0;
      for (int i = 0; i < K; ++i) z += std::exp(w[i] - top);
      double v = 0.0;
      for (int i = 0; i < K; ++i) {
        const double p = std::exp(w[i] - top) / z;
        out.P[t][i][x] = p;
        v += p * (u[i][x] + m.delta * ev[i] - std::log(p));
      }
      out.V[t][x] = v;
    }
    next = out.V[t];
  }
  return out;
}

/// Gumbel-max draw: argmax_i w_i + eps_i with eps standard Gumbel.
inline int gumbel_max_draw(const std::vector<double>& w, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int best = 0;
  double best_v = -INFINITY;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double uu = unif(eng);
    while (uu <= 0.0) uu = unif(eng);
    const double v = w[i] - std::log(-std::log(uu));
    if (v > best_v) {
      best_v = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace hyperdisc::testing

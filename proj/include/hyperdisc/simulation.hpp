#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hyperdisc/model.hpp"
#include "hyperdisc/rng.hpp"

namespace hyperdisc {

/// One observation. `period` is 1-based; state and action are 0-based.
struct PanelRecord {
  int agent = 0;
  int period = 1;
  int state = 0;
  int action = 0;

  friend bool operator==(const PanelRecord&, const PanelRecord&) = default;
};

/// Balanced panel, records ordered by agent then period.
struct PanelData {
  int num_agents = 0;
  int horizon = 0;
  std::vector<PanelRecord> records;

  const PanelRecord& at(int agent_index, int period_index) const {
    return records[static_cast<std::size_t>(agent_index) * horizon + period_index];
  }

  /// Checks ordering, balance, and index ranges.
  void validate(int num_states, int num_actions) const {
    if (num_agents < 0 || horizon < 1) throw InvalidInput("panel needs a positive horizon");
    if (records.size() != static_cast<std::size_t>(num_agents) * horizon)
      throw InvalidInput("panel is not balanced: " + std::to_string(records.size()) + " records for " +
                         std::to_string(num_agents) + " agents x " + std::to_string(horizon) + " periods");
    for (int a = 0; a < num_agents; ++a) {
      const int id = at(a, 0).agent;
      for (int t = 0; t < horizon; ++t) {
        const auto& r = at(a, t);
        if (r.agent != id || r.period != t + 1)
          throw InvalidInput("agent " + std::to_string(id) + " does not have contiguous periods 1.." +
                             std::to_string(horizon));
        if (r.state < 0 || r.state >= num_states || r.action < 0 || r.action >= num_actions)
          throw InvalidInput("agent " + std::to_string(id) + " period " + std::to_string(r.period) +
                             " has an out-of-range state or action");
      }
    }
  }
};

/// K row-stochastic J x J matrices with uniform [0,1) entries normalized by row.
inline std::vector<Mat> random_transitions(int num_states, int num_actions, std::uint64_t seed) {
  if (num_states < 1 || num_actions < 1) throw InvalidInput("random_transitions needs positive dimensions");
  Rng rng(seed);
  std::vector<Mat> out;
  out.reserve(num_actions);
  for (int i = 0; i < num_actions; ++i) {
    Mat f(num_states, num_states);
    for (int x = 0; x < num_states; ++x) {
      for (int y = 0; y < num_states; ++y) f(x, y) = rng.uniform();
      f.row(x) /= f.row(x).sum();
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline Vec uniform_distribution(int num_states) { return Vec::Constant(num_states, 1.0 / num_states); }

/// Forward simulation: x_1 ~ initial_dist, a_t ~ P_t(. | x_t), x_{t+1} ~ f(. | x_t, a_t).
/// Agent n draws from its own stream seeded with derive_seed(seed, {n}), so the
/// output does not depend on `jobs`.
inline PanelData simulate_panel(const ModelSpec& model, const ValueSolution& solution, int n_agents,
                                const Vec& initial_dist, std::uint64_t seed, int jobs = 1) {
  model.validate();
  const int J = model.num_states;
  const int K = model.num_actions;
  const int T = model.horizon;
  if (n_agents < 0) throw InvalidInput("agent count must be non-negative");
  if (solution.horizon() != T) throw InvalidInput("solution horizon does not match the model");
  for (const auto& p : solution.P)
    if (p.rows() != K || p.cols() != J) throw InvalidInput("solution CCP shape does not match the model");
  if (initial_dist.size() != J) throw InvalidInput("initial distribution must have num_states entries");
  if ((initial_dist.array() < 0.0).any() || !initial_dist.allFinite() ||
      std::abs(initial_dist.sum() - 1.0) > kStochasticTol)
    throw InvalidInput("initial distribution is not a probability simplex");

  PanelData panel;
  panel.num_agents = n_agents;
  panel.horizon = T;
  panel.records.resize(static_cast<std::size_t>(n_agents) * T);

  // per-row views so categorical() can index without temporaries
  std::vector<std::vector<std::vector<double>>> ccp(T, std::vector<std::vector<double>>(J, std::vector<double>(K)));
  for (int t = 0; t < T; ++t)
    for (int x = 0; x < J; ++x)
      for (int i = 0; i < K; ++i) ccp[t][x][i] = solution.P[t](i, x);
  std::vector<std::vector<std::vector<double>>> trans(K, std::vector<std::vector<double>>(J, std::vector<double>(J)));
  for (int i = 0; i < K; ++i)
    for (int x = 0; x < J; ++x)
      for (int y = 0; y < J; ++y) trans[i][x][y] = model.transitions[i](x, y);
  std::vector<double> init(initial_dist.data(), initial_dist.data() + J);

  auto run = [&](int begin, int end) {
    for (int n = begin; n < end; ++n) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(n)}));
      int x = rng.categorical(init);
      for (int t = 0; t < T; ++t) {
        const int a = rng.categorical(ccp[t][x]);
        panel.records[static_cast<std::size_t>(n) * T + t] = {n, t + 1, x, a};
        x = rng.categorical(trans[a][x]);
      }
    }
  };

  jobs = std::clamp(jobs, 1, std::max(1, n_agents));
  if (jobs == 1) {
    run(0, n_agents);
  } else {
    std::vector<std::jthread> workers;
    const int chunk = (n_agents + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
      const int b = w * chunk;
      const int e = std::min(n_agents, b + chunk);
      if (b < e) workers.emplace_back(run, b, e);
    }
  }
  return panel;
}

using BoolTable = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Sample choice frequencies per (t, x). Unvisited cells hold NaN.
struct CcpEstimate {
  std::vector<Mat> P_hat;                // T of K x J
  std::vector<Eigen::MatrixXi> counts;   // T of K x J
  BoolTable visited;                     // T x J
};

inline CcpEstimate empirical_ccps(const PanelData& panel, int num_states, int num_actions, int horizon) {
  if (panel.horizon != horizon) throw InvalidInput("panel horizon does not match");
  panel.validate(num_states, num_actions);
  CcpEstimate est;
  est.counts.assign(horizon, Eigen::MatrixXi::Zero(num_actions, num_states));
  for (const auto& r : panel.records) est.counts[r.period - 1](r.action, r.state) += 1;
  est.P_hat.assign(horizon, Mat::Constant(num_actions, num_states, std::numeric_limits<double>::quiet_NaN()));
  est.visited = BoolTable::Constant(horizon, num_states, false);
  for (int t = 0; t < horizon; ++t) {
    for (int x = 0; x < num_states; ++x) {
      const int total = est.counts[t].col(x).sum();
      if (total == 0) continue;
      est.visited(t, x) = true;
      for (int i = 0; i < num_actions; ++i)
        est.P_hat[t](i, x) = static_cast<double>(est.counts[t](i, x)) / total;
    }
  }
  return est;
}

/// Empirical CCPs made strictly positive for log ratios: any (t, x) cell with
/// a zero count gets add-one-half smoothing, (c + 1/2) / (n + K/2).
struct SmoothedCcps {
  std::vector<Mat> P;
  int smoothed_cells = 0;   // (t, x) cells that were adjusted
  int unvisited_cells = 0;  // of those, cells with no observations (now uniform)
};

inline SmoothedCcps smooth_ccps(const CcpEstimate& est) {
  SmoothedCcps out;
  out.P = est.P_hat;
  for (std::size_t t = 0; t < est.counts.size(); ++t) {
    const auto& c = est.counts[t];
    for (Eigen::Index x = 0; x < c.cols(); ++x) {
      if (c.col(x).minCoeff() > 0) continue;
      const double n = c.col(x).sum();
      const double K = static_cast<double>(c.rows());
      for (Eigen::Index i = 0; i < c.rows(); ++i) out.P[t](i, x) = (c(i, x) + 0.5) / (n + 0.5 * K);
      ++out.smoothed_cells;
      if (n == 0) ++out.unvisited_cells;
    }
  }
  return out;
}

/// Frequency estimator of f(x' | x, i) pooled over periods; the exact MLE for
/// unrestricted Markov cells. Unvisited (x, i) rows are uniform and flagged.
struct TransitionEstimate {
  std::vector<Mat> f_hat;                // K of J x J
  std::vector<Eigen::MatrixXi> counts;   // K of J x J
  BoolTable visited;                     // K x J
};

inline TransitionEstimate estimate_transitions(const PanelData& panel, int num_states, int num_actions) {
  panel.validate(num_states, num_actions);
  if (panel.horizon < 2) throw InvalidInput("transition estimation needs at least two periods");
  TransitionEstimate est;
  est.counts.assign(num_actions, Eigen::MatrixXi::Zero(num_states, num_states));
  for (int a = 0; a < panel.num_agents; ++a) {
    for (int t = 0; t + 1 < panel.horizon; ++t) {
      const auto& now = panel.at(a, t);
      est.counts[now.action](now.state, panel.at(a, t + 1).state) += 1;
    }
  }
  est.f_hat.assign(num_actions, Mat::Constant(num_states, num_states, 1.0 / num_states));
  est.visited = BoolTable::Constant(num_actions, num_states, false);
  for (int i = 0; i < num_actions; ++i) {
    for (int x = 0; x < num_states; ++x) {
      const int total = est.counts[i].row(x).sum();
      if (total == 0) continue;
      est.visited(i, x) = true;
      for (int y = 0; y < num_states; ++y) est.f_hat[i](x, y) = static_cast<double>(est.counts[i](x, y)) / total;
    }
  }
  return est;
}

// ---------------------------------------------------------------------------
// CSV: header `agent,period,state,action`, LF line endings.

inline std::string panel_to_csv(const PanelData& panel) {
  std::string out = "agent,period,state,action\n";
  out.reserve(out.size() + panel.records.size() * 16);
  for (const auto& r : panel.records) {
    out += std::to_string(r.agent);
    out += ',';
    out += std::to_string(r.period);
    out += ',';
    out += std::to_string(r.state);
    out += ',';
    out += std::to_string(r.action);
    out += '\n';
  }
  return out;
}

namespace detail {
inline int parse_int_field(std::string_view s, std::size_t line) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw InvalidInput("panel line " + std::to_string(line) + ": '" + std::string(s) + "' is not an integer");
  return v;
}
}  // namespace detail

/// Parses a panel and reorders it by (agent, period). The result is checked
/// for balance; index ranges are checked later against a model.
inline PanelData panel_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("panel file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "agent,period,state,action") throw InvalidInput("panel header must be 'agent,period,state,action'");
  std::map<int, std::vector<PanelRecord>> by_agent;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view sv(line);
    int fields[4];
    for (int k = 0; k < 4; ++k) {
      const auto comma = sv.find(',');
      if ((k < 3) == (comma == std::string_view::npos))
        throw InvalidInput("panel line " + std::to_string(lineno) + ": expected 4 comma-separated fields");
      fields[k] = detail::parse_int_field(sv.substr(0, comma), lineno);
      if (k < 3) sv.remove_prefix(comma + 1);
    }
    by_agent[fields[0]].push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  PanelData panel;
  panel.num_agents = static_cast<int>(by_agent.size());
  for (auto& [id, recs] : by_agent) {
    std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.period < b.period; });
    if (panel.horizon == 0) panel.horizon = static_cast<int>(recs.size());
    if (static_cast<int>(recs.size()) != panel.horizon)
      throw InvalidInput("unbalanced panel: agent " + std::to_string(id) + " has " + std::to_string(recs.size()) +
                         " records, expected " + std::to_string(panel.horizon));
    for (int t = 0; t < panel.horizon; ++t)
      if (recs[t].period != t + 1)
        throw InvalidInput("agent " + std::to_string(id) + " does not have contiguous periods starting at 1");
    panel.records.insert(panel.records.end(), recs.begin(), recs.end());
  }
  if (panel.horizon == 0) panel.horizon = 1;
  return panel;
}

}  // namespace hyperdisc

// Acceptance suite. Each criterion prints one line:
//   criterion N: PASS|FAIL  <measurements>  (<seconds> s, limit <seconds> s)
// With --criterion N only that criterion runs. --expect-fail inverts the exit
// status for criteria that are known not to hold; the line still says FAIL.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "hyperdisc/identification.hpp"
#include "hyperdisc/montecarlo.hpp"
#include "support.hpp"

using namespace hyperdisc;
using hyperdisc::testing::exponential_oracle;
using hyperdisc::testing::random_model;
using hyperdisc::testing::same_state_model;

namespace {

constexpr std::uint64_t kSeed = 20240101;

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  if (v != 0.0 && (std::abs(v) < 1e-3 || std::abs(v) >= 1e5))
    s << std::scientific << std::setprecision(precision) << v;
  else
    s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------------------
// 1. Exact-CCP round trip over random same-state models.

constexpr int kRoundTripModels = 50;
constexpr double kRoundTripTol = 1e-6;
constexpr double kWellPosedTol = 1e-7;  // generator-level rank screen

bool well_posed(const ModelSpec& m) {
  try {
    const PairSystem ps = build_pair_system(m.transitions, m.equality_pairs, kWellPosedTol);
    const LinearSystem sys = assemble_system(solve_backward(m).P, ps);
    return numerical_rank(singular_values_of(sys.A), kWellPosedTol) == sys.A.rows() &&
           check_assumptions(m).all_passed();
  } catch (const AssumptionViolation&) {
    return false;
  }
}

Outcome criterion_round_trip() {
  Rng rng(kSeed);
  int accepted = 0, drawn = 0, failures = 0;
  double worst = 0.0;
  std::uint64_t seed = kSeed;
  while (accepted < kRoundTripModels) {
    const int J = rng.uniform() < 0.5 ? 2 : 3;
    const int K = rng.uniform() < 0.5 ? 2 : 3;
    const double beta = 0.6 + 0.35 * rng.uniform();
    const double delta = 0.6 + 0.35 * rng.uniform();
    const ModelSpec m = same_state_model(seed++, J, K, 3 * J + 1, beta, delta);
    ++drawn;
    if (!well_posed(m)) continue;
    ++accepted;
    const auto P = solve_backward(m).P;
    for (auto mode : {SolveMode::RightInverse, SolveMode::ConstrainedLs}) {
      IdentifyOptions opt;
      opt.mode = mode;
      try {
        const IdentificationResult r = identify(P, m.transitions, m.equality_pairs, opt);
        const double err = std::max(std::abs(r.beta_hat - beta), std::abs(r.delta_hat - delta));
        worst = std::max(worst, err);
        if (!(err < kRoundTripTol)) ++failures;
      } catch (const std::exception&) {
        ++failures;
      }
    }
  }
  return {failures == 0, std::to_string(accepted) + " models (" + std::to_string(drawn) +
                             " drawn), max |error| " + fmt(worst) + " (tol " + fmt(kRoundTripTol) + "), " +
                             std::to_string(failures) + " failed solves"};
}

// ---------------------------------------------------------------------------
// 2. Exponential nesting.

constexpr double kNestingTol = 1e-8;

Outcome criterion_nesting() {
  std::uint64_t seed = kSeed;
  ModelSpec m;
  do m = same_state_model(seed++, 3, 2, 10, 1.0, 0.9);
  while (!well_posed(m));
  const PairSystem ps = build_pair_system(m.transitions, m.equality_pairs, kDefaultRankTol);
  const LinearSystem sys = assemble_system(solve_backward(m).P, ps);
  const IdentificationResult r = solve_discounts(sys.A, sys.B);
  return {std::abs(r.c1) < kNestingTol, "|c1| " + fmt(std::abs(r.c1)) + " (tol " + fmt(kNestingTol) +
                                            "), beta_hat " + fmt(r.beta_hat, 10)};
}

// ---------------------------------------------------------------------------
// 3. Macro-state round trip at the minimum horizon.

constexpr double kMacroTol = 1e-6;

Outcome criterion_macro() {
  const double beta = 0.85, delta = 0.9;
  const ModelSpec m = same_state_model(kSeed, 3, 2, 4, beta, delta);
  Rng rng(kSeed);
  Mat H(3, 3);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) H(r, c) = rng.uniform() + 0.05;
    H.row(r) /= H.row(r).sum();
  }
  try {
    const PairSystem ps = build_pair_system(m.transitions, m.equality_pairs, kDefaultRankTol);
    const LinearSystem sys = assemble_system_macro(solve_backward(m).P, ps, H);
    const IdentificationResult r = solve_discounts_macro(sys.A, sys.B);
    const double err = std::max(std::abs(r.beta_hat - beta), std::abs(r.delta_hat - delta));
    return {err < kMacroTol, "beta_hat " + fmt(r.beta_hat, 8) + ", delta_hat " + fmt(r.delta_hat, 8) +
                                 ", max |error| " + fmt(err) + " (tol " + fmt(kMacroTol) + ")"};
  } catch (const AssumptionViolation& e) {
    return {false, e.what()};
  }
}

// ---------------------------------------------------------------------------
// 4 and 5. Desk-scale Monte Carlo reproductions.

struct Target {
  std::string parameter;
  double value;
  double tol;
};

Outcome monte_carlo(double beta, double delta, const std::vector<Target>& targets) {
  McConfig cfg;
  cfg.beta = beta;
  cfg.delta = delta;
  cfg.sample_sizes = {2000};
  cfg.replications = 100;
  cfg.base_seed = kSeed;
  cfg.jobs = jobs();
  const auto records = run_replications(cfg);
  const McSummary s = summarize(records, cfg);
  bool ok = true;
  std::string detail;
  for (const auto& t : targets) {
    const SummaryRow& row = s.at(t.parameter, 2000);
    const bool hit = std::abs(row.mean - t.value) <= t.tol;
    ok = ok && hit && row.failures == 0;
    detail += t.parameter + " " + fmt(row.mean) + " (target " + fmt(t.value) + " +/- " + fmt(t.tol) + ", sd " +
              fmt(row.sd) + ")" + (hit ? "" : " MISS") + "; ";
  }
  detail += std::to_string(s.at("alpha0", 2000).failures) + " failed replications";
  return {ok, detail};
}

Outcome criterion_table1() {
  return monte_carlo(0.85, 0.9,
                     {{"alpha0", 0.494, 0.01}, {"alpha1", -0.199, 0.005}, {"delta", 0.819, 0.10}, {"beta", 0.795, 0.11}});
}

Outcome criterion_table2() { return monte_carlo(0.7, 0.75, {{"alpha0", 0.498, 0.01}, {"delta", 0.677, 0.13}}); }

// ---------------------------------------------------------------------------
// 6. Forward-model invariants.

constexpr double kInvariantTol = 1e-10;

Outcome criterion_invariants() {
  Rng rng(kSeed);
  double simplex = 0.0, hotz_miller = 0.0, value_gap = 0.0, summation = 0.0, oracle = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int J = 2 + k % 4;
    const int K = 2 + k % 2;
    const int T = 4 + k % 5;
    const double beta = 0.5 + 0.5 * rng.uniform();
    const double delta = 0.5 + 0.49 * rng.uniform();
    const ModelSpec m = random_model(kSeed + k, J, K, T, beta, delta);
    const ValueSolution s = solve_backward(m);
    for (int t = 0; t < T; ++t) {
      const Mat& p = s.P[t];
      simplex = std::max(simplex, (p.colwise().sum().array() - 1.0).abs().maxCoeff());
      if (p.minCoeff() < 0.0) simplex = INFINITY;
      for (int x = 0; x < J; ++x)
        for (int i = 0; i < K; ++i)
          hotz_miller = std::max(hotz_miller, std::abs(std::log(p(i, x) / p(K - 1, x)) -
                                                       (s.W[t](i, x) - s.W[t](K - 1, x))));
      const Vec next = t + 1 < T ? s.V[t + 1] : Vec::Zero(J);
      const Mat gap = choice_values(m.utility, m.transitions, 1.0, delta, next) -
                      choice_values(m.utility, m.transitions, beta, delta, next);
      for (int i = 0; i < K; ++i)
        for (int x = 0; x < J; ++x) {
          double ev = 0.0, head = next(J - 1);
          for (int y = 0; y < J; ++y) ev += m.transitions[i](x, y) * next(y);
          for (int y = 0; y + 1 < J; ++y) head += m.transitions[i](x, y) * (next(y) - next(J - 1));
          value_gap = std::max(value_gap, std::abs(gap(i, x) - (1.0 - beta) * delta * ev));
          summation = std::max(summation, std::abs(ev - head));
        }
    }
    ModelSpec exp_model = m;
    exp_model.beta = 1.0;
    const ValueSolution se = solve_backward(exp_model);
    const auto o = exponential_oracle(exp_model);
    for (int t = 0; t < T; ++t)
      for (int x = 0; x < J; ++x) {
        oracle = std::max(oracle, std::abs(se.V[t](x) - o.V[t][x]));
        for (int i = 0; i < K; ++i) oracle = std::max(oracle, std::abs(se.P[t](i, x) - o.P[t][i][x]));
      }
  }
  const double worst = std::max({simplex, hotz_miller, value_gap, summation, oracle});
  return {worst < kInvariantTol, "20 models; simplex " + fmt(simplex) + ", Hotz-Miller " + fmt(hotz_miller) +
                                     ", long-run gap " + fmt(value_gap) + ", summation " + fmt(summation) +
                                     ", beta=1 oracle " + fmt(oracle) + " (tol " + fmt(kInvariantTol) + ")"};
}

// ---------------------------------------------------------------------------
// 7. Diagnostics name the failed assumption; the Monte Carlo design passes.

template <class Fn>
std::string raised(Fn&& fn) {
  try {
    fn();
  } catch (const AssumptionViolation& e) {
    return std::string(label(e.which()));
  } catch (const std::exception&) {
    return "other";
  }
  return "none";
}

Outcome criterion_diagnostics() {
  std::uint64_t seed = kSeed;
  ModelSpec m;
  do m = same_state_model(seed++, 3, 2, 10, 0.85, 0.9);
  while (!well_posed(m));
  const auto P = solve_backward(m).P;

  ModelSpec dup = m;
  dup.transitions[1] = dup.transitions[0];
  const std::string pair_rank = raised([&] { identify(P, dup.transitions, dup.equality_pairs); });

  const std::vector<Mat> short_path(P.begin(), P.begin() + 7);  // 3J-1 = 8 needed
  const std::string period_count = raised([&] { identify(short_path, m.transitions, m.equality_pairs); });

  const PairSystem ps = build_pair_system(m.transitions, m.equality_pairs, kDefaultRankTol);
  LinearSystem sys = assemble_system(P, ps);
  sys.A.row(3) = sys.A.row(0);
  const std::string system_rank = raised([&] { solve_discounts(sys.A, sys.B); });

  IdentifyOptions macro;
  macro.macro_H = Mat::Constant(2, 2, 0.5);
  const std::vector<Mat> four(P.begin(), P.begin() + 4);  // (T-2)M = 4 < 6
  const std::string macro_count = raised([&] { identify(four, m.transitions, m.equality_pairs, macro); });

  McConfig cfg;
  cfg.base_seed = kSeed;
  const AssumptionReport design = check_assumptions(design_model(cfg));
  std::string failed_checks;
  for (const auto& c : design.checks)
    if (!c.passed) failed_checks += std::string(label(c.which)) + " (" + c.detail + ") ";

  const bool named = pair_rank == "4(b)" && period_count == "5(a)" && system_rank == "5(b)" && macro_count == "8(a)";
  return {named && design.all_passed(),
          "raised 4(b)->" + pair_rank + ", 5(a)->" + period_count + ", 5(b)->" + system_rank + ", 8(a)->" +
              macro_count + "; design checks " +
              (design.all_passed() ? std::string("all passed") : "failed: " + failed_checks)};
}

// ---------------------------------------------------------------------------
// 8. Simulated frequencies converge to the model CCPs.

constexpr int kConsistencyAgents = 100000;
constexpr double kConsistencyTol = 0.01;

Outcome criterion_consistency() {
  McConfig cfg;
  cfg.base_seed = kSeed;
  const ModelSpec m = design_model(cfg);
  const ValueSolution s = solve_backward(m);
  const PanelData panel =
      simulate_panel(m, s, kConsistencyAgents, uniform_distribution(m.num_states), kSeed, jobs());
  const CcpEstimate e = empirical_ccps(panel, m.num_states, m.num_actions, m.horizon);
  double worst = 0.0;
  int cells = 0;
  for (int t = 0; t < m.horizon; ++t)
    for (int x = 0; x < m.num_states; ++x) {
      if (!e.visited(t, x)) continue;
      ++cells;
      worst = std::max(worst, (e.P_hat[t].col(x) - s.P[t].col(x)).cwiseAbs().maxCoeff());
    }
  return {worst <= kConsistencyTol, "N " + std::to_string(kConsistencyAgents) + ", " + std::to_string(cells) +
                                        " visited cells, max |P_hat - P| " + fmt(worst, 4) + " (tol " +
                                        fmt(kConsistencyTol) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyperdisc acceptance suite"};
  int only = 0;
  bool expect_fail = false;
  app.add_option("--criterion", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  app.add_flag("--expect-fail", expect_fail, "succeed only if the selected criteria fail");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, 10.0, criterion_round_trip},  {2, 1.0, criterion_nesting},        {3, 1.0, criterion_macro},
      {4, 7200.0, criterion_table1},    {5, 7200.0, criterion_table2},      {6, 5.0, criterion_invariants},
      {7, 1.0, criterion_diagnostics}, {8, 30.0, criterion_consistency},
  };

  bool all_passed = true;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.time_limit_s;
    const bool passed = o.passed && in_time;
    all_passed = all_passed && passed;
    std::cout << "criterion " << c.id << ": " << (passed ? "PASS" : "FAIL") << "  " << o.detail << "  ("
              << fmt(secs, 2) << " s, limit " << fmt(c.time_limit_s, 0) << " s" << (in_time ? "" : ", too slow")
              << ")" << std::endl;
  }
  if (expect_fail) {
    if (all_passed) std::cout << "unexpected pass" << std::endl;
    return all_passed ? 1 : 0;
  }
  return all_passed ? 0 : 1;
}

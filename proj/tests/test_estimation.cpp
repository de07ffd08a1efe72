#include <gtest/gtest.h>

#include <cmath>

#include "hyperdisc/estimation.hpp"
#include "hyperdisc/montecarlo.hpp"
#include "support.hpp"

using namespace hyperdisc;
using hyperdisc::testing::present_bias_oracle;
using hyperdisc::testing::random_model;

namespace {

UtilitySpec free_table_spec(int J, int K) {
  UtilitySpec us;
  us.form = UtilityForm::FreeTable;
  us.num_states = J;
  us.num_actions = K;
  us.reference_action = K - 1;
  us.state_values = Vec::LinSpaced(J, 0.0, J - 1.0);
  return us;
}

Vec free_table_theta(const ModelSpec& m) {
  Vec theta((m.num_actions - 1) * m.num_states);
  for (int i = 0; i + 1 < m.num_actions; ++i)
    for (int x = 0; x < m.num_states; ++x) theta(i * m.num_states + x) = m.utility(i, x);
  return theta;
}

struct DesignData {
  McConfig cfg;
  ModelSpec model;
  UtilitySpec us;
  PanelData panel;
  TransitionEstimate f_hat;
};

DesignData design_data(int n, std::uint64_t seed) {
  DesignData d;
  d.model = design_model(d.cfg);
  d.us = design_utility_spec(d.cfg);
  d.panel = simulate_panel(d.model, solve_backward(d.model), n, uniform_distribution(d.cfg.num_states), seed);
  d.f_hat = estimate_transitions(d.panel, d.cfg.num_states, 2);
  return d;
}

MleConfig design_mle(const McConfig& cfg) {
  MleConfig m;
  Vec theta(2);
  theta << cfg.alpha0, cfg.alpha1;
  m.starts = default_starts(theta);
  return m;
}

}  // namespace

TEST(LogLikelihood, UniformChoiceValues) {
  ModelSpec m = random_model(1, 3, 3, 4, 0.8, 0.9);
  m.transitions.assign(3, m.transitions[0]);
  const UtilitySpec us = free_table_spec(3, 3);
  const PanelData p = simulate_panel(m, solve_backward(m), 50, uniform_distribution(3), 2);
  const double ll = log_likelihood(choice_counts(p, 3, 3), us, {Vec::Zero(6), 0.8, 0.9}, m.transitions);
  EXPECT_NEAR(ll, 50 * 4 * std::log(1.0 / 3.0), 1e-9);
}

TEST(LogLikelihood, TwoAgentsTwoPeriodsByHand) {
  ModelSpec m = random_model(2, 2, 2, 2, 0.7, 0.8);
  m.utility.row(1).setZero();
  const auto o = present_bias_oracle(m);
  PanelData p;
  p.num_agents = 2;
  p.horizon = 2;
  p.records = {{0, 1, 0, 1}, {0, 2, 1, 0}, {1, 1, 1, 1}, {1, 2, 1, 1}};
  const double expected = std::log(o.P[0][1][0]) + std::log(o.P[1][0][1]) + std::log(o.P[0][1][1]) +
                          std::log(o.P[1][1][1]);
  const double ll = log_likelihood(choice_counts(p, 2, 2), free_table_spec(2, 2), {free_table_theta(m), 0.7, 0.8},
                                   m.transitions);
  EXPECT_NEAR(ll, expected, 1e-12);
}

TEST(LogLikelihood, MatchesProductOfOracleProbabilities) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ModelSpec m = random_model(100 + seed, 4, 3, 6, 0.75, 0.9);
    m.utility.row(2).setZero();
    const auto o = present_bias_oracle(m);
    const PanelData p = simulate_panel(m, solve_backward(m), 300, uniform_distribution(4), seed);
    double expected = 0.0;
    for (const auto& r : p.records) expected += std::log(o.P[r.period - 1][r.action][r.state]);
    const double ll =
        log_likelihood(choice_counts(p, 4, 3), free_table_spec(4, 3), {free_table_theta(m), 0.75, 0.9}, m.transitions);
    EXPECT_NEAR(ll, expected, 1e-9);
  }
}

TEST(LogLikelihood, RejectsOutOfRangeDiscounts) {
  const ModelSpec m = random_model(3, 2, 2, 3, 0.7, 0.8);
  const ChoiceCounts c(3, Eigen::MatrixXi::Ones(2, 2));
  EXPECT_THROW(log_likelihood(c, free_table_spec(2, 2), {Vec::Zero(2), 0.0, 0.8}, m.transitions), InvalidInput);
  EXPECT_THROW(log_likelihood(c, free_table_spec(2, 2), {Vec::Zero(2), 0.7, 1.0}, m.transitions), InvalidInput);
  EXPECT_NO_THROW(log_likelihood(c, free_table_spec(2, 2), {Vec::Zero(2), 1.0, 0.8}, m.transitions));
}

TEST(LogLikelihood, TransitionBlockByHand) {
  const ModelSpec m = random_model(4, 2, 2, 3, 0.7, 0.8);
  PanelData p;
  p.num_agents = 1;
  p.horizon = 3;
  p.records = {{0, 1, 0, 1}, {0, 2, 1, 0}, {0, 3, 1, 1}};
  EXPECT_NEAR(transition_log_likelihood(p, m.transitions),
              std::log(m.transitions[1](0, 1)) + std::log(m.transitions[0](1, 1)), 1e-15);
}

TEST(UtilitySpec, Layouts) {
  UtilitySpec lin;
  lin.num_states = 3;
  lin.num_actions = 3;
  lin.reference_action = 0;
  lin.state_values = Vec::LinSpaced(3, 0.0, 2.0);
  Vec theta(4);
  theta << 1.0, 2.0, -1.0, 0.5;
  const Mat u = lin.utility(theta);
  EXPECT_EQ(u.row(0), Eigen::RowVectorXd::Zero(3));
  EXPECT_DOUBLE_EQ(u(1, 2), 5.0);
  EXPECT_DOUBLE_EQ(u(2, 1), -0.5);
  EXPECT_THROW(lin.utility(Vec::Zero(3)), InvalidInput);

  UtilitySpec one_action = free_table_spec(2, 2);
  one_action.num_actions = 1;
  EXPECT_THROW(one_action.validate(), InvalidInput);
}

TEST(ParamTransform, RoundTripAndMonotone) {
  const ParamTransform tr{2, std::nullopt, std::nullopt};
  Parameters p{Vec::Constant(2, 0.3), 0.85, 0.9};
  const Parameters back = tr.from_raw(tr.to_raw(p));
  EXPECT_NEAR(back.beta, 0.85, 1e-15);
  EXPECT_NEAR(back.delta, 0.9, 1e-15);
  double prev = 0.0;
  for (double r = -30.0; r <= 30.0; r += 0.5) {
    const double v = logistic(r);
    EXPECT_GT(v, prev);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
  EXPECT_THROW(logit(1.0), InvalidInput);
  const ParamTransform fixed{2, 1.0, std::nullopt};
  EXPECT_EQ(fixed.raw_size(), 3);
  EXPECT_EQ(fixed.from_raw(Vec::Zero(3)).beta, 1.0);
}

TEST(Optimizer, NumericalGradientOfKnownFunction) {
  const Objective f = [](const Vec& x) { return std::sin(x(0)) * std::exp(x(1)) + x(0) * x(0) * x(1); };
  Rng rng(5);
  for (int k = 0; k < 10; ++k) {
    Vec x(2);
    x << 4 * rng.uniform() - 2, 2 * rng.uniform() - 1;
    const Vec g = numerical_gradient(f, x, 1e-5);
    Vec exact(2);
    exact << std::cos(x(0)) * std::exp(x(1)) + 2 * x(0) * x(1), std::sin(x(0)) * std::exp(x(1)) + x(0) * x(0);
    EXPECT_LT((g - exact).cwiseAbs().maxCoeff(), 1e-4 * std::max(1.0, exact.cwiseAbs().maxCoeff()));
  }
}

// Finite-difference gradients of the likelihood agree with a Richardson
// extrapolation at a coarser step.
TEST(Optimizer, LikelihoodGradientIsStable) {
  const DesignData d = design_data(500, 1);
  const ChoiceCounts c = choice_counts(d.panel, 5, 2);
  const ParamTransform tr{2, std::nullopt, std::nullopt};
  const Objective f = negative_loglik_objective(c, d.us, d.f_hat.f_hat, tr);
  Rng rng(6);
  for (int k = 0; k < 10; ++k) {
    Parameters p{Vec(2), 0.5 + 0.45 * rng.uniform(), 0.5 + 0.45 * rng.uniform()};
    p.theta_u << rng.uniform(), -0.4 * rng.uniform();
    const Vec x = tr.to_raw(p);
    const Vec g = numerical_gradient(f, x, 1e-5);
    const Vec g1 = numerical_gradient(f, x, 1e-3);
    const Vec g2 = numerical_gradient(f, x, 5e-4);
    const Vec richardson = (4.0 * g2 - g1) / 3.0;
    EXPECT_LT((g - richardson).cwiseAbs().maxCoeff(), 1e-4 * std::max(1.0, richardson.cwiseAbs().maxCoeff()));
  }
}

TEST(Optimizer, Rosenbrock) {
  const Objective f = [](const Vec& x) {
    return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2);
  };
  OptimizerOptions opt;
  opt.max_iterations = 2000;
  const OptimizerResult r = minimize_bfgs(f, Vec::Constant(2, -1.2), opt);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 1.0, 1e-4);
  EXPECT_NEAR(r.x(1), 1.0, 1e-4);
}

TEST(FitMle, NeverWorseThanTruthWhenTruthIsAStart) {
  const DesignData d = design_data(2000, 2);
  MleConfig cfg = design_mle(d.cfg);
  Parameters truth{Vec(2), d.cfg.beta, d.cfg.delta};
  truth.theta_u << d.cfg.alpha0, d.cfg.alpha1;
  cfg.starts.push_back(truth);
  const MleResult r = fit_mle(d.panel, d.us, d.f_hat, cfg);
  EXPECT_GE(r.loglik, log_likelihood(d.panel, d.us, truth, d.f_hat));
  EXPECT_EQ(r.per_start.size(), 10u);
  for (const auto& s : r.per_start)
    if (s.converged) EXPECT_LE(s.final_loglik, r.loglik);
}

TEST(FitMle, DeterministicAcrossJobCounts) {
  const DesignData d = design_data(1000, 3);
  MleConfig cfg = design_mle(d.cfg);
  const MleResult a = fit_mle(d.panel, d.us, d.f_hat, cfg);
  cfg.jobs = 3;
  const MleResult b = fit_mle(d.panel, d.us, d.f_hat, cfg);
  EXPECT_EQ(a.estimate.theta_u, b.estimate.theta_u);
  EXPECT_EQ(a.estimate.beta, b.estimate.beta);
  EXPECT_EQ(a.estimate.delta, b.estimate.delta);
  EXPECT_EQ(a.best_start_index, b.best_start_index);
}

TEST(FitMle, FixingBetaAtOneNestsTheExponentialModel) {
  const DesignData d = design_data(2000, 4);
  MleConfig cfg = design_mle(d.cfg);
  const MleResult free_fit = fit_mle(d.panel, d.us, d.f_hat, cfg);
  cfg.fixed_beta = 1.0;
  const MleResult nested = fit_mle(d.panel, d.us, d.f_hat, cfg);
  EXPECT_EQ(nested.estimate.beta, 1.0);
  EXPECT_LE(nested.loglik, free_fit.loglik + 1e-6);
}

TEST(FitMle, RecoversInterceptAtModerateSample) {
  const DesignData d = design_data(8000, 5);
  const MleResult r = fit_mle(d.panel, d.us, d.f_hat, design_mle(d.cfg));
  EXPECT_NEAR(r.estimate.theta_u(0), 0.5, 0.042);
  EXPECT_NEAR(r.estimate.theta_u(1), -0.2, 0.03);
}

TEST(FitMle, ReportsNonConvergence) {
  const DesignData d = design_data(500, 6);
  MleConfig cfg;
  Vec far(2);
  far << 8.0, 3.0;
  cfg.starts = {{far, 0.2, 0.2}, {-far, 0.3, 0.3}};
  cfg.max_iterations = 1;
  try {
    fit_mle(d.panel, d.us, d.f_hat, cfg);
    FAIL();
  } catch (const MleNonConvergence& e) {
    EXPECT_EQ(e.records().size(), 2u);
    for (const auto& r : e.records()) EXPECT_FALSE(r.converged);
  }
}

TEST(FitMle, NeedsStarts) {
  const DesignData d = design_data(100, 7);
  EXPECT_THROW(fit_mle(d.panel, d.us, d.f_hat, MleConfig{}), InvalidInput);
}

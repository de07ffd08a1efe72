#pragma once

// Closed-form recovery of (beta, delta) and utilities from choice
// probabilities and transitions.
//
// Notation. n = J-1 non-reference states. F_i(x) is the first n entries of
// the transition row f(.|x, i). For a list of equal-utility pairs
// (k, l, x1, x2) the log CCP ratios D_t = log P_{t,k}(x1) / P_{t,l}(x2)
// satisfy D_t = beta*delta * Ftilde * Vdiff_{t+1}, where Ftilde stacks
// F_k(x1) - F_l(x2) and Vdiff is the value vector differenced against the
// reference state. Substituting into the differenced value recursion and
// first-differencing over time gives, for t = 3..T,
//
//   dlogP_{t,K} = [I, c1*I, c2*I] * [FK Ftilde^-1 dD_t; Phi_t; Ftilde^-1 dD_{t-1}]
//
// with c1 = (1-beta)/beta, c2 = -1/(beta*delta), dX_t = X_t - X_{t-1}, and
// Phi_t = G_t Ftilde^-1 D_t - G_{t-1} Ftilde^-1 D_{t-1},
// G_t = P_t F - P_{t,J} F_J. Stacking the T-2 columns gives [I c1 I c2 I] A = B.
//
// The log ratio equals the choice-value difference exactly only for
// same-state pairs (x1 == x2). Cross-state pairs pick up the inclusive-value
// gap logsumexp W(x1) - logsumexp W(x2); it is reported, never corrected.

#include <iomanip>
#include <optional>
#include <sstream>
#include <queue>
#include <string>
#include <vector>

#include "hyperdisc/model.hpp"

namespace hyperdisc {

inline constexpr double kDefaultRankTol = 1e-10;

enum class SolveMode { RightInverse, ConstrainedLs };

inline std::string to_string(SolveMode m) {
  return m == SolveMode::RightInverse ? "right-inverse" : "constrained-ls";
}

/// Transition-difference matrices built from the equality pairs.
struct PairSystem {
  int num_states = 0;
  int num_actions = 0;
  std::vector<EqualityPair> pairs;
  Mat F_tilde;      // pairs x n
  Mat F_tilde_inv;  // n x pairs; exact inverse when square, else left pseudo-inverse
  Mat F_tilde_K;    // n x n, F_K(x) - F_K(J)
  Mat F_stack;      // nK x n, block i row x = F_i(x)
  Mat F_J_stack;    // nK x n, block i every row = F_i(J)
  Vec singular_values;
};

inline Eigen::RowVectorXd transition_head(const std::vector<Mat>& f, int action, int state) {
  const Eigen::Index n = f[action].cols() - 1;
  return f[action].row(state).head(n);
}

inline Vec singular_values_of(const Mat& m) {
  if (m.size() == 0) return Vec();
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues();
}

/// Number of singular values above rank_tol * largest.
inline int numerical_rank(const Vec& sv, double rank_tol) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol * sv(0)) ++r;
  return r;
}

inline PairSystem build_pair_system(const std::vector<Mat>& transitions, const std::vector<EqualityPair>& pairs,
                                    double rank_tol = kDefaultRankTol) {
  if (transitions.empty()) throw InvalidInput("no transition matrices");
  const int K = static_cast<int>(transitions.size());
  const int J = static_cast<int>(transitions.front().rows());
  if (J < 2) throw InvalidInput("identification needs at least two states");
  const int n = J - 1;
  for (int i = 0; i < K; ++i) {
    if (transitions[i].rows() != J || transitions[i].cols() != J)
      throw InvalidInput("transition matrices must all be J x J");
  }
  if (static_cast<int>(pairs.size()) < n)
    throw InvalidInput("need at least " + std::to_string(n) + " equality pairs, got " + std::to_string(pairs.size()));
  for (const auto& p : pairs) check_pair_indices(p, K, J);

  PairSystem ps;
  ps.num_states = J;
  ps.num_actions = K;
  ps.pairs = pairs;
  const auto np = static_cast<Eigen::Index>(pairs.size());
  ps.F_tilde.resize(np, n);
  for (Eigen::Index r = 0; r < np; ++r) {
    const auto& p = pairs[r];
    ps.F_tilde.row(r) = transition_head(transitions, p.k, p.x1) - transition_head(transitions, p.l, p.x2);
  }
  ps.singular_values = singular_values_of(ps.F_tilde);
  const int rank = numerical_rank(ps.singular_values, rank_tol);
  if (rank < n)
    throw AssumptionViolation(Assumption::PairRank, "transition-difference matrix of the equality pairs has rank " +
                                                        std::to_string(rank) + " < " + std::to_string(n));
  ps.F_tilde_inv = ps.F_tilde.colPivHouseholderQr().solve(Mat::Identity(np, np));

  const int ref_a = K - 1;
  const int ref_x = J - 1;
  ps.F_tilde_K.resize(n, n);
  for (int x = 0; x < n; ++x)
    ps.F_tilde_K.row(x) = transition_head(transitions, ref_a, x) - transition_head(transitions, ref_a, ref_x);

  ps.F_stack.resize(static_cast<Eigen::Index>(n) * K, n);
  ps.F_J_stack.resize(static_cast<Eigen::Index>(n) * K, n);
  for (int i = 0; i < K; ++i) {
    for (int x = 0; x < n; ++x) {
      ps.F_stack.row(i * n + x) = transition_head(transitions, i, x);
      ps.F_J_stack.row(i * n + x) = transition_head(transitions, i, ref_x);
    }
  }
  return ps;
}

/// Diagonal CCP blocks and the log-ratio vector for one period.
struct CcpBlocks {
  Mat P;    // n x nK, [diag P_{t,1}(x) ... diag P_{t,K}(x)]
  Mat P_J;  // n x nK, reference-state CCPs on every diagonal
  Vec D;    // one log ratio per pair
};

inline void check_positive_ccps(const Mat& p_t, int t) {
  for (Eigen::Index x = 0; x < p_t.cols(); ++x)
    for (Eigen::Index i = 0; i < p_t.rows(); ++i)
      if (!(p_t(i, x) > 0.0) || !std::isfinite(p_t(i, x)))
        throw InvalidInput("CCP at period index " + std::to_string(t) + ", action " + std::to_string(i) + ", state " +
                           std::to_string(x) + " is not strictly positive");
}

inline CcpBlocks build_ccp_blocks(const std::vector<Mat>& ccps, int t, const std::vector<EqualityPair>& pairs) {
  if (t < 0 || t >= static_cast<int>(ccps.size())) throw InvalidInput("period index out of range");
  const Mat& p = ccps[t];
  check_positive_ccps(p, t);
  const auto K = p.rows();
  const auto J = p.cols();
  if (J < 2) throw InvalidInput("identification needs at least two states");
  const Eigen::Index n = J - 1;
  CcpBlocks b;
  b.P = Mat::Zero(n, n * K);
  b.P_J = Mat::Zero(n, n * K);
  for (Eigen::Index i = 0; i < K; ++i) {
    for (Eigen::Index x = 0; x < n; ++x) {
      b.P(x, i * n + x) = p(i, x);
      b.P_J(x, i * n + x) = p(i, J - 1);
    }
  }
  b.D.resize(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const auto& pr = pairs[j];
    check_pair_indices(pr, static_cast<int>(K), static_cast<int>(J));
    b.D(static_cast<Eigen::Index>(j)) = std::log(p(pr.k, pr.x1)) - std::log(p(pr.l, pr.x2));
  }
  return b;
}

/// Stacked system [I c1 I c2 I] A = B.
struct LinearSystem {
  Mat A;
  Mat B;
};

namespace detail {

struct PeriodTerms {
  Vec D;       // log ratios
  Vec VD;      // Ftilde^-1 D
  Vec GVD;     // G_t Ftilde^-1 D
  Vec ref_log; // log P_{t,K}(x) - log P_{t,K}(J), x < J
};

inline std::vector<PeriodTerms> period_terms(const std::vector<Mat>& ccps, const PairSystem& ps) {
  const int T = static_cast<int>(ccps.size());
  const int J = ps.num_states;
  const int K = ps.num_actions;
  const int n = J - 1;
  std::vector<PeriodTerms> out(T);
  for (int t = 0; t < T; ++t) {
    if (ccps[t].rows() != K || ccps[t].cols() != J) throw InvalidInput("CCP table shape does not match the pairs");
    const CcpBlocks b = build_ccp_blocks(ccps, t, ps.pairs);
    const Mat G = b.P * ps.F_stack - b.P_J * ps.F_J_stack;
    auto& pt = out[t];
    pt.D = b.D;
    pt.VD = ps.F_tilde_inv * b.D;
    pt.GVD = G * pt.VD;
    pt.ref_log.resize(n);
    for (int x = 0; x < n; ++x) pt.ref_log(x) = std::log(ccps[t](K - 1, x)) - std::log(ccps[t](K - 1, J - 1));
  }
  return out;
}

}  // namespace detail

/// Builds A (3n x (T-2)) and B (n x (T-2)) from per-period CCPs.
inline LinearSystem assemble_system(const std::vector<Mat>& ccps, const PairSystem& ps) {
  const int T = static_cast<int>(ccps.size());
  if (T < 4)
    throw InsufficientData("the identification system needs at least 4 periods, got " + std::to_string(T));
  const auto terms = detail::period_terms(ccps, ps);
  const int n = ps.num_states - 1;
  LinearSystem sys;
  sys.A.resize(3 * n, T - 2);
  sys.B.resize(n, T - 2);
  for (int t = 2; t < T; ++t) {
    const int c = t - 2;
    const Vec dVD = terms[t].VD - terms[t - 1].VD;
    const Vec dVD_prev = terms[t - 1].VD - terms[t - 2].VD;
    sys.A.col(c).segment(0, n) = ps.F_tilde_K * dVD;
    sys.A.col(c).segment(n, n) = terms[t].GVD - terms[t - 1].GVD;
    sys.A.col(c).segment(2 * n, n) = dVD_prev;
    sys.B.col(c) = terms[t].ref_log - terms[t - 1].ref_log;
  }
  return sys;
}

/// Macro-state variant. `H` is row-stochastic with H(w, w') = h(w' | w);
/// the system multiplies by the column-stochastic transpose, whose columns
/// are the conditional distributions h(. | w). CCPs must not vary with w,
/// so one T x K x J path is supplied.
inline LinearSystem assemble_system_macro(const std::vector<Mat>& ccps, const PairSystem& ps, const Mat& H) {
  if (H.rows() != H.cols() || H.rows() < 1) throw InvalidInput("macro transition matrix must be square");
  check_row_stochastic(H, "macro transition matrix");
  const int T = static_cast<int>(ccps.size());
  if (T < 3)
    throw InsufficientData("the macro identification system needs at least 3 periods, got " + std::to_string(T));
  const auto terms = detail::period_terms(ccps, ps);
  const int n = ps.num_states - 1;
  const auto M = H.rows();
  const Mat Hc = H.transpose();
  const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(M);
  LinearSystem sys;
  sys.A.resize(3 * n, (T - 2) * M);
  sys.B.resize(n, (T - 2) * M);
  for (int t = 2; t < T; ++t) {
    const Eigen::Index c = (t - 2) * M;
    const Vec dVD = terms[t].VD - terms[t - 1].VD;
    const Vec dVD_prev = terms[t - 1].VD - terms[t - 2].VD;
    // w-invariant vectors are broadcast to n x M before the macro operator
    sys.A.block(0, c, n, M) = ps.F_tilde_K * dVD * ones * Hc;
    sys.A.block(n, c, n, M) = (terms[t].GVD - terms[t - 1].GVD) * ones * Hc;
    sys.A.block(2 * n, c, n, M) = dVD_prev * ones;
    sys.B.block(0, c, n, M) = (terms[t].ref_log - terms[t - 1].ref_log) * ones * Hc;
  }
  return sys;
}

struct IdentificationDiagnostics {
  double block1_residual = 0.0;    // ||block1 - I||_F
  double block2_offdiag_max = 0.0;
  double block3_offdiag_max = 0.0;
  double block2_diag_spread = 0.0; // max - min of the diagonal
  double block3_diag_spread = 0.0;
  double condition_AAt = 0.0;      // (s_max / s_min)^2
  double system_residual = 0.0;    // ||[I c1 I c2 I] A - B||_inf at the reported scalars
  int rank = 0;
  int rows = 0;
  int cols = 0;
  Vec singular_values;
};

struct UtilityRecovery {
  Mat utilities;                     // K x J; NaN where the level is not identified
  Mat differences;                   // K x J, u_i(x) - u_K(x)
  std::vector<bool> level_identified; // per state
};

struct IdentificationResult {
  SolveMode mode = SolveMode::RightInverse;
  double beta_hat = 0.0;
  double delta_hat = 0.0;
  double c1 = 0.0;  // (1 - beta) / beta
  double c2 = 0.0;  // -1 / (beta * delta)
  bool in_range = false;
  Mat coefficient_matrix;  // n x 3n
  IdentificationDiagnostics diagnostics;
  std::optional<UtilityRecovery> utilities_hat;
};

namespace detail {

inline IdentificationResult solve_stacked(const Mat& A, const Mat& B, double rank_tol, SolveMode mode,
                                          Assumption count_gate, Assumption rank_gate) {
  if (A.rows() == 0 || A.rows() % 3 != 0) throw InvalidInput("A must have 3(J-1) rows");
  const Eigen::Index n = A.rows() / 3;
  if (B.rows() != n || B.cols() != A.cols()) throw InvalidInput("B must be (J-1) x cols(A)");
  if (!A.allFinite() || !B.allFinite()) throw InvalidInput("identification system has non-finite entries");
  if (A.cols() < A.rows())
    throw InsufficientPeriods(count_gate, "system has " + std::to_string(A.cols()) + " period columns but needs " +
                                              std::to_string(A.rows()));

  IdentificationResult res;
  res.mode = mode;
  auto& dg = res.diagnostics;
  dg.rows = static_cast<int>(A.rows());
  dg.cols = static_cast<int>(A.cols());
  dg.singular_values = singular_values_of(A);
  dg.rank = numerical_rank(dg.singular_values, rank_tol);
  if (dg.rank < A.rows())
    throw AssumptionViolation(rank_gate, "stacked system has rank " + std::to_string(dg.rank) + " < " +
                                             std::to_string(A.rows()) + " rows");
  const double smax = dg.singular_values(0);
  const double smin = dg.singular_values(dg.singular_values.size() - 1);
  dg.condition_AAt = (smax / smin) * (smax / smin);

  const Mat A1 = A.topRows(n);
  const Mat A2 = A.middleRows(n, n);
  const Mat A3 = A.bottomRows(n);

  if (mode == SolveMode::RightInverse) {
    // A^T = Q R, so A+ = Q R^-T and C = B Q R^-T.
    Eigen::HouseholderQR<Mat> qr(A.transpose());
    const Mat Q = qr.householderQ() * Mat::Identity(A.cols(), A.rows());
    const Mat R = qr.matrixQR().topRows(A.rows()).triangularView<Eigen::Upper>();
    const Mat BQ = B * Q;
    res.coefficient_matrix = R.triangularView<Eigen::Upper>().solve(BQ.transpose()).transpose();
    const Mat& C = res.coefficient_matrix;
    const Mat C1 = C.leftCols(n);
    const Mat C2 = C.middleCols(n, n);
    const Mat C3 = C.rightCols(n);
    res.c1 = C2.diagonal().mean();
    res.c2 = C3.diagonal().mean();
    dg.block1_residual = (C1 - Mat::Identity(n, n)).norm();
    auto offdiag_max = [](const Mat& m) {
      double out = 0.0;
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
          if (r != c) out = std::max(out, std::abs(m(r, c)));
      return out;
    };
    dg.block2_offdiag_max = offdiag_max(C2);
    dg.block3_offdiag_max = offdiag_max(C3);
    dg.block2_diag_spread = C2.diagonal().maxCoeff() - C2.diagonal().minCoeff();
    dg.block3_diag_spread = C3.diagonal().maxCoeff() - C3.diagonal().minCoeff();
  } else {
    // Two unknowns: vec(B - A1) = c1 vec(A2) + c2 vec(A3).
    const Eigen::Index m = n * A.cols();
    Mat X(m, 2);
    X.col(0) = A2.reshaped();
    X.col(1) = A3.reshaped();
    const Vec y = (B - A1).reshaped();
    const Vec c = X.colPivHouseholderQr().solve(y);
    res.c1 = c(0);
    res.c2 = c(1);
    res.coefficient_matrix.resize(n, 3 * n);
    res.coefficient_matrix << Mat::Identity(n, n), res.c1 * Mat::Identity(n, n), res.c2 * Mat::Identity(n, n);
  }
  dg.system_residual = (A1 + res.c1 * A2 + res.c2 * A3 - B).cwiseAbs().maxCoeff();
  res.beta_hat = 1.0 / (1.0 + res.c1);
  res.delta_hat = -1.0 / (res.beta_hat * res.c2);
  res.in_range = res.beta_hat > 0.0 && res.beta_hat <= 1.0 && res.delta_hat > 0.0 && res.delta_hat < 1.0;
  return res;
}

}  // namespace detail

/// Recovers (beta, delta) from the stacked system. Out-of-range estimates are
/// returned with in_range = false rather than thrown.
inline IdentificationResult solve_discounts(const Mat& A, const Mat& B, double rank_tol = kDefaultRankTol,
                                            SolveMode mode = SolveMode::RightInverse) {
  return detail::solve_stacked(A, B, rank_tol, mode, Assumption::PeriodCount, Assumption::SystemRank);
}

inline IdentificationResult solve_discounts_macro(const Mat& A_tilde, const Mat& B_tilde,
                                                  double rank_tol = kDefaultRankTol,
                                                  SolveMode mode = SolveMode::RightInverse) {
  return detail::solve_stacked(A_tilde, B_tilde, rank_tol, mode, Assumption::MacroPeriodCount,
                               Assumption::MacroSystemRank);
}

struct UtilityAnchor {
  int action = 0;
  int state = 0;
  double value = 0.0;
};

/// Terminal-period utility recovery. Within-state differences come from the
/// terminal log CCP ratios (zero continuation value); levels propagate from
/// the anchor across the equality-pair graph.
inline UtilityRecovery recover_utilities(const Mat& terminal_ccps, const std::vector<EqualityPair>& pairs,
                                         const UtilityAnchor& anchor) {
  const auto K = static_cast<int>(terminal_ccps.rows());
  const auto J = static_cast<int>(terminal_ccps.cols());
  if (anchor.action < 0 || anchor.action >= K || anchor.state < 0 || anchor.state >= J)
    throw InvalidInput("utility anchor out of range");
  check_positive_ccps(terminal_ccps, -1);
  for (const auto& p : pairs) check_pair_indices(p, K, J);

  UtilityRecovery out;
  out.differences.resize(K, J);
  for (int x = 0; x < J; ++x)
    for (int i = 0; i < K; ++i)
      out.differences(i, x) = std::log(terminal_ccps(i, x)) - std::log(terminal_ccps(K - 1, x));

  // level(x) = u_K(x). A pair gives level(x1) + d(k,x1) = level(x2) + d(l,x2).
  std::vector<std::vector<std::pair<int, double>>> edges(J);
  for (const auto& p : pairs) {
    if (p.x1 == p.x2) continue;
    const double offset = out.differences(p.l, p.x2) - out.differences(p.k, p.x1);  // level(x1) - level(x2)
    edges[p.x2].push_back({p.x1, offset});
    edges[p.x1].push_back({p.x2, -offset});
  }
  std::vector<double> level(J, std::numeric_limits<double>::quiet_NaN());
  out.level_identified.assign(J, false);
  level[anchor.state] = anchor.value - out.differences(anchor.action, anchor.state);
  out.level_identified[anchor.state] = true;
  std::queue<int> frontier;
  frontier.push(anchor.state);
  while (!frontier.empty()) {
    const int x = frontier.front();
    frontier.pop();
    for (const auto& [y, off] : edges[x]) {
      if (out.level_identified[y]) continue;
      level[y] = level[x] + off;
      out.level_identified[y] = true;
      frontier.push(y);
    }
  }
  out.utilities.resize(K, J);
  for (int x = 0; x < J; ++x)
    for (int i = 0; i < K; ++i) out.utilities(i, x) = level[x] + out.differences(i, x);
  return out;
}

/// Per pair, the largest |logsumexp W_t(x1) - logsumexp W_t(x2)| over periods.
/// Zero for same-state pairs; otherwise the amount by which the log CCP ratio
/// departs from the choice-value difference.
inline Vec inclusive_value_gaps(const ValueSolution& sol, const std::vector<EqualityPair>& pairs) {
  Vec gaps = Vec::Zero(static_cast<Eigen::Index>(pairs.size()));
  for (const auto& w : sol.W) {
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const double g = logsumexp(Vec(w.col(pairs[j].x1))) - logsumexp(Vec(w.col(pairs[j].x2)));
      gaps(static_cast<Eigen::Index>(j)) = std::max(gaps(static_cast<Eigen::Index>(j)), std::abs(g));
    }
  }
  return gaps;
}

struct IdentifyOptions {
  SolveMode mode = SolveMode::RightInverse;
  double rank_tol = kDefaultRankTol;
  std::optional<Mat> macro_H;         // engages the macro-state system
  std::optional<UtilityAnchor> anchor; // defaults to u_K(J) = 0
};

/// Full pipeline from a T x K x J CCP path and K transition tables. Every
/// failed identifying condition is raised as an AssumptionViolation.
inline IdentificationResult identify(const std::vector<Mat>& ccps, const std::vector<Mat>& transitions,
                                     const std::vector<EqualityPair>& pairs, const IdentifyOptions& opt = {}) {
  if (transitions.empty() || ccps.empty()) throw InvalidInput("CCPs and transitions must be non-empty");
  const auto J = static_cast<int>(transitions.front().rows());
  const auto K = static_cast<int>(transitions.size());
  const auto T = static_cast<int>(ccps.size());
  const int n = J - 1;
  if (J < 2) throw InvalidInput("identification needs at least two states");
  if (static_cast<int>(pairs.size()) < n)
    throw AssumptionViolation(Assumption::EqualityPairs, std::to_string(pairs.size()) + " equality pairs supplied, " +
                                                             std::to_string(n) + " required");
  const PairSystem ps = build_pair_system(transitions, pairs, opt.rank_tol);

  IdentificationResult res;
  if (opt.macro_H) {
    const auto M = static_cast<int>(opt.macro_H->rows());
    if (T < 3 || (T - 2) * M < 3 * n)
      throw InsufficientPeriods(Assumption::MacroPeriodCount,
                                "(T-2)M = " + std::to_string(std::max(T - 2, 0) * M) + ", need >= 3(J-1) = " +
                                    std::to_string(3 * n));
    const LinearSystem sys = assemble_system_macro(ccps, ps, *opt.macro_H);
    res = solve_discounts_macro(sys.A, sys.B, opt.rank_tol, opt.mode);
  } else {
    if (T < 3 * J - 1)
      throw InsufficientPeriods(Assumption::PeriodCount,
                                "T = " + std::to_string(T) + ", need T >= 3J-1 = " + std::to_string(3 * J - 1));
    const LinearSystem sys = assemble_system(ccps, ps);
    res = solve_discounts(sys.A, sys.B, opt.rank_tol, opt.mode);
  }
  res.utilities_hat = recover_utilities(ccps.back(), pairs, opt.anchor.value_or(UtilityAnchor{K - 1, J - 1, 0.0}));
  return res;
}

// ---------------------------------------------------------------------------
// Assumption report for a fully specified model.

namespace detail {
inline std::string sci(double v) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(3) << v;
  return out.str();
}
}  // namespace detail

struct AssumptionCheck {
  Assumption which;
  bool passed = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.passed; });
  }
  const AssumptionCheck* find(Assumption a) const {
    for (const auto& c : checks)
      if (c.which == a) return &c;
    return nullptr;
  }
};

/// Evaluates the testable identifying conditions on a model's exact CCPs.
/// With `macro_H` the macro-state conditions are evaluated as well.
inline AssumptionReport check_assumptions(const ModelSpec& model, double rank_tol = kDefaultRankTol,
                                          const std::optional<Mat>& macro_H = std::nullopt) {
  model.validate();
  AssumptionReport rep;
  const int J = model.num_states;
  const int T = model.horizon;
  const int n = J - 1;
  const auto npairs = static_cast<int>(model.equality_pairs.size());

  rep.checks.push_back({Assumption::EqualityPairs, npairs >= n && J >= 2,
                        std::to_string(npairs) + " equality pairs supplied, " + std::to_string(n) + " required"});

  std::optional<PairSystem> ps;
  try {
    ps = build_pair_system(model.transitions, model.equality_pairs, rank_tol);
    rep.checks.push_back({Assumption::PairRank, true,
                          "smallest/largest singular value " +
                              detail::sci(ps->singular_values(n - 1) / ps->singular_values(0))});
  } catch (const AssumptionViolation& e) {
    rep.checks.push_back({Assumption::PairRank, false, e.what()});
  } catch (const InvalidInput& e) {
    rep.checks.push_back({Assumption::PairRank, false, e.what()});
  }

  rep.checks.push_back({Assumption::PeriodCount, T >= 3 * J - 1,
                        "T = " + std::to_string(T) + ", need T >= 3J-1 = " + std::to_string(3 * J - 1)});

  auto rank_check = [&](Assumption which, const LinearSystem& sys) {
    const Vec sv = singular_values_of(sys.A);
    const int r = numerical_rank(sv, rank_tol);
    std::string text = "rank " + std::to_string(r) + " of " + std::to_string(sys.A.rows()) + " rows, " +
                       std::to_string(sys.A.cols()) + " columns";
    if (sv.size() > 0 && sv(0) > 0) text += ", smallest/largest singular value " + detail::sci(sv(sv.size() - 1) / sv(0));
    rep.checks.push_back({which, r == sys.A.rows(), text});
  };

  const ValueSolution sol = solve_backward(model);
  if (ps && T >= 4) {
    rank_check(Assumption::SystemRank, assemble_system(sol.P, *ps));
  } else {
    rep.checks.push_back({Assumption::SystemRank, false, "system not formed (needs a valid pair system and T >= 4)"});
  }
  if (macro_H) {
    const auto M = static_cast<int>(macro_H->rows());
    rep.checks.push_back({Assumption::MacroPeriodCount, (T - 2) * M >= 3 * n,
                          "(T-2)M = " + std::to_string((T - 2) * M) + ", need >= 3(J-1) = " + std::to_string(3 * n)});
    if (ps && T >= 3) {
      rank_check(Assumption::MacroSystemRank, assemble_system_macro(sol.P, *ps, *macro_H));
    } else {
      rep.checks.push_back({Assumption::MacroSystemRank, false, "system not formed"});
    }
  }
  return rep;
}

}  // namespace hyperdisc

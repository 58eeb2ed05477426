#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "pfilin/estimators.hpp"
#include "pfilin/validation.hpp"

namespace pfilin {
namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

TEST(Gamma, HandValues) {
  EXPECT_DOUBLE_EQ(kTheoryGammaConstant, 6.0 * 75.0 * 75.0);
  EXPECT_NEAR(gamma_t(1, 1.0, 1.0, 2.5), 2.5 * std::log(2.0), 1e-14);
  EXPECT_NEAR(gamma_t(3, 100.0, 0.1, 1.0), 27.0 * std::log(6e5), 1e-10);
  EXPECT_NEAR(gamma_t(3, 100.0, 0.1, 1.0), 359.2, 0.05);
}

TEST(Gamma, WarmupRoundIsFirstCrossing) {
  for (double C : {0.01, 0.1, 1.0}) {
    const std::size_t T = warmup_round(3, 0.1, C);
    EXPECT_GE(static_cast<double>(T), gamma_t(3, static_cast<double>(T), 0.1, C));
    if (T > 1) EXPECT_LT(static_cast<double>(T - 1), gamma_t(3, static_cast<double>(T - 1), 0.1, C));
  }
  EXPECT_EQ(warmup_round(3, 0.1, 1.0), 440u);
}

TEST(Ledger, FirstDrawExplores) {
  ExplorationLedger ledger(3);
  ledger.record_draw(1);
  EXPECT_TRUE(ledger.decide(1, 1, 1e-6));
  EXPECT_EQ(ledger.exploration_count(1), 1u);
  EXPECT_TRUE(ledger.invariants_hold());
}

TEST(Ledger, ExploitsOverBudget) {
  ExplorationLedger ledger(2);
  for (std::size_t t = 1; t <= 10; ++t) ledger.force_exploration(t, 0);
  for (int i = 0; i < 10; ++i) ledger.record_draw(0);
  // gamma / t = 0.5: 10 > 0.5 * 10
  EXPECT_FALSE(ledger.decide(20, 0, 10.0));
  EXPECT_EQ(ledger.exploration_count(0), 10u);
}

TEST(Ledger, LargeBudgetAlwaysExplores) {
  ExplorationLedger ledger(2);
  for (std::size_t t = 1; t <= 50; ++t) {
    const ArmIndex a = t % 2;
    ledger.record_draw(a);
    EXPECT_TRUE(ledger.decide(t, a, static_cast<double>(t)));
  }
  EXPECT_EQ(ledger.exploration_rounds().size(), 50u);
}

TEST(Ledger, RecycleOrder) {
  ExplorationLedger ledger(1);
  ledger.store_sample(0, 5, scalar(1.0));
  ledger.store_sample(0, 12, scalar(2.0));
  // counts {5: 2, 12: 1} after three picks: 5, 12, 5
  EXPECT_EQ(ledger.select_recycle(0).round, 5u);
  EXPECT_EQ(ledger.select_recycle(0).round, 12u);
  EXPECT_EQ(ledger.select_recycle(0).round, 5u);
  EXPECT_EQ(ledger.select_recycle(0).round, 12u);
  // tie {5: 2, 12: 2} goes to the earliest
  EXPECT_EQ(ledger.select_recycle(0).round, 5u);
}

TEST(Ledger, RecycleBalancesReuse) {
  ExplorationLedger ledger(2);
  for (std::size_t r : {3u, 7u, 9u}) ledger.store_sample(1, r, scalar(0.0));
  for (int i = 0; i < 9; ++i) ledger.select_recycle(1);
  for (const auto& s : ledger.samples(1)) EXPECT_EQ(s.reuse_count, 3u);
  try {
    ledger.select_recycle(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoExplorationSample);
  }
}

TEST(MixSample, DegenerateWeights) {
  const ContextSet cs = ContextSet::euclidean_basis(3);
  const Vector fresh = Vector::Constant(2, 0.4);
  const Vector recycled = Vector::Constant(2, -0.9);
  const MixedSample plain = mix_sample(cs, 1, fresh, 2, 2, recycled, MixWeights{1.0, 0.0});
  EXPECT_LE((plain.x - cs.context(1)).norm(), 1e-15);
  EXPECT_LE((plain.y - fresh).norm(), 1e-15);
  const MixedSample pure = mix_sample(cs, 1, fresh, 2, 2, recycled, MixWeights{0.0, 1.0});
  // basis context and reweighted sample flip together, so their product is the unit case
  EXPECT_NEAR(std::abs(pure.x(2)), 1.0, 1e-15);
  EXPECT_LE((pure.x(2) * pure.y - recycled).norm(), 1e-15);
}

TEST(MixSample, WeightsHaveUnitVariance) {
  Rng rng(3);
  double s = 0.0, s2 = 0.0;
  const int N = 100000;
  for (int n = 0; n < N; ++n) {
    const MixWeights w = MixWeights::draw(rng);
    s += w.w + w.w_check;
    s2 += w.w * w.w + w.w_check * w.w_check;
    ASSERT_LE(std::abs(w.w), std::numbers::sqrt3);
  }
  EXPECT_NEAR(s / (2 * N), 0.0, 0.01);
  EXPECT_NEAR(s2 / (2 * N), 1.0, 0.01);
}

TEST(MixSample, UnbiasedAndCoversTheDesign) {
  Rng rng(41);
  const ContextSet cs = ContextSet::build(random_contexts(3, 6, rng));
  Vector theta(3);
  theta << 0.5, -0.2, 0.8;
  const std::size_t d = cs.dim();
  const int N = 40000;
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_int_distribution<std::size_t> basis_pick(0, d - 1);
  std::uniform_int_distribution<std::size_t> arm_pick(0, cs.num_arms() - 1);
  double s = 0.0, s2 = 0.0;
  Matrix second = Matrix::Zero(3, 3);
  for (int n = 0; n < N; ++n) {
    const std::size_t i = basis_pick(rng);
    const ArmIndex a = arm_pick(rng);
    const ArmIndex recycled = cs.sample_basis_action(i, rng);
    const Vector y = scalar(cs.context(a).dot(theta) + noise(rng));
    const Vector y_old = scalar(cs.context(recycled).dot(theta) + noise(rng));
    const MixedSample m = mix_sample(cs, a, y, i, recycled, y_old, MixWeights::draw(rng));
    const double r = m.y(0) - m.x.dot(theta);
    s += r;
    s2 += r * r;
    second += m.x * m.x.transpose();
  }
  const double mean = s / N;
  const double sd = std::sqrt(s2 / N - mean * mean);
  EXPECT_LE(std::abs(mean), 4.0 * sd / std::sqrt(N));
  const Matrix gap = second / N - cs.gram() / static_cast<double>(d);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(gap).eigenvalues().minCoeff(), -0.02);
}

TEST(LeastSquares, ScalarArithmetic) {
  LeastSquaresState mixed(1, 1, 0.5);
  EXPECT_DOUBLE_EQ(mixed.solve()(0, 0), 0.0);
  mixed.update(scalar(1.0), scalar(2.0));
  EXPECT_NEAR(mixed.solve()(0, 0), 4.0 / 3.0, 1e-14);

  LeastSquaresState ridge(1, 1, 1.0);
  ridge.update(scalar(1.0), scalar(3.0));
  EXPECT_NEAR(ridge.solve()(0, 0), 1.5, 1e-14);

  DrMixState dr(1, 1);
  Matrix xt(1, 2);
  xt << 1.0, 1.0;
  Matrix yh(2, 1);
  yh << 0.9, 2.1;
  dr.update(xt, yh);
  EXPECT_NEAR(dr.solve()(0, 0), (0.9 + 2.1) / 3.0, 1e-14);
  EXPECT_EQ(dr.matched_rounds(), 1u);
}

TEST(LeastSquares, RecursiveMatchesBatch) {
  Rng rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  LeastSquaresState st(4, 2, 0.5);
  Matrix xs(4, 300), ys(300, 2);
  for (int j = 0; j < 300; ++j) {
    for (int i = 0; i < 4; ++i) xs(i, j) = n(rng);
    ys(j, 0) = n(rng);
    ys(j, 1) = n(rng);
    st.update(xs.col(j), ys.row(j).transpose());
  }
  const Matrix gram = xs * xs.transpose() + 0.5 * Matrix::Identity(4, 4);
  const Matrix batch = gram.inverse() * (xs * ys);
  EXPECT_LE((st.gram() - gram).norm(), 1e-8);
  EXPECT_LE((st.solve() - batch).norm(), 1e-8);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(st.gram()).eigenvalues().minCoeff(), 0.5 - 1e-12);
}

TEST(PseudoAction, Probabilities) {
  EXPECT_DOUBLE_EQ(pseudo_action_probability(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(pseudo_action_probability(1, 1), 0.5);
  for (std::size_t d = 1; d < 9; ++d) {
    double total = 0.0;
    for (std::size_t i = 0; i <= d; ++i) total += pseudo_action_probability(i, d);
    EXPECT_NEAR(total, 1.0, 1e-15);
  }
  Rng rng(5);
  std::vector<int> counts(4, 0);
  const int N = 100000;
  for (int n = 0; n < N; ++n) ++counts[draw_pseudo_action(3, rng)];
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(counts[i] / static_cast<double>(N), 1.0 / 6.0, 0.01);
  EXPECT_NEAR(counts[3] / static_cast<double>(N), 0.5, 0.01);
}

TEST(Resampling, AttemptBudget) {
  EXPECT_NEAR(rho_t(9, 0.1), std::log(1000.0) / std::log(2.0), 1e-12);
  EXPECT_EQ(max_attempts(9, 0.1), 10u);
  EXPECT_GE(max_attempts(1, 0.99), 1u);
}

TEST(Resampling, MatchRateAndRedraws) {
  Rng rng(8);
  int unmatched = 0;
  std::size_t attempts = 0;
  const int N = 20000;
  int policy_calls = 0;
  const ActionSampler policy = [&](Rng&) {
    ++policy_calls;
    return ArmIndex{2};
  };
  const PseudoSampler pseudo = [](Rng& r) { return draw_pseudo_action(3, r); };
  for (int n = 0; n < N; ++n) {
    const MatchOutcome m = resample_until_match(policy, pseudo, 3, 2, rng);
    unmatched += !m.matched;
    attempts += m.attempts;
    EXPECT_LE(m.attempts, 2u);
    if (m.matched) EXPECT_EQ(m.pseudo_action, 3u);
  }
  // two attempts: miss probability 1/4, mean attempts 1.5
  EXPECT_NEAR(unmatched / static_cast<double>(N), 0.25, 0.015);
  EXPECT_NEAR(attempts / static_cast<double>(N), 1.5, 0.02);
  EXPECT_EQ(static_cast<std::size_t>(policy_calls), attempts);
}

TEST(PseudoRewards, PlugInAndPerfectImputation) {
  Rng rng(4);
  const ContextSet cs = ContextSet::build(random_contexts(3, 5, rng));
  const Matrix xt = pseudo_contexts(cs, 2);
  ASSERT_EQ(xt.cols(), 4);
  Matrix theta(3, 2);
  theta << 0.3, -0.1, 0.5, 0.2, -0.4, 0.7;
  const Vector truth = theta.transpose() * cs.context(2);
  const Matrix exact = pseudo_rewards(xt, theta, 3, truth);
  EXPECT_LE((exact - xt.transpose() * theta).norm(), 1e-14);
  const Vector y = Vector::Constant(2, 0.6);
  const Matrix plug = pseudo_rewards(xt, Matrix::Zero(3, 2), 3, y);
  EXPECT_LE(plug.topRows(3).norm(), 1e-15);
  EXPECT_LE((plug.row(3).transpose() - 2.0 * y).norm(), 1e-15);
}

TEST(PseudoRewards, UnbiasedForAnyImputation) {
  Rng rng(10);
  const ContextSet cs = ContextSet::build(random_contexts(2, 4, rng));
  Matrix theta(2, 1);
  theta << 0.6, -0.3;
  Matrix imputation(2, 1);
  imputation << -1.5, 2.0;
  const std::size_t d = 2;
  const Matrix xt = pseudo_contexts(cs, 1);
  // the pseudo reward row of action a equals the basis reward reweighted
  const int N = 100000;
  Vector s = Vector::Zero(3), s2 = Vector::Zero(3);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int n = 0; n < N; ++n) {
    const std::size_t pa = draw_pseudo_action(d, rng);
    Vector obs(1);
    if (pa == d) {
      obs(0) = cs.context(1).dot(theta.col(0)) + noise(rng);
    } else {
      const ArmIndex k = cs.sample_basis_action(pa, rng);
      obs(0) = cs.reward_reweight(pa, k, cs.context(k).dot(theta.col(0)) + noise(rng));
    }
    const Matrix y = pseudo_rewards(xt, imputation, pa, obs);
    s += y.col(0);
    s2 += y.col(0).cwiseProduct(y.col(0));
  }
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double mean = s(i) / N;
    const double sd = std::sqrt(s2(i) / N - mean * mean);
    EXPECT_NEAR(mean, xt.col(i).dot(theta.col(0)), 4.0 * sd / std::sqrt(N));
  }
}

EstimatorOptions recording_options() {
  EstimatorOptions o;
  o.record_updates = true;
  o.track_dr_ridge = true;
  return o;
}

TEST(Bundle, FirstRoundExploresAndForcedExploitFallsBack) {
  auto cs = std::make_shared<const ContextSet>(ContextSet::euclidean_basis(3));
  EstimatorBundle bundle(cs, 1, recording_options());
  Rng alg(1), w(2);
  const RoundPlan first = bundle.plan_round(alg, w);
  EXPECT_EQ(first.round, 1u);
  EXPECT_EQ(first.phase, Phase::kExplore);

  EstimatorBundle forced(cs, 1, recording_options());
  const RoundPlan p = forced.plan_round_forced(Phase::kExploit, alg, w);
  EXPECT_EQ(p.phase, Phase::kExplore);
}

TEST(Bundle, ExploreRoundsPlayTheCheckArm) {
  auto cs = std::make_shared<const ContextSet>(ContextSet::euclidean_basis(4));
  EstimatorBundle bundle(cs, 1, recording_options());
  Rng alg(3), w(4), res(5);
  const ActionSampler policy = [](Rng&) { return ArmIndex{0}; };
  for (int t = 0; t < 30; ++t) {
    const RoundPlan plan = bundle.plan_round(alg, w);
    const MatchOutcome m = bundle.couple(plan, policy, res);
    if (plan.phase == Phase::kExplore) EXPECT_EQ(m.action, plan.check_arm);
    bundle.observe(plan, m, scalar(0.1 * static_cast<double>(m.action)));
  }
  EXPECT_TRUE(bundle.ledger().invariants_hold());
}

TEST(Bundle, RecursiveStateMatchesUpdateLog) {
  Rng rng(19);
  auto cs = std::make_shared<const ContextSet>(ContextSet::build(random_contexts(3, 7, rng)));
  EstimatorOptions opts = recording_options();
  opts.gamma_constant = 0.05;
  EstimatorBundle bundle(cs, 2, opts);
  Rng alg(1), w(2), res(3), env(4);
  std::uniform_int_distribution<std::size_t> unif(0, 6);
  std::normal_distribution<double> noise(0.0, 0.1);
  const ActionSampler policy = [&](Rng& r) { return unif(r); };
  for (int t = 0; t < 800; ++t) {
    const RoundPlan plan = bundle.plan_round(alg, w);
    const MatchOutcome m = bundle.couple(plan, policy, res);
    Vector y(2);
    y << noise(env), 1.0 + noise(env);
    bundle.observe(plan, m, y);
    std::string why;
    ASSERT_TRUE(bundle.ledger().invariants_hold(&why)) << why;
  }
  const UpdateLog& log = bundle.update_log();
  Matrix gram = 0.5 * Matrix::Identity(3, 3);
  Matrix moment = Matrix::Zero(3, 2);
  for (std::size_t j = 0; j < log.mixed_x.size(); ++j) {
    gram += log.mixed_x[j] * log.mixed_x[j].transpose();
    moment += log.mixed_x[j] * log.mixed_y[j].transpose();
  }
  EXPECT_LE((bundle.mixed().gram() - gram).norm(), 1e-8);
  EXPECT_LE((bundle.mixed_estimate() - gram.inverse() * moment).norm(), 1e-8);

  Matrix v = Matrix::Identity(3, 3);
  Matrix c = Matrix::Zero(3, 2);
  for (std::size_t j = 0; j < log.dr_x.size(); ++j) {
    v += log.dr_x[j] * log.dr_x[j].transpose();
    c += log.dr_x[j] * log.dr_y[j];
  }
  EXPECT_EQ(log.dr_x.size(), bundle.dr().matched_rounds());
  EXPECT_LE((bundle.dr().gram() - v).norm(), 1e-8);
  EXPECT_LE((bundle.dr_estimate() - v.inverse() * c).norm(), 1e-8);
  EXPECT_EQ(bundle.dr_ridge_estimate().rows(), 3);
}

}  // namespace
}  // namespace pfilin

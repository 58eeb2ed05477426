#include "pfilin/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pfilin {

double gamma_t(std::size_t d, double t, double delta, double C) {
  const double dd = static_cast<double>(d);
  return C * dd * dd * dd * std::log(2.0 * dd * t * t / delta);
}

std::size_t warmup_round(std::size_t d, double delta, double C, std::size_t cap) {
  // gamma_t grows like log t, so t - gamma_t is eventually increasing; bisect
  // after a doubling search.
  std::size_t hi = 1;
  while (hi < cap && static_cast<double>(hi) < gamma_t(d, static_cast<double>(hi), delta, C)) hi *= 2;
  if (hi >= cap) return cap;
  std::size_t lo = hi / 2;
  if (lo == 0) return 1;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (static_cast<double>(mid) >= gamma_t(d, static_cast<double>(mid), delta, C)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// ---------------------------------------------------------------------------

ExplorationLedger::ExplorationLedger(std::size_t num_arms)
    : draws_(num_arms, 0), explored_(num_arms, 0), forced_(num_arms, 0), admitted_budget_(num_arms, 0.0),
      samples_(num_arms) {}

void ExplorationLedger::record_draw(ArmIndex arm) { ++draws_.at(arm); }

bool ExplorationLedger::decide(std::size_t t, ArmIndex arm, double gamma) {
  const double budget = gamma / static_cast<double>(t) * static_cast<double>(draws_.at(arm));
  if (static_cast<double>(explored_[arm]) > budget) return false;
  ++explored_[arm];
  admitted_budget_[arm] = budget;
  rounds_.push_back(t);
  return true;
}

void ExplorationLedger::force_exploration(std::size_t t, ArmIndex arm) {
  ++explored_.at(arm);
  ++forced_[arm];
  rounds_.push_back(t);
}

void ExplorationLedger::store_sample(ArmIndex arm, std::size_t round, Vector reward) {
  samples_.at(arm).push_back(Sample{round, arm, std::move(reward), 0});
}

const ExplorationLedger::Sample& ExplorationLedger::select_recycle(ArmIndex arm) {
  auto& pool = samples_.at(arm);
  if (pool.empty()) {
    throw Error(ErrorCode::kNoExplorationSample, "arm " + std::to_string(arm) + " has no exploration sample");
  }
  // Samples are stored in round order, so min_element keeps the earliest on ties.
  auto it = std::min_element(pool.begin(), pool.end(),
                             [](const Sample& a, const Sample& b) { return a.reuse_count < b.reuse_count; });
  ++it->reuse_count;
  return *it;
}

bool ExplorationLedger::invariants_hold(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (ArmIndex k = 0; k < draws_.size(); ++k) {
    if (draws_[k] > 0 && explored_[k] == 0) return fail("arm " + std::to_string(k) + " drawn but never explored");
    const double admitted = static_cast<double>(explored_[k] - forced_[k]);
    if (admitted > admitted_budget_[k] + 1.0 + 1e-9) {
      return fail("arm " + std::to_string(k) + " explored beyond its budget");
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

MixWeights MixWeights::draw(Rng& rng) {
  std::uniform_real_distribution<double> unif(-std::numbers::sqrt3, std::numbers::sqrt3);
  MixWeights mw;
  mw.w = unif(rng);
  mw.w_check = unif(rng);
  return mw;
}

MixedSample mix_sample(const ContextSet& cs, ArmIndex action, const Vector& reward, std::size_t basis,
                       ArmIndex recycled_arm, const Vector& recycled_reward, const MixWeights& weights) {
  if (reward.size() != recycled_reward.size()) {
    throw Error(ErrorCode::kLengthMismatch, "fresh and recycled rewards differ in length");
  }
  MixedSample out;
  out.x = weights.w * cs.context(action) + weights.w_check * cs.basis_context(basis);
  const double reweight = cs.reward_reweight(basis, recycled_arm, 1.0);
  out.y = weights.w * reward + (weights.w_check * reweight) * recycled_reward;
  return out;
}

// ---------------------------------------------------------------------------

LeastSquaresState::LeastSquaresState(std::size_t dim, std::size_t num_objectives, double regularizer)
    : gram_(regularizer * Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
      moment_(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(num_objectives))),
      regularizer_(regularizer) {}

void LeastSquaresState::update(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  if (x.size() != gram_.rows() || y.size() != moment_.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "least-squares update with wrong dimensions");
  }
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(x);
  gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
  moment_.noalias() += x * y.transpose();
  ++updates_;
}

void LeastSquaresState::update_block(const Matrix& xs, const Matrix& ys) {
  update_sums(xs * xs.transpose(), xs * ys);
}

void LeastSquaresState::update_sums(const Matrix& xxt, const Matrix& xy) {
  if (xxt.rows() != gram_.rows() || xxt.cols() != gram_.cols() || xy.rows() != moment_.rows() ||
      xy.cols() != moment_.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "least-squares block update with wrong dimensions");
  }
  gram_ += xxt;
  moment_ += xy;
  ++updates_;
}

Matrix LeastSquaresState::solve() const { return gram_.ldlt().solve(moment_); }

DrMixState::DrMixState(std::size_t dim, std::size_t num_objectives) : ls_(dim, num_objectives, 1.0) {}

void DrMixState::update(const Matrix& x_tilde, const Matrix& y_hat) {
  update(x_tilde, y_hat, x_tilde * x_tilde.transpose());
}

void DrMixState::update(const Matrix& x_tilde, const Matrix& y_hat, const Matrix& x_tilde_gram) {
  if (x_tilde.cols() != y_hat.rows()) throw Error(ErrorCode::kLengthMismatch, "pseudo contexts and rewards differ");
  ls_.update_sums(x_tilde_gram, x_tilde * y_hat);
}

// ---------------------------------------------------------------------------

double pseudo_action_probability(std::size_t i, std::size_t d) {
  if (d == 0 || i > d) throw Error(ErrorCode::kInvalidArgument, "pseudo action out of range");
  return i == d ? 0.5 : 0.5 / static_cast<double>(d);
}

std::size_t draw_pseudo_action(std::size_t d, Rng& rng) {
  if (d == 0) throw Error(ErrorCode::kInvalidArgument, "d must be positive");
  // Half the mass on the action row, the rest uniform over the basis rows.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (u >= 0.5) return d;
  return std::min(d - 1, static_cast<std::size_t>(u * 2.0 * static_cast<double>(d)));
}

double rho_t(std::size_t t, double delta_prime) {
  const double tp1 = static_cast<double>(t) + 1.0;
  return std::log(tp1 * tp1 / delta_prime) / std::log(2.0);
}

std::size_t max_attempts(std::size_t t, double delta_prime) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(rho_t(t, delta_prime) - 1e-12)));
}

MatchOutcome resample_until_match(const ActionSampler& policy, const PseudoSampler& pseudo, std::size_t d,
                                  std::size_t attempts, Rng& rng) {
  MatchOutcome out;
  for (std::size_t a = 1; a <= attempts; ++a) {
    out.action = policy(rng);
    out.pseudo_action = pseudo(rng);
    out.attempts = a;
    if (out.pseudo_action == d) {
      out.matched = true;
      break;
    }
  }
  return out;
}

MatchOutcome resample_until_match(const ActionSampler& policy, std::size_t d, std::size_t t, double delta_prime,
                                  Rng& rng) {
  return resample_until_match(
      policy, [d](Rng& r) { return draw_pseudo_action(d, r); }, d, max_attempts(t, delta_prime), rng);
}

Matrix pseudo_contexts(const ContextSet& cs, ArmIndex action) {
  const auto d = static_cast<Eigen::Index>(cs.dim());
  Matrix x(d, d + 1);
  x.leftCols(d) = cs.basis_contexts();
  x.col(d) = cs.context(action);
  return x;
}

Matrix pseudo_rewards(const Matrix& x_tilde, const Matrix& imputation, std::size_t pseudo_action,
                      const Eigen::Ref<const Vector>& observed) {
  const Eigen::Index rows = x_tilde.cols();
  const auto d = static_cast<std::size_t>(rows - 1);
  if (x_tilde.rows() != imputation.rows() || observed.size() != imputation.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "pseudo reward inputs have inconsistent dimensions");
  }
  if (pseudo_action > d) throw Error(ErrorCode::kInvalidArgument, "pseudo action out of range");
  Matrix y = x_tilde.transpose() * imputation;
  const auto row = static_cast<Eigen::Index>(pseudo_action);
  const double inv_prob = 1.0 / pseudo_action_probability(pseudo_action, d);
  y.row(row) += inv_prob * (observed.transpose() - y.row(row));
  return y;
}

std::string_view to_string(Phase phase) { return phase == Phase::kExplore ? "explore" : "exploit"; }

// ---------------------------------------------------------------------------

EstimatorBundle::EstimatorBundle(std::shared_ptr<const ContextSet> contexts, std::size_t num_objectives,
                                 EstimatorOptions options)
    : contexts_(std::move(contexts)),
      options_(options),
      ledger_(contexts_->num_arms()),
      ridge_(contexts_->dim(), num_objectives, 1.0),
      mixed_(contexts_->dim(), num_objectives, 0.5),
      dr_(contexts_->dim(), num_objectives) {
  if (num_objectives == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one objective");
  if (options_.track_dr_ridge) dr_ridge_.emplace(contexts_->dim(), num_objectives);
  x_tilde_base_gram_ = contexts_->basis_contexts() * contexts_->basis_contexts().transpose();
}

RoundPlan EstimatorBundle::draw_plan(Rng& algorithm_rng) {
  RoundPlan plan;
  plan.round = rounds_ + 1;
  std::uniform_int_distribution<std::size_t> basis(0, contexts_->dim() - 1);
  plan.basis = basis(algorithm_rng);
  plan.check_arm = contexts_->sample_basis_action(plan.basis, algorithm_rng);
  ledger_.record_draw(plan.check_arm);
  return plan;
}

RoundPlan EstimatorBundle::plan_round(Rng& algorithm_rng, Rng& weights_rng) {
  RoundPlan plan = draw_plan(algorithm_rng);
  const double gamma = gamma_t(contexts_->dim(), static_cast<double>(plan.round), options_.delta,
                               options_.gamma_constant);
  if (ledger_.decide(plan.round, plan.check_arm, gamma)) {
    plan.phase = Phase::kExplore;
  } else {
    if (!ledger_.has_sample(plan.check_arm)) {
      throw Error(ErrorCode::kNoExplorationSample, "exploitation round without a stored sample");
    }
    plan.phase = Phase::kExploit;
    plan.weights = MixWeights::draw(weights_rng);
  }
  return plan;
}

RoundPlan EstimatorBundle::plan_round_forced(Phase phase, Rng& algorithm_rng, Rng& weights_rng) {
  RoundPlan plan = draw_plan(algorithm_rng);
  if (phase == Phase::kExploit && ledger_.has_sample(plan.check_arm)) {
    plan.phase = Phase::kExploit;
    plan.weights = MixWeights::draw(weights_rng);
  } else {
    plan.phase = Phase::kExplore;
    ledger_.force_exploration(plan.round, plan.check_arm);
  }
  return plan;
}

MatchOutcome EstimatorBundle::couple(const RoundPlan& plan, const ActionSampler& exploit_policy,
                                     Rng& resampling_rng) const {
  const std::size_t d = contexts_->dim();
  if (plan.phase == Phase::kExplore) {
    const ArmIndex fixed = plan.check_arm;
    return resample_until_match([fixed](Rng&) { return fixed; }, d, plan.round, options_.delta_prime,
                                resampling_rng);
  }
  return resample_until_match(exploit_policy, d, plan.round, options_.delta_prime, resampling_rng);
}

void EstimatorBundle::observe(const RoundPlan& plan, const MatchOutcome& outcome, const Vector& reward) {
  if (plan.round != rounds_ + 1) throw Error(ErrorCode::kInvalidArgument, "rounds must be observed in order");
  const ContextSet& cs = *contexts_;
  const ArmIndex a = outcome.action;
  ridge_.update(cs.context(a), reward);

  const bool feed_mixed = outcome.matched || options_.feed_unmatched;
  auto feed = [&](const Vector& x, const Vector& y) {
    mixed_.update(x, y);
    if (options_.record_updates) {
      log_.mixed_x.push_back(x);
      log_.mixed_y.push_back(y);
    }
  };
  if (plan.phase == Phase::kExplore) {
    ledger_.store_sample(a, plan.round, reward);
    if (feed_mixed) feed(cs.context(a), reward);
  } else if (feed_mixed) {
    const ExplorationLedger::Sample& recycled = ledger_.select_recycle(plan.check_arm);
    const MixedSample mixed = mix_sample(cs, a, reward, plan.basis, recycled.arm, recycled.reward, plan.weights);
    feed(mixed.x, mixed.y);
  }

  if (outcome.matched) {
    const Matrix x_tilde = pseudo_contexts(cs, a);
    Matrix x_gram = x_tilde_base_gram_;
    x_gram.selfadjointView<Eigen::Lower>().rankUpdate(cs.context(a));
    x_gram.triangularView<Eigen::StrictlyUpper>() = x_gram.transpose();
    const Matrix y_hat = pseudo_rewards(x_tilde, mixed_.solve(), outcome.pseudo_action, reward);
    dr_.update(x_tilde, y_hat, x_gram);
    if (options_.record_updates) {
      log_.dr_x.push_back(x_tilde);
      log_.dr_y.push_back(y_hat);
    }
    if (dr_ridge_) {
      dr_ridge_->update(x_tilde, pseudo_rewards(x_tilde, ridge_.solve(), outcome.pseudo_action, reward), x_gram);
    }
  }
  ++rounds_;
}

Matrix EstimatorBundle::dr_ridge_estimate() const { return dr_ridge_ ? dr_ridge_->solve() : Matrix(); }

}  // namespace pfilin

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pfilin/common.hpp"
#include "pfilin/contexts.hpp"

namespace pfilin {

/// Exploration-budget constant that makes the estimation bound hold from the first round on.
inline constexpr double kTheoryGammaConstant = 33750.0;

/// gamma_t = C d^3 log(2 d t^2 / delta).
double gamma_t(std::size_t d, double t, double delta, double C);

/// First round t >= 1 with t >= gamma_t, searched up to `cap` (returns cap if none).
std::size_t warmup_round(std::size_t d, double delta, double C, std::size_t cap = 100000000);

/// Exploration rounds, draw counts and stored exploration samples.
class ExplorationLedger {
 public:
  struct Sample {
    std::size_t round = 0;
    ArmIndex arm = 0;
    Vector reward;
    std::size_t reuse_count = 0;
  };

  explicit ExplorationLedger(std::size_t num_arms);

  /// Counts a draw of `arm` as the round's check arm.
  void record_draw(ArmIndex arm);

  /// Explore iff the exploration count of `arm` (before this round) is at most
  /// (gamma / t) times its draw count (including this round). Inserts t on success.
  bool decide(std::size_t t, ArmIndex arm, double gamma);

  /// Inserts t unconditionally (scripted schedules).
  void force_exploration(std::size_t t, ArmIndex arm);

  void store_sample(ArmIndex arm, std::size_t round, Vector reward);

  /// Stored sample of `arm` with the fewest reuses, earliest round on ties.
  /// Increments its reuse count. Throws kNoExplorationSample if none is stored.
  const Sample& select_recycle(ArmIndex arm);

  std::size_t num_arms() const { return draws_.size(); }
  std::size_t draw_count(ArmIndex k) const { return draws_[k]; }
  std::size_t exploration_count(ArmIndex k) const { return explored_[k]; }
  const std::vector<Sample>& samples(ArmIndex k) const { return samples_[k]; }
  const std::vector<std::size_t>& exploration_rounds() const { return rounds_; }
  bool has_sample(ArmIndex k) const { return !samples_[k].empty(); }

  /// Every drawn arm was explored at least once, and every exploration count
  /// respects the budget in force when its last round was admitted. Forced
  /// insertions are exempt from the budget. On failure `why` names the arm.
  bool invariants_hold(std::string* why = nullptr) const;

 private:
  std::vector<std::size_t> draws_;
  std::vector<std::size_t> explored_;
  std::vector<std::size_t> forced_;
  std::vector<double> admitted_budget_;  // (gamma_s / s) * draws at the last admitted round s
  std::vector<std::vector<Sample>> samples_;
  std::vector<std::size_t> rounds_;
};

/// Mixing weights, each uniform on [-sqrt(3), sqrt(3)] (mean 0, variance 1).
struct MixWeights {
  double w = 1.0;
  double w_check = 0.0;

  static MixWeights draw(Rng& rng);
};

struct MixedSample {
  Vector x;  // w x_a + w_check sqrt(lambda_i) u_i
  Vector y;  // w Y_a + w_check ||v_i||_1 sign(v_{i, recycled_arm}) Y_recycled
};

MixedSample mix_sample(const ContextSet& cs, ArmIndex action, const Vector& reward, std::size_t basis,
                       ArmIndex recycled_arm, const Vector& recycled_reward, const MixWeights& weights);

/// Regularized least squares over d-dimensional contexts and L objectives:
/// gram = sum x x^T + regularizer I, moment = sum x y^T, theta = gram^{-1} moment.
class LeastSquaresState {
 public:
  LeastSquaresState(std::size_t dim, std::size_t num_objectives, double regularizer);

  void update(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);
  /// Columns of `xs` are contexts; row j of `ys` is the reward vector for column j.
  void update_block(const Matrix& xs, const Matrix& ys);
  /// Adds a precomputed sum of outer products to the gram and `xy` to the moment.
  void update_sums(const Matrix& xxt, const Matrix& xy);

  /// d x L; column l is the estimate for objective l.
  Matrix solve() const;

  const Matrix& gram() const { return gram_; }
  const Matrix& moment() const { return moment_; }
  double regularizer() const { return regularizer_; }
  std::size_t updates() const { return updates_; }

 private:
  Matrix gram_;
  Matrix moment_;
  double regularizer_;
  std::size_t updates_ = 0;
};

/// Doubly-robust estimator over the d+1 pseudo contexts, unit regularizer.
class DrMixState {
 public:
  DrMixState(std::size_t dim, std::size_t num_objectives);

  /// x_tilde is d x (d+1), y_hat is (d+1) x L.
  void update(const Matrix& x_tilde, const Matrix& y_hat);
  /// Same update when sum_i x~_i x~_i^T is already known.
  void update(const Matrix& x_tilde, const Matrix& y_hat, const Matrix& x_tilde_gram);

  Matrix solve() const { return ls_.solve(); }
  const Matrix& gram() const { return ls_.gram(); }
  const Matrix& moment() const { return ls_.moment(); }
  std::size_t matched_rounds() const { return ls_.updates(); }

 private:
  LeastSquaresState ls_;
};

/// Pseudo-action probabilities over d+1 outcomes: 1/(2d) for the d basis
/// rows (0 .. d-1), 1/2 for the action row d.
double pseudo_action_probability(std::size_t i, std::size_t d);
std::size_t draw_pseudo_action(std::size_t d, Rng& rng);

/// rho_t = log((t+1)^2 / delta') / log 2.
double rho_t(std::size_t t, double delta_prime);
/// ceil(rho_t), at least 1.
std::size_t max_attempts(std::size_t t, double delta_prime);

struct MatchOutcome {
  bool matched = false;
  ArmIndex action = 0;
  std::size_t pseudo_action = 0;
  std::size_t attempts = 0;
};

using ActionSampler = std::function<ArmIndex(Rng&)>;
using PseudoSampler = std::function<std::size_t(Rng&)>;

/// Joint draws (a_t, pseudo action) until the pseudo action is the action row
/// d or `attempts` draws have been made.
MatchOutcome resample_until_match(const ActionSampler& policy, const PseudoSampler& pseudo, std::size_t d,
                                  std::size_t attempts, Rng& rng);
MatchOutcome resample_until_match(const ActionSampler& policy, std::size_t d, std::size_t t, double delta_prime,
                                  Rng& rng);

/// d x (d+1): the basis contexts followed by x_action.
Matrix pseudo_contexts(const ContextSet& cs, ArmIndex action);

/// (d+1) x L table: row i is x~_i^T theta + 1(pseudo_action = i) / pi~_i (observed - x~_i^T theta),
/// theta being the d x L imputation.
Matrix pseudo_rewards(const Matrix& x_tilde, const Matrix& imputation, std::size_t pseudo_action,
                      const Eigen::Ref<const Vector>& observed);

enum class Phase { kExplore, kExploit };

std::string_view to_string(Phase phase);

struct EstimatorOptions {
  double gamma_constant = 1.0;
  double delta = 0.1;        // in gamma_t
  double delta_prime = 0.1;  // in rho_t
  /// Unmatched rounds still feed the exploration-mixed estimator.
  bool feed_unmatched = true;
  /// Also maintain a doubly-robust estimator that imputes with the ridge estimate.
  bool track_dr_ridge = false;
  /// Keep every (context, reward) pair fed to the mixed and DR estimators.
  bool record_updates = false;
};

struct UpdateLog {
  std::vector<Vector> mixed_x;
  std::vector<Vector> mixed_y;
  std::vector<Matrix> dr_x;  // d x (d+1) per matched round
  std::vector<Matrix> dr_y;  // (d+1) x L
};

struct RoundPlan {
  std::size_t round = 0;
  std::size_t basis = 0;
  ArmIndex check_arm = 0;
  Phase phase = Phase::kExplore;
  MixWeights weights;
};

/// All estimator state of one run, advanced one round at a time:
/// plan_round, couple, observe.
class EstimatorBundle {
 public:
  EstimatorBundle(std::shared_ptr<const ContextSet> contexts, std::size_t num_objectives, EstimatorOptions options);

  /// Draws the basis index and check arm for round t = rounds() + 1 and
  /// decides the phase by the exploration budget. `weights_rng` supplies the
  /// mixing weights of exploitation rounds.
  RoundPlan plan_round(Rng& algorithm_rng, Rng& weights_rng);

  /// As plan_round but with the phase imposed. An imposed exploitation round
  /// whose check arm has no stored exploration sample becomes an exploration round.
  RoundPlan plan_round_forced(Phase phase, Rng& algorithm_rng, Rng& weights_rng);

  /// Exploration rounds play the check arm; exploitation rounds redraw the
  /// action from `exploit_policy` at every attempt.
  MatchOutcome couple(const RoundPlan& plan, const ActionSampler& exploit_policy, Rng& resampling_rng) const;

  /// Consumes the reward of outcome.action and updates every estimator.
  void observe(const RoundPlan& plan, const MatchOutcome& outcome, const Vector& reward);

  Matrix ridge_estimate() const { return ridge_.solve(); }
  Matrix mixed_estimate() const { return mixed_.solve(); }
  Matrix dr_estimate() const { return dr_.solve(); }
  /// Empty when track_dr_ridge is off.
  Matrix dr_ridge_estimate() const;

  const ExplorationLedger& ledger() const { return ledger_; }
  const LeastSquaresState& ridge() const { return ridge_; }
  const LeastSquaresState& mixed() const { return mixed_; }
  const DrMixState& dr() const { return dr_; }
  const ContextSet& contexts() const { return *contexts_; }
  const EstimatorOptions& options() const { return options_; }
  const UpdateLog& update_log() const { return log_; }
  std::size_t rounds() const { return rounds_; }

 private:
  RoundPlan draw_plan(Rng& algorithm_rng);

  std::shared_ptr<const ContextSet> contexts_;
  EstimatorOptions options_;
  ExplorationLedger ledger_;
  LeastSquaresState ridge_;
  LeastSquaresState mixed_;
  DrMixState dr_;
  std::optional<DrMixState> dr_ridge_;
  Matrix x_tilde_base_gram_;  // sum_i s_i^2 u_i u_i^T
  UpdateLog log_;
  std::size_t rounds_ = 0;
};

}  // namespace pfilin

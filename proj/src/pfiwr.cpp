#include "pfilin/pfiwr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pfilin/pareto.hpp"

namespace pfilin {

std::string_view to_string(RunStatus status) {
  return status == RunStatus::kCompleted ? "completed" : "max_rounds_exceeded";
}

double confidence_width(std::size_t t, std::size_t n_undetermined, double theta_max, double sigma,
                        std::size_t num_objectives, std::size_t dim, double delta) {
  const double tt = static_cast<double>(t);
  const double L = static_cast<double>(num_objectives);
  const double d = static_cast<double>(dim);
  if (n_undetermined > dim) return theta_max + sigma * std::sqrt(d * std::log(7.0 * L * tt / delta));
  return theta_max + 3.0 * sigma * std::sqrt(std::log(28.0 * L * d * tt * tt / delta));
}

double confidence_bound(const ContextSet& cs, ArmIndex k, std::size_t t, std::size_t n_undetermined,
                        double theta_max, double sigma, std::size_t num_objectives, double delta) {
  return 3.0 * cs.design_norm(k, static_cast<double>(t)) *
         confidence_width(t, n_undetermined, theta_max, sigma, num_objectives, cs.dim(), delta);
}

GapTables gap_estimates(const Matrix& estimates, const ArmSet& arms, double eps) {
  const auto n = static_cast<Eigen::Index>(arms.size());
  GapTables g{arms, Matrix::Zero(n, n), Matrix::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto yi = estimates.row(static_cast<Eigen::Index>(arms[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto yj = estimates.row(static_cast<Eigen::Index>(arms[static_cast<std::size_t>(j)]));
      g.m(i, j) = std::max(0.0, (yj - yi).minCoeff());
      g.M_eps(i, j) = std::max(0.0, (yi - yj).maxCoeff() + 2.0 * eps);
    }
  }
  return g;
}

namespace {

Eigen::Index position(const ArmSet& arms, ArmIndex k) {
  const auto it = std::lower_bound(arms.begin(), arms.end(), k);
  if (it == arms.end() || *it != k) throw Error(ErrorCode::kInvalidArgument, "arm missing from gap tables");
  return static_cast<Eigen::Index>(it - arms.begin());
}

ArmSet set_union(const ArmSet& a, const ArmSet& b) {
  ArmSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

ArmSet set_difference(const ArmSet& a, const ArmSet& b) {
  ArmSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

Elimination eliminate(const ArmSet& undetermined, const ArmSet& accepted, const GapTables& tables,
                      const Vector& radii) {
  const ArmSet pool = set_union(undetermined, accepted);
  auto beta = [&](ArmIndex k) { return radii(static_cast<Eigen::Index>(k)); };

  Elimination out;
  for (ArmIndex k : undetermined) {
    const Eigen::Index pk = position(tables.arms, k);
    bool keep = true;
    for (ArmIndex j : pool) {
      if (tables.m(pk, position(tables.arms, j)) > beta(k) + beta(j)) {
        keep = false;
        break;
      }
    }
    if (keep) out.kept.push_back(k);
  }
  const ArmSet rivals = set_union(out.kept, accepted);
  for (ArmIndex k : out.kept) {
    const Eigen::Index pk = position(tables.arms, k);
    bool accept = true;
    for (ArmIndex j : rivals) {
      if (j == k) continue;
      if (tables.M_eps(pk, position(tables.arms, j)) < beta(k) + beta(j)) {
        accept = false;
        break;
      }
    }
    if (accept) out.accepted.push_back(k);
  }
  return out;
}

ArmSet estimated_nondominated(const ArmSet& undetermined, const Matrix& estimates) {
  ArmSet out;
  for (ArmIndex k : undetermined) {
    bool dominated = false;
    for (ArmIndex j : undetermined) {
      if (j != k && dominated_by(estimates.row(static_cast<Eigen::Index>(k)).transpose(),
                                 estimates.row(static_cast<Eigen::Index>(j)).transpose())) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(k);
  }
  return out.empty() ? undetermined : out;
}

RunResult run_pfiwr(const Environment& env, std::shared_ptr<const ContextSet> contexts, const PfiConfig& config,
                    RngStreams& streams, const RoundObserver& observer) {
  const ContextSet& cs = *contexts;
  const std::size_t K = cs.num_arms();
  const std::size_t L = env.num_objectives();
  if (env.num_arms() != K) throw Error(ErrorCode::kLengthMismatch, "environment and contexts disagree on K");
  if (!(config.epsilon > 0.0)) throw Error(ErrorCode::kInvalidParameter, "epsilon must be positive");
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw Error(ErrorCode::kInvalidParameter, "delta must be in (0,1)");
  if (!(config.theta_max >= 0.0 && config.sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "theta_max and sigma must be nonnegative");
  }

  const GapProfile truth = gap_profile(env.means());
  EstimatorOptions options;
  options.gamma_constant = config.gamma_constant;
  options.delta = config.delta;
  options.delta_prime = config.delta;
  options.feed_unmatched = config.feed_unmatched;
  EstimatorBundle bundle(contexts, L, options);

  ArmSet undetermined(K);
  for (ArmIndex k = 0; k < K; ++k) undetermined[k] = k;
  ArmSet accepted;
  Matrix estimates = Matrix::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(L));
  Vector radii = Vector::Constant(static_cast<Eigen::Index>(K), std::numeric_limits<double>::quiet_NaN());
  ArmSet candidates = undetermined;

  RunResult result;
  result.status = RunStatus::kMaxRoundsExceeded;
  const ActionSampler policy = [&candidates](Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)];
  };

  for (std::size_t t = 1; t <= config.max_rounds; ++t) {
    const RoundPlan plan = bundle.plan_round(streams.algorithm, streams.weights);
    const MatchOutcome outcome = bundle.couple(plan, policy, streams.resampling);
    const Vector reward = env.pull(outcome.action, streams.environment);
    bundle.observe(plan, outcome, reward);

    const ArmSet previous = undetermined;
    if (outcome.matched) {
      estimates.noalias() = cs.contexts().transpose() * bundle.dr_estimate();
      const ArmSet pool = set_union(undetermined, accepted);
      radii.setConstant(std::numeric_limits<double>::quiet_NaN());
      for (ArmIndex k : pool) {
        radii(static_cast<Eigen::Index>(k)) =
            confidence_bound(cs, k, t, undetermined.size(), config.theta_max, config.sigma, L, config.delta);
      }
      const GapTables tables = gap_estimates(estimates, pool, config.epsilon);
      const Elimination step = eliminate(undetermined, accepted, tables, radii);
      accepted = set_union(accepted, step.accepted);
      undetermined = set_difference(step.kept, step.accepted);
      if (!undetermined.empty()) candidates = estimated_nondominated(undetermined, estimates);
    }

    RoundRecord rec;
    rec.round = t;
    rec.phase = plan.phase;
    rec.basis = plan.basis;
    rec.check_arm = plan.check_arm;
    rec.action = outcome.action;
    rec.matched = outcome.matched;
    rec.attempts = outcome.attempts;
    rec.regret = pareto_regret(outcome.action, truth);
    rec.n_undetermined = undetermined.size();
    rec.n_accepted = accepted.size();
    result.cumulative_regret += rec.regret;
    result.regret.push_back(rec.regret);
    if (config.keep_history) result.history.push_back(rec);
    if (observer) observer(RoundView{rec, undetermined, accepted, estimates, radii, previous});

    result.tau = t;
    if (undetermined.empty()) {
      result.status = RunStatus::kCompleted;
      break;
    }
  }
  result.pareto_out = accepted;
  return result;
}

}  // namespace pfilin

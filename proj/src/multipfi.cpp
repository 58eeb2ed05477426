#include "pfilin/multipfi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pfilin/pareto.hpp"

namespace pfilin {

MabEstimate::MabEstimate(std::size_t num_arms, std::size_t num_objectives)
    : counts_(num_arms, 0),
      means_(Matrix::Zero(static_cast<Eigen::Index>(num_arms), static_cast<Eigen::Index>(num_objectives))) {}

void MabEstimate::add(ArmIndex k, const Eigen::Ref<const Vector>& reward) {
  const auto row = static_cast<Eigen::Index>(k);
  const double n = static_cast<double>(++counts_.at(k));
  means_.row(row) += (reward.transpose() - means_.row(row)) / n;
}

double multipfi_radius(std::size_t n, std::size_t num_arms, std::size_t num_objectives, double delta,
                       double radius_scale) {
  if (n == 0) return std::numeric_limits<double>::infinity();
  const double nn = static_cast<double>(n);
  const double LK = static_cast<double>(num_arms * num_objectives);
  return radius_scale * std::sqrt(2.0 / nn * std::log(4.0 * LK * nn * nn / delta));
}

namespace {

ArmSet merge(const ArmSet& a, const ArmSet& b) {
  ArmSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

ArmSet minus(const ArmSet& a, const ArmSet& b) {
  ArmSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Eigen::Index index_of(const ArmSet& arms, ArmIndex k) {
  return static_cast<Eigen::Index>(std::lower_bound(arms.begin(), arms.end(), k) - arms.begin());
}

}  // namespace

RunResult run_multipfi(const Environment& env, const ContextSet& contexts, const MultiPfiConfig& config,
                       Rng& environment_rng, const RoundObserver& observer) {
  if (!contexts.is_euclidean_basis()) throw Error(ErrorCode::kNotMab, "the baseline needs Euclidean-basis contexts");
  const std::size_t K = env.num_arms();
  const std::size_t L = env.num_objectives();
  if (contexts.num_arms() != K) throw Error(ErrorCode::kLengthMismatch, "environment and contexts disagree on K");
  if (!(config.epsilon > 0.0)) throw Error(ErrorCode::kInvalidParameter, "epsilon must be positive");
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw Error(ErrorCode::kInvalidParameter, "delta must be in (0,1)");

  const GapProfile truth = gap_profile(env.means());
  MabEstimate est(K, L);
  ArmSet undetermined(K);
  for (ArmIndex k = 0; k < K; ++k) undetermined[k] = k;
  ArmSet held;
  ArmSet released;
  Vector radii = Vector::Constant(static_cast<Eigen::Index>(K), std::numeric_limits<double>::quiet_NaN());

  RunResult result;
  result.status = RunStatus::kMaxRoundsExceeded;
  std::size_t t = 0;
  bool out_of_rounds = false;

  while (!undetermined.empty() || !held.empty()) {
    const ArmSet active = merge(undetermined, held);
    const ArmSet previous = undetermined;
    for (std::size_t pos = 0; pos < active.size(); ++pos) {
      if (t == config.max_rounds) {
        out_of_rounds = true;
        break;
      }
      const ArmIndex k = active[pos];
      ++t;
      est.add(k, env.pull(k, environment_rng));

      if (pos + 1 == active.size()) {
        // End of epoch: eliminate, accept, release.
        const ArmSet pool = merge(active, released);
        radii.setConstant(std::numeric_limits<double>::quiet_NaN());
        for (ArmIndex j : pool) {
          radii(static_cast<Eigen::Index>(j)) = multipfi_radius(est.count(j), K, L, config.delta, config.radius_scale);
        }
        const GapTables with_slack = gap_estimates(est.means(), pool, config.epsilon);
        const GapTables plain = gap_estimates(est.means(), pool, 0.0);
        const Elimination step = eliminate(undetermined, merge(held, released), with_slack, radii);
        undetermined = minus(step.kept, step.accepted);
        held = merge(held, step.accepted);
        ArmSet freed;
        for (ArmIndex j : held) {
          bool done = true;
          for (ArmIndex i : undetermined) {
            const double need = radii(static_cast<Eigen::Index>(i)) + radii(static_cast<Eigen::Index>(j));
            if (plain.M_eps(index_of(pool, i), index_of(pool, j)) < need) {
              done = false;
              break;
            }
          }
          if (done) freed.push_back(j);
        }
        held = minus(held, freed);
        released = merge(released, freed);
      }

      RoundRecord rec;
      rec.round = t;
      rec.phase = Phase::kExplore;
      rec.basis = k;
      rec.check_arm = k;
      rec.action = k;
      rec.matched = true;
      rec.attempts = 1;
      rec.regret = pareto_regret(k, truth);
      rec.n_undetermined = undetermined.size();
      rec.n_accepted = held.size() + released.size();
      result.cumulative_regret += rec.regret;
      result.regret.push_back(rec.regret);
      if (config.keep_history) result.history.push_back(rec);
      if (observer) {
        const ArmSet accepted = merge(held, released);
        observer(RoundView{rec, undetermined, accepted, est.means(), radii, previous});
      }
    }
    if (out_of_rounds) break;
  }
  if (!out_of_rounds) result.status = RunStatus::kCompleted;
  result.tau = t;
  result.pareto_out = merge(held, released);
  return result;
}

}  // namespace pfilin

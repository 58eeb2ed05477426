#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pfilin/common.hpp"
#include "pfilin/contexts.hpp"
#include "pfilin/environments.hpp"
#include "pfilin/estimators.hpp"

namespace pfilin {

struct RoundRecord {
  std::size_t round = 0;
  Phase phase = Phase::kExplore;
  std::size_t basis = 0;
  ArmIndex check_arm = 0;
  ArmIndex action = 0;
  bool matched = false;
  std::size_t attempts = 0;
  double regret = 0.0;
  std::size_t n_undetermined = 0;
  std::size_t n_accepted = 0;
};

enum class RunStatus { kCompleted, kMaxRoundsExceeded };

std::string_view to_string(RunStatus status);

struct RunResult {
  RunStatus status = RunStatus::kCompleted;
  /// Accepted arms; on kMaxRoundsExceeded the arms accepted so far.
  ArmSet pareto_out;
  /// Rounds played (the stopping time when completed).
  std::size_t tau = 0;
  double cumulative_regret = 0.0;
  /// Instantaneous regret per round, length tau.
  std::vector<double> regret;
  /// Empty unless history was requested.
  std::vector<RoundRecord> history;
};

/// Undetermined and accepted sets after a round, with the quantities used to update them.
struct RoundView {
  const RoundRecord& record;
  const ArmSet& undetermined;
  const ArmSet& accepted;
  /// K x L estimated means; stale (previous matched round) on unmatched rounds.
  const Matrix& estimates;
  /// Confidence radii per arm at this round; NaN outside A_{t-1} and P_{t-1}.
  const Vector& radii;
  /// The undetermined set before this round's update.
  const ArmSet& previous_undetermined;
};

using RoundObserver = std::function<void(const RoundView&)>;

struct PfiConfig {
  double epsilon = 0.06;
  double delta = 0.1;
  double sigma = 0.1;
  double theta_max = 1.0;
  double gamma_constant = 1.0;
  std::size_t max_rounds = 1000000;
  bool feed_unmatched = true;
  bool keep_history = false;
};

/// Radius factor: theta_max + sigma sqrt(d log(7 L t / delta)) while more than d
/// arms are undetermined, theta_max + 3 sigma sqrt(log(28 L d t^2 / delta)) otherwise.
double confidence_width(std::size_t t, std::size_t n_undetermined, double theta_max, double sigma,
                        std::size_t num_objectives, std::size_t dim, double delta);

/// beta_{k,t} = 3 ||x_k||_{F_t^{-1}} confidence_width(...).
double confidence_bound(const ContextSet& cs, ArmIndex k, std::size_t t, std::size_t n_undetermined,
                        double theta_max, double sigma, std::size_t num_objectives, double delta);

/// Pairwise estimated gaps over `arms` (indices into the rows of `estimates`).
/// m(i, j) = max{0, min_l (y_j - y_i)}, M(i, j) = max{0, max_l (y_i + 2 eps - y_j)}.
struct GapTables {
  ArmSet arms;
  Matrix m;
  Matrix M_eps;
};

GapTables gap_estimates(const Matrix& estimates, const ArmSet& arms, double eps);

struct Elimination {
  ArmSet kept;      // C_t
  ArmSet accepted;  // P_t^(1)
};

/// C_t = {k in A : m(k, k') <= beta_k + beta_k' for all k' in A u P},
/// P_t^(1) = {k in C_t : M_eps(k, k') >= beta_k + beta_k' for all k' in (C_t u P) \ {k}}.
/// `tables` must cover A u P; `radii` is indexed by arm.
Elimination eliminate(const ArmSet& undetermined, const ArmSet& accepted, const GapTables& tables,
                      const Vector& radii);

/// Arms of A whose estimate is not strictly dominated by another arm of A;
/// all of A when that set is empty.
ArmSet estimated_nondominated(const ArmSet& undetermined, const Matrix& estimates);

/// Runs the elimination loop until no arm is undetermined or max_rounds is hit.
RunResult run_pfiwr(const Environment& env, std::shared_ptr<const ContextSet> contexts, const PfiConfig& config,
                    RngStreams& streams, const RoundObserver& observer = {});

}  // namespace pfilin

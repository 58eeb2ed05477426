#pragma once

#include "pfilin/common.hpp"
#include "pfilin/contexts.hpp"
#include "pfilin/environments.hpp"
#include "pfilin/pfiwr.hpp"

namespace pfilin {

/// Per-arm pull counts and running mean reward vectors.
class MabEstimate {
 public:
  MabEstimate(std::size_t num_arms, std::size_t num_objectives);

  void add(ArmIndex k, const Eigen::Ref<const Vector>& reward);

  std::size_t count(ArmIndex k) const { return counts_[k]; }
  /// K x L; rows of unpulled arms are zero.
  const Matrix& means() const { return means_; }

 private:
  std::vector<std::size_t> counts_;
  Matrix means_;
};

struct MultiPfiConfig {
  double epsilon = 0.06;
  double delta = 0.1;
  /// Multiplies the radius; 0 turns the confidence intervals off.
  double radius_scale = 1.0;
  std::size_t max_rounds = 1000000;
  bool keep_history = false;
};

/// radius_scale * sqrt((2 / n) log(4 L K n^2 / delta)); +inf for n = 0.
double multipfi_radius(std::size_t n, std::size_t num_arms, std::size_t num_objectives, double delta,
                       double radius_scale = 1.0);

/// Successive elimination on a K-armed bandit. Every active arm is pulled once
/// per epoch. After each epoch, undetermined arms dominated by more than the
/// sum of radii are removed and arms that are confidently not dominated (with
/// the 2 eps slack) are accepted. An accepted arm keeps being pulled while some
/// undetermined arm could still be dominated by it.
///
/// Throws kNotMab unless the contexts are the Euclidean basis.
RunResult run_multipfi(const Environment& env, const ContextSet& contexts, const MultiPfiConfig& config,
                       Rng& environment_rng, const RoundObserver& observer = {});

}  // namespace pfilin

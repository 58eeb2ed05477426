#pragma once

#include "pfilin/common.hpp"

namespace pfilin {

/// Amount by which arm j dominates arm k: max{0, min_l (y_j - y_k)}.
/// Positive iff y_k is strictly below y_j in every objective.
double m_gap(const Eigen::Ref<const Vector>& y_k, const Eigen::Ref<const Vector>& y_j);

/// Uniform lift of y_j needed for y_k to be weakly dominated by it:
/// max{0, max_l (y_k - y_j)}. Zero iff y_k <= y_j componentwise.
double M_gap(const Eigen::Ref<const Vector>& y_k, const Eigen::Ref<const Vector>& y_j);

/// a < b: b is >= a everywhere and > somewhere.
bool dominated_by(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

/// Arms (rows of `means`, K x L) not strictly dominated by another arm.
/// Identical vectors do not dominate each other.
ArmSet pareto_front(const Matrix& means);

/// Per-arm gap quantities of a mean-reward table. Empty minima are +inf.
struct GapProfile {
  ArmSet front;
  Vector delta_star;   // distance to the front, 0 on the front
  Vector delta_plus;   // front arms only; +inf elsewhere
  Vector delta_minus;  // front arms only; +inf elsewhere
  Vector delta;        // required accuracy per arm

  /// True when some front arm has a zero required accuracy (duplicate means).
  bool degenerate() const;
};

GapProfile gap_profile(const Matrix& means);

/// Instantaneous Pareto regret of playing arm k.
double pareto_regret(ArmIndex k, const GapProfile& profile);
double pareto_regret(ArmIndex k, const Matrix& means);

/// Output `P` contains the whole front and every extra arm is within eps of it.
bool success_check(const ArmSet& output, const Matrix& means, double eps);

/// Sample-complexity lower bound (sigma^2/3) sum_{k<=d} max{Delta_(k), eps}^{-2} log(3L/(4 delta)),
/// over the d smallest required accuracies.
double sample_lower_bound(const GapProfile& profile, double sigma, std::size_t num_objectives, double delta,
                          double eps, std::size_t dim);

/// Regret lower bound sqrt(3) d sigma / (8 Delta*_eps) log(1/(4 delta)).
double regret_lower_bound(double delta_star_eps, double sigma, std::size_t dim, double delta);

/// Delta*_eps = max{eps, min over suboptimal arms of Delta*_k} (eps when every arm is on the front).
double min_suboptimal_gap(const GapProfile& profile, double eps);

}  // namespace pfilin

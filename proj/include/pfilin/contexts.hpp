#pragma once

#include <string>
#include <vector>

#include "pfilin/common.hpp"

namespace pfilin {

/// The fixed context matrix X = [x_1, ..., x_K] (d x K) together with its
/// reduced SVD X = sum_i s_i u_i v_i^T and the basis-action sampling
/// distributions derived from it.
///
/// With orthonormal right vectors v_i, the Gram matrix sum_k x_k x_k^T equals
/// sum_i lambda_i u_i u_i^T with lambda_i = s_i^2, and drawing an arm from
/// pi^(i)_k = |v_ik| / ||v_i||_1 and reweighting its reward by
/// ||v_i||_1 sign(v_ik) yields an unbiased reward for the basis context
/// sqrt(lambda_i) u_i = s_i u_i.
///
/// Immutable after construction and safe to share across threads.
class ContextSet {
 public:
  /// Columns of `contexts` are the arm contexts. Throws kNormViolation if a
  /// column norm exceeds 1 + 1e-9 and kRankDeficient if X does not span R^d.
  static ContextSet build(const Matrix& contexts);

  /// X = I_k, the multi-armed bandit reduction.
  static ContextSet euclidean_basis(std::size_t num_arms);

  std::size_t dim() const { return static_cast<std::size_t>(contexts_.rows()); }
  std::size_t num_arms() const { return static_cast<std::size_t>(contexts_.cols()); }

  const Matrix& contexts() const { return contexts_; }
  Eigen::Ref<const Vector> context(ArmIndex k) const { return contexts_.col(static_cast<Eigen::Index>(k)); }

  /// u_i as columns (d x d).
  const Matrix& left_vectors() const { return left_; }
  /// v_i as columns (K x d).
  const Matrix& right_vectors() const { return right_; }
  /// s_i, descending.
  const Vector& singular_values() const { return singular_; }
  /// lambda_i = s_i^2, the eigenvalues of sum_k x_k x_k^T.
  double gram_eigenvalue(std::size_t i) const { return singular_(static_cast<Eigen::Index>(i)) * singular_(static_cast<Eigen::Index>(i)); }
  /// sqrt(lambda_i) u_i.
  Vector basis_context(std::size_t i) const;
  /// d x d matrix whose columns are the basis contexts.
  const Matrix& basis_contexts() const { return basis_; }

  const Vector& basis_pmf(std::size_t i) const { return pmfs_[i]; }
  double v_l1_norm(std::size_t i) const { return l1_norms_(static_cast<Eigen::Index>(i)); }

  /// Draws k with probability pi^(i)_k.
  ArmIndex sample_basis_action(std::size_t i, Rng& rng) const;

  /// ||v_i||_1 sign(v_ik) y, with sign(0) = +1.
  double reward_reweight(std::size_t i, ArmIndex k, double y) const;

  /// sum_k x_k x_k^T.
  const Matrix& gram() const { return gram_; }

  /// F_t = t sum_k x_k x_k^T + I_d.
  Matrix design_matrix(double t) const;

  /// ||x_k||_{F_t^{-1}}.
  double design_norm(ArmIndex k, double t) const;

  /// True when X is the identity (up to `tol`), i.e. a plain K-armed bandit.
  bool is_euclidean_basis(double tol = 1e-12) const;

 private:
  ContextSet() = default;

  Matrix contexts_;
  Matrix left_;
  Matrix right_;
  Vector singular_;
  Matrix basis_;
  std::vector<Vector> pmfs_;
  std::vector<std::discrete_distribution<std::size_t>::param_type> samplers_;
  Vector l1_norms_;
  Matrix gram_;
  // (u_i^T x_k)^2, d x K; design norms reduce to a weighted column sum.
  Matrix squared_projections_;
};

/// Reads one arm per row, `expected_dim` comma-separated values per row. A
/// non-numeric first row is treated as a header. Returns X (d x K).
Matrix load_contexts_csv(const std::string& path, std::size_t expected_dim);

}  // namespace pfilin

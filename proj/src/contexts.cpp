#include "pfilin/contexts.hpp"

#include <cmath>
#include <limits>

#include "pfilin/csv.hpp"

namespace pfilin {

ContextSet ContextSet::build(const Matrix& contexts) {
  const Eigen::Index d = contexts.rows();
  const Eigen::Index K = contexts.cols();
  if (d == 0 || K == 0) throw Error(ErrorCode::kInvalidArgument, "empty context matrix");
  for (Eigen::Index k = 0; k < K; ++k) {
    const double norm = contexts.col(k).norm();
    if (!(norm <= 1.0 + 1e-9)) {
      throw Error(ErrorCode::kNormViolation, "context " + std::to_string(k) + " has norm " + csv::format_number(norm));
    }
  }
  if (K < d) throw Error(ErrorCode::kRankDeficient, "fewer arms than dimensions");

  Eigen::JacobiSVD<Matrix> svd(contexts, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double tol = static_cast<double>(d) * std::numeric_limits<double>::epsilon() * s(0);
  if (!(s(d - 1) > tol)) {
    throw Error(ErrorCode::kRankDeficient, "contexts do not span R^" + std::to_string(d));
  }

  ContextSet cs;
  cs.contexts_ = contexts;
  cs.left_ = svd.matrixU();
  cs.right_ = svd.matrixV();
  cs.singular_ = s;
  cs.basis_ = cs.left_ * s.asDiagonal();
  cs.gram_ = contexts * contexts.transpose();
  cs.l1_norms_.resize(d);
  cs.pmfs_.reserve(static_cast<std::size_t>(d));
  cs.samplers_.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const Vector magnitudes = cs.right_.col(i).cwiseAbs();
    const double l1 = magnitudes.sum();
    cs.l1_norms_(i) = l1;
    cs.pmfs_.push_back(magnitudes / l1);
    cs.samplers_.emplace_back(magnitudes.data(), magnitudes.data() + magnitudes.size());
  }
  cs.squared_projections_ = (cs.left_.transpose() * contexts).cwiseAbs2();
  return cs;
}

ContextSet ContextSet::euclidean_basis(std::size_t num_arms) {
  const auto n = static_cast<Eigen::Index>(num_arms);
  return build(Matrix::Identity(n, n));
}

Vector ContextSet::basis_context(std::size_t i) const { return basis_.col(static_cast<Eigen::Index>(i)); }

ArmIndex ContextSet::sample_basis_action(std::size_t i, Rng& rng) const {
  if (i >= dim()) throw Error(ErrorCode::kInvalidArgument, "basis index out of range");
  std::discrete_distribution<std::size_t> dist;
  return dist(rng, samplers_[i]);
}

double ContextSet::reward_reweight(std::size_t i, ArmIndex k, double y) const {
  if (i >= dim() || k >= num_arms()) throw Error(ErrorCode::kInvalidArgument, "index out of range");
  const double l1 = l1_norms_(static_cast<Eigen::Index>(i));
  if (l1 == 0.0) throw Error(ErrorCode::kZeroBasis, "basis " + std::to_string(i) + " has zero l1 norm");
  const double v = right_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
  return (v < 0.0 ? -l1 : l1) * y;
}

Matrix ContextSet::design_matrix(double t) const {
  const auto d = static_cast<Eigen::Index>(dim());
  return t * gram_ + Matrix::Identity(d, d);
}

double ContextSet::design_norm(ArmIndex k, double t) const {
  // F_t = U diag(t lambda_i + 1) U^T, so x^T F_t^{-1} x = sum_i (u_i^T x)^2 / (t lambda_i + 1).
  double acc = 0.0;
  const auto col = static_cast<Eigen::Index>(k);
  for (Eigen::Index i = 0; i < singular_.size(); ++i) {
    acc += squared_projections_(i, col) / (t * singular_(i) * singular_(i) + 1.0);
  }
  return std::sqrt(acc);
}

bool ContextSet::is_euclidean_basis(double tol) const {
  if (contexts_.rows() != contexts_.cols()) return false;
  return (contexts_ - Matrix::Identity(contexts_.rows(), contexts_.cols())).cwiseAbs().maxCoeff() <= tol;
}

Matrix load_contexts_csv(const std::string& path, std::size_t expected_dim) {
  const Matrix rows = csv::read_numeric_table(path);
  if (static_cast<std::size_t>(rows.cols()) != expected_dim) {
    throw Error(ErrorCode::kLengthMismatch, path + ": expected " + std::to_string(expected_dim) + " columns, found " +
                                                std::to_string(rows.cols()));
  }
  return rows.transpose();
}

}  // namespace pfilin

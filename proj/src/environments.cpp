#include "pfilin/environments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pfilin {

RewardModel RewardModel::make(Matrix theta, double sigma, Matrix noise_corr, double theta_max, NoiseFamily family) {
  if (theta.cols() == 0 || theta.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "empty parameter matrix");
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "sigma must be nonnegative");
  const Eigen::Index L = theta.cols();
  if (noise_corr.size() == 0) noise_corr = Matrix::Identity(L, L);
  if (noise_corr.rows() != L || noise_corr.cols() != L) {
    throw Error(ErrorCode::kLengthMismatch, "noise correlation must be L x L");
  }
  if ((noise_corr - noise_corr.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::kInvalidParameter, "noise correlation is not symmetric");
  }
  if ((noise_corr.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::kInvalidParameter, "noise correlation must have unit diagonal");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(noise_corr);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw Error(ErrorCode::kInvalidParameter, "noise correlation is not positive semidefinite");
  }
  const double largest_norm = theta.colwise().norm().maxCoeff();
  if (theta_max < 0.0) theta_max = largest_norm;
  if (largest_norm > theta_max + 1e-9) {
    throw Error(ErrorCode::kInvalidParameter, "parameter norm exceeds theta_max");
  }
  return RewardModel{std::move(theta), theta_max, sigma, std::move(noise_corr), family};
}

Matrix RewardModel::noise_factor() const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(noise_corr);
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal();
}

namespace {

Vector draw_noise(const Matrix& factor, double sigma, NoiseFamily family, Rng& rng) {
  const Eigen::Index L = factor.rows();
  if (sigma == 0.0) return Vector::Zero(L);
  Vector z(L);
  if (family == NoiseFamily::kGaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index l = 0; l < L; ++l) z(l) = normal(rng);
  } else {
    std::uniform_real_distribution<double> uniform(-std::sqrt(3.0), std::sqrt(3.0));
    for (Eigen::Index l = 0; l < L; ++l) z(l) = uniform(rng);
  }
  return sigma * (factor * z);
}

}  // namespace

Vector pull_linear(const RewardModel& model, const ContextSet& cs, ArmIndex k, Rng& rng) {
  if (k >= cs.num_arms()) throw Error(ErrorCode::kInvalidArgument, "arm out of range");
  return model.theta.transpose() * cs.context(k) + draw_noise(model.noise_factor(), model.sigma, model.family, rng);
}

LinearEnvironment::LinearEnvironment(std::shared_ptr<const ContextSet> contexts, RewardModel model)
    : contexts_(std::move(contexts)), model_(std::move(model)) {
  if (static_cast<std::size_t>(model_.theta.rows()) != contexts_->dim()) {
    throw Error(ErrorCode::kLengthMismatch, "parameter rows must equal the context dimension");
  }
  factor_ = model_.noise_factor();
  means_ = contexts_->contexts().transpose() * model_.theta;
}

Vector LinearEnvironment::pull(ArmIndex k, Rng& rng) const {
  if (k >= num_arms()) throw Error(ErrorCode::kInvalidArgument, "arm out of range");
  return means_.row(static_cast<Eigen::Index>(k)).transpose() + draw_noise(factor_, model_.sigma, model_.family, rng);
}

MabInstance make_mab(const Matrix& means, double sigma, Matrix noise_corr, NoiseFamily family) {
  auto contexts = std::make_shared<const ContextSet>(ContextSet::euclidean_basis(static_cast<std::size_t>(means.rows())));
  return MabInstance{std::move(contexts), RewardModel::make(means, sigma, std::move(noise_corr), -1.0, family)};
}

// ---------------------------------------------------------------------------
// k-means

namespace {

std::size_t nearest_center(const Matrix& centers, const Eigen::Ref<const Vector>& point, double* distance) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double dist = (centers.row(c).transpose() - point).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = static_cast<std::size_t>(c);
    }
  }
  if (distance) *distance = best_d;
  return best;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Matrix centers(static_cast<Eigen::Index>(k), points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = points.row(first(rng));
  Vector dist2(n);
  for (Eigen::Index i = 0; i < n; ++i) dist2(i) = (points.row(i) - centers.row(0)).squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    Eigen::Index pick = 0;
    if (dist2.sum() > 0.0) {
      std::discrete_distribution<Eigen::Index> weighted(dist2.data(), dist2.data() + n);
      pick = weighted(rng);
    } else {
      pick = first(rng);
    }
    centers.row(static_cast<Eigen::Index>(c)) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      dist2(i) = std::min(dist2(i), (points.row(i) - points.row(pick)).squaredNorm());
    }
  }
  return centers;
}

// One Lloyd run; returns false if a cluster became empty.
bool lloyd(const Matrix& points, Matrix& centers, std::vector<std::size_t>& labels, double& inertia,
           std::size_t max_iterations) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centers.rows();
  labels.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = iter == 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t label = nearest_center(centers, points.row(i).transpose(), nullptr);
      if (label != labels[static_cast<std::size_t>(i)]) changed = true;
      labels[static_cast<std::size_t>(i)] = label;
    }
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) += points.row(i);
      ++counts[labels[static_cast<std::size_t>(i)]];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) return false;
      centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    if (!changed) break;
  }
  inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double dist = 0.0;
    labels[static_cast<std::size_t>(i)] = nearest_center(centers, points.row(i).transpose(), &dist);
    inertia += dist;
  }
  return true;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t num_clusters, Rng& rng, std::size_t restarts,
                    std::size_t max_iterations) {
  if (num_clusters == 0 || static_cast<Eigen::Index>(num_clusters) > points.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "cluster count must be in [1, N]");
  }
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  std::size_t completed = 0;
  std::size_t attempts = 0;
  const std::size_t attempt_cap = 20 * restarts + 100;
  while (completed < restarts && attempts < attempt_cap) {
    ++attempts;
    Matrix centers = seed_plus_plus(points, num_clusters, rng);
    std::vector<std::size_t> labels;
    double inertia = 0.0;
    if (!lloyd(points, centers, labels, inertia, max_iterations)) continue;
    ++completed;
    if (inertia < best.inertia) best = KMeansResult{std::move(labels), std::move(centers), inertia};
  }
  if (completed == 0) throw Error(ErrorCode::kInvalidArgument, "k-means could not avoid empty clusters");
  return best;
}

// ---------------------------------------------------------------------------
// clustered environment

ClusteredEnvironment::ClusteredEnvironment(std::vector<Matrix> clusters, Vector norm_mean, Vector norm_sd)
    : clusters_(std::move(clusters)), norm_mean_(std::move(norm_mean)), norm_sd_(std::move(norm_sd)) {
  if (clusters_.empty()) throw Error(ErrorCode::kInvalidArgument, "no clusters");
  const Eigen::Index L = clusters_.front().cols();
  means_.resize(static_cast<Eigen::Index>(clusters_.size()), L);
  for (std::size_t k = 0; k < clusters_.size(); ++k) {
    if (clusters_[k].rows() == 0 || clusters_[k].cols() != L) {
      throw Error(ErrorCode::kInvalidArgument, "cluster " + std::to_string(k) + " is empty or malformed");
    }
    means_.row(static_cast<Eigen::Index>(k)) = clusters_[k].colwise().mean();
  }
}

Vector ClusteredEnvironment::pull(ArmIndex k, Rng& rng) const {
  if (k >= clusters_.size()) throw Error(ErrorCode::kInvalidArgument, "arm out of range");
  const Matrix& members = clusters_[k];
  std::uniform_int_distribution<Eigen::Index> pick(0, members.rows() - 1);
  return members.row(pick(rng)).transpose();
}

std::vector<std::size_t> ClusteredEnvironment::cluster_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(clusters_.size());
  for (const Matrix& c : clusters_) sizes.push_back(static_cast<std::size_t>(c.rows()));
  return sizes;
}

double ClusteredEnvironment::within_cluster_sd() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < clusters_.size(); ++k) {
    const Matrix centered = clusters_[k].rowwise() - means_.row(static_cast<Eigen::Index>(k));
    const Vector var = centered.colwise().squaredNorm() / static_cast<double>(clusters_[k].rows());
    worst = std::max(worst, std::sqrt(var.maxCoeff()));
  }
  return worst;
}

ClusteredEnvironment load_clustered(const Matrix& rows, std::size_t num_clusters, Rng& rng, std::size_t restarts) {
  if (rows.cols() < 1) throw Error(ErrorCode::kInvalidArgument, "reward table needs at least one column");
  if (static_cast<Eigen::Index>(num_clusters) > rows.rows() || num_clusters == 0) {
    throw Error(ErrorCode::kInvalidArgument, "need 1 <= K <= N");
  }
  const double n = static_cast<double>(rows.rows());
  const Vector mean = rows.colwise().mean();
  const Matrix centered = rows.rowwise() - mean.transpose();
  const Vector sd = (centered.colwise().squaredNorm() / n).cwiseSqrt();
  for (Eigen::Index l = 0; l < sd.size(); ++l) {
    if (!(sd(l) > 0.0)) throw Error(ErrorCode::kDegenerateColumn, "column " + std::to_string(l) + " has zero variance");
  }
  const Matrix standardized = centered * sd.cwiseInverse().asDiagonal();

  const KMeansResult result = kmeans(standardized, num_clusters, rng, restarts);
  std::vector<std::vector<Eigen::Index>> members(num_clusters);
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    members[result.labels[i]].push_back(static_cast<Eigen::Index>(i));
  }
  std::vector<Matrix> clusters;
  clusters.reserve(num_clusters);
  for (const auto& idx : members) clusters.emplace_back(standardized(idx, Eigen::all));
  return ClusteredEnvironment(std::move(clusters), mean, sd);
}

Vector pull_clustered(const ClusteredEnvironment& env, ArmIndex k, Rng& rng) { return env.pull(k, rng); }

Matrix generate_surrogate_rewards(Rng& rng, double spread) {
  // Five mutually incomparable centres, eleven dominated with margin >= 0.5 in every objective.
  static constexpr double kCentres[16][2] = {
      {0.0, 4.0},  {1.6, 3.6},  {2.7, 2.7}, {3.6, 1.6}, {4.0, 0.0},   {-0.5, 3.0}, {1.0, 2.8},  {2.0, 2.0},
      {3.0, 0.8},  {3.2, -0.6}, {0.5, 1.5}, {1.5, 0.5}, {0.0, 0.0},   {2.2, 1.0},  {1.0, -0.8}, {-0.8, 0.8},
  };
  constexpr Eigen::Index kPerGroup = 64;
  Matrix rows(16 * kPerGroup, 2);
  std::normal_distribution<double> normal(0.0, spread);
  for (Eigen::Index g = 0; g < 16; ++g) {
    for (Eigen::Index j = 0; j < kPerGroup; ++j) {
      rows(g * kPerGroup + j, 0) = kCentres[g][0] + normal(rng);
      rows(g * kPerGroup + j, 1) = kCentres[g][1] + normal(rng);
    }
  }
  return rows;
}

}  // namespace pfilin

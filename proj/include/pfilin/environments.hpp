#pragma once

#include <memory>
#include <vector>

#include "pfilin/common.hpp"
#include "pfilin/contexts.hpp"

namespace pfilin {

enum class NoiseFamily {
  kGaussian,
  /// Components uniform on [-sqrt(3), sqrt(3)] before scaling (unit variance, bounded).
  kUniform,
};

/// Linear reward model Y = Theta^T x + eta, eta with covariance sigma^2 * noise_corr.
struct RewardModel {
  Matrix theta;  // d x L
  double theta_max = 0.0;
  double sigma = 0.0;
  Matrix noise_corr;  // L x L
  NoiseFamily family = NoiseFamily::kGaussian;

  /// Validates the invariants. theta_max < 0 means "use max_l ||theta^(l)||_2";
  /// an empty `noise_corr` means identity.
  static RewardModel make(Matrix theta, double sigma, Matrix noise_corr = {}, double theta_max = -1.0,
                          NoiseFamily family = NoiseFamily::kGaussian);

  std::size_t num_objectives() const { return static_cast<std::size_t>(theta.cols()); }

  /// Factor S with S S^T = noise_corr (valid for singular correlations too).
  Matrix noise_factor() const;
};

/// A stochastic K-armed reward source with known mean table (for regret).
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t num_arms() const = 0;
  virtual std::size_t num_objectives() const = 0;
  /// K x L table of mean reward vectors.
  virtual const Matrix& means() const = 0;
  virtual Vector pull(ArmIndex k, Rng& rng) const = 0;
};

/// Theta^T x_k + eta.
Vector pull_linear(const RewardModel& model, const ContextSet& cs, ArmIndex k, Rng& rng);

class LinearEnvironment final : public Environment {
 public:
  LinearEnvironment(std::shared_ptr<const ContextSet> contexts, RewardModel model);

  std::size_t num_arms() const override { return contexts_->num_arms(); }
  std::size_t num_objectives() const override { return model_.num_objectives(); }
  const Matrix& means() const override { return means_; }
  Vector pull(ArmIndex k, Rng& rng) const override;

  const RewardModel& model() const { return model_; }
  const ContextSet& contexts() const { return *contexts_; }

 private:
  std::shared_ptr<const ContextSet> contexts_;
  RewardModel model_;
  Matrix factor_;
  Matrix means_;
};

struct MabInstance {
  std::shared_ptr<const ContextSet> contexts;
  RewardModel model;
};

/// X = I_K and Theta = means^T (means is K x L).
MabInstance make_mab(const Matrix& means, double sigma, Matrix noise_corr = {},
                     NoiseFamily family = NoiseFamily::kGaussian);

struct KMeansResult {
  std::vector<std::size_t> labels;  // cluster per point
  Matrix centers;                   // K x L
  double inertia = 0.0;             // within-cluster sum of squares
};

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` by inertia.
/// Restarts that end with an empty cluster are reseeded.
KMeansResult kmeans(const Matrix& points, std::size_t num_clusters, Rng& rng, std::size_t restarts = 100,
                    std::size_t max_iterations = 300);

/// Rewards of arm k are uniform draws from the member vectors of cluster k.
class ClusteredEnvironment final : public Environment {
 public:
  ClusteredEnvironment(std::vector<Matrix> clusters, Vector norm_mean, Vector norm_sd);

  std::size_t num_arms() const override { return clusters_.size(); }
  std::size_t num_objectives() const override { return static_cast<std::size_t>(means_.cols()); }
  const Matrix& means() const override { return means_; }
  Vector pull(ArmIndex k, Rng& rng) const override;

  /// Member vectors of cluster k (rows).
  const Matrix& cluster(ArmIndex k) const { return clusters_[k]; }
  std::vector<std::size_t> cluster_sizes() const;
  const Vector& normalization_mean() const { return norm_mean_; }
  const Vector& normalization_sd() const { return norm_sd_; }

  /// Largest within-cluster standard deviation over clusters and objectives;
  /// a practical noise scale for the confidence radii.
  double within_cluster_sd() const;

 private:
  std::vector<Matrix> clusters_;
  Matrix means_;
  Vector norm_mean_;
  Vector norm_sd_;
};

/// Standardizes each column of `rows` (N x L) to zero mean and unit population
/// standard deviation, clusters into K groups and builds the environment.
ClusteredEnvironment load_clustered(const Matrix& rows, std::size_t num_clusters, Rng& rng,
                                    std::size_t restarts = 100);

Vector pull_clustered(const ClusteredEnvironment& env, ArmIndex k, Rng& rng);

/// 1024 x 2 surrogate reward table: 16 well separated groups of 64 vectors
/// whose centres have a five-arm Pareto front.
Matrix generate_surrogate_rewards(Rng& rng, double spread = 0.15);

}  // namespace pfilin

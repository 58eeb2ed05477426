#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pfilin/common.hpp"
#include "pfilin/config.hpp"
#include "pfilin/contexts.hpp"
#include "pfilin/environments.hpp"
#include "pfilin/pfiwr.hpp"

namespace pfilin {

inline constexpr std::string_view kVersion = "0.1.0";

struct BuiltEnvironment {
  std::shared_ptr<const ContextSet> contexts;
  std::shared_ptr<const Environment> env;
  /// Noise scale and parameter bound handed to the confidence radii.
  double sigma = 0.0;
  double theta_max = 0.0;
  /// d x L true parameter; for clustered environments the cluster means transposed.
  Matrix theta;
  std::vector<std::size_t> cluster_sizes;
};

/// Builds the configured environment. Clustered data (and the surrogate table)
/// draw from the data stream of the base seed, so every replication sees the
/// same clusters.
BuiltEnvironment build_environment(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Estimator studies: uniform exploration for `warmup` rounds, then the
// exploit arm only.

enum class EstimatorKind { kRidge, kMixed, kDrMix, kDrRidge };

std::string_view to_string(EstimatorKind kind);

struct EstimatorStudy {
  std::vector<EstimatorKind> estimators;
  std::vector<std::size_t> checkpoints;
  ArmIndex exploit_arm = 0;
  /// Per estimator, replications x rounds: reward error on the exploit arm
  /// (l2 over objectives) and on all other arms jointly.
  std::vector<Matrix> exploited;
  std::vector<Matrix> unexploited;
  /// Per estimator and checkpoint n, replications x K: sqrt(n) x_k^T (theta_hat - theta), first objective.
  std::vector<std::vector<Matrix>> scaled;
};

EstimatorStudy run_estimator_study(const ExperimentConfig& config, const BuiltEnvironment& built,
                                   const std::vector<EstimatorKind>& estimators);

// ---------------------------------------------------------------------------
// Identification studies.

struct RunSummary {
  std::size_t replication = 0;
  std::size_t tau = 0;
  bool completed = false;
  bool success = false;
  double cumulative_regret = 0.0;
  ArmSet pareto_out;
};

/// Per-round mean and sample sd across replications; regret after a run
/// stops counts as 0. Length max_rounds.
struct CurveStats {
  Vector instant_mean;
  Vector instant_sd;
  Vector cumulative_mean;
  Vector cumulative_sd;
};

struct RoundLog {
  std::string algorithm;
  double epsilon = 0.0;
  std::size_t replication = 0;
  std::vector<RoundRecord> records;
};

struct PfiStudy {
  std::vector<std::string> algorithms;
  std::vector<double> epsilons;
  /// runs[a][e] in replication order.
  std::vector<std::vector<std::vector<RunSummary>>> runs;
  /// Per algorithm at the curve epsilon; empty when that epsilon is not run.
  std::vector<CurveStats> curves;
  std::vector<RoundLog> logs;
};

PfiStudy run_pfi_study(const ExperimentConfig& config, const BuiltEnvironment& built);

struct Aggregate {
  std::string algorithm;
  double epsilon = 0.0;
  std::size_t replications = 0;
  double tau_mean = 0.0;
  double tau_sd = 0.0;
  double tau_median = 0.0;
  double regret_mean = 0.0;
  double regret_sd = 0.0;
  double regret_median = 0.0;
  double success_rate = 0.0;
  double completed_rate = 0.0;
};

std::vector<Aggregate> aggregate(const PfiStudy& study);

double mean(const std::vector<double>& xs);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_sd(const std::vector<double>& xs);
double median(std::vector<double> xs);

// ---------------------------------------------------------------------------
// Output.

/// File name of the summary for one algorithm and epsilon.
std::string summary_file_name(const std::string& algorithm, double epsilon);

/// Runs the configured experiment and writes its CSVs and manifest.json into
/// config.output_dir. Returns the written file names (relative).
std::vector<std::string> run_experiment(const ExperimentConfig& config);

}  // namespace pfilin

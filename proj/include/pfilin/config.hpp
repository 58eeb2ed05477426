#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pfilin/common.hpp"

namespace pfilin {

/// Everything an experiment run needs. Keys in the config file are given next
/// to each field; sections become dotted prefixes.
struct ExperimentConfig {
  std::string experiment = "custom";  // experiment
  std::uint64_t seed = 1;             // seed
  std::size_t replications = 200;     // replications
  std::size_t workers = 1;            // workers
  std::string output_dir = "out";     // output

  // [environment]
  std::string env_kind = "mab";          // kind: linear | mab | clustered
  double sigma = 0.1;                    // sigma
  std::string theta = "1,-1,-1";         // theta: one d-vector per objective, ';'-separated, or a CSV path
  std::string contexts;                  // contexts: CSV path (linear only)
  std::string noise_corr;                // noise_corr: L x L, rows ';'-separated; empty = identity
  std::string noise = "gaussian";        // noise: gaussian | uniform
  std::string rewards = "surrogate";     // rewards: CSV path or "surrogate" (clustered)
  std::size_t clusters = 16;             // clusters
  std::size_t kmeans_restarts = 100;     // kmeans_restarts

  // [estimators] (estimator-consistency, density, dr-imputation)
  std::size_t rounds = 2000;                            // rounds
  std::size_t warmup = 50;                              // warmup: uniform exploration rounds
  ArmIndex exploit_arm = 0;                             // exploit_arm
  std::vector<std::size_t> checkpoints{50, 200, 500, 2000};  // checkpoints
  bool feed_unmatched = true;                           // feed_unmatched

  // [algorithm]
  std::vector<std::string> algorithms{"pfiwr", "multipfi"};  // names
  std::vector<double> epsilons{0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18};  // epsilon
  double delta = 0.1;                  // delta
  double gamma_constant = 1.0;         // gamma_constant
  std::size_t max_rounds = 100000;     // max_rounds
  double pfi_sigma = -1.0;             // sigma: negative = the environment's noise scale
  double theta_max = -1.0;             // theta_max: negative = largest column norm of the true parameter
  double radius_scale = 1.0;           // radius_scale (baseline)
  double curve_epsilon = 0.06;         // curve_epsilon
  std::size_t round_logs = 1;          // round_logs: replications whose round log is written

  /// Echo of every key as given (after overrides), for the manifest.
  std::map<std::string, std::string> echo() const;
};

/// Parses TOML/INI-style text. Throws Error(kConfigParse) on unknown keys or
/// malformed values.
ExperimentConfig parse_config(const std::string& text);
/// Throws Error(kMissingFile) when the file cannot be read.
ExperimentConfig load_config(const std::string& path);

/// Throws Error(kInvalidParameter) when a value is out of range.
void validate(const ExperimentConfig& config);

/// "1,2;3,4" -> rows. Throws kConfigParse.
std::vector<std::vector<double>> parse_rows(const std::string& text);

}  // namespace pfilin

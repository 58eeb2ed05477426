#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pfilin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Arms are 0-based throughout the library and in every emitted file.
using ArmIndex = std::size_t;

/// Sorted, duplicate-free list of arms.
using ArmSet = std::vector<ArmIndex>;

using Rng = std::mt19937_64;

enum class ErrorCode {
  kRankDeficient,
  kNormViolation,
  kZeroBasis,
  kDegenerateColumn,
  kLengthMismatch,
  kNoExplorationSample,
  kNotMab,
  kInvalidArgument,
  kConfigParse,
  kMissingFile,
  kInvalidParameter,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Named random substreams. Every random decision in a run draws from exactly
/// one of these, so components can be replayed independently.
enum class Stream : std::uint64_t {
  kEnvironment = 1,
  kAlgorithm = 2,
  kWeights = 3,
  kResampling = 4,
  kData = 5,
};

/// Engine for substream `stream` of replication `replication` under `base_seed`.
Rng make_stream(std::uint64_t base_seed, std::uint64_t replication, Stream stream);

struct RngStreams {
  Rng environment;
  Rng algorithm;
  Rng weights;
  Rng resampling;

  static RngStreams for_replication(std::uint64_t base_seed, std::uint64_t replication);
};

bool contains(const ArmSet& set, ArmIndex arm);

}  // namespace pfilin

#include "pfilin/common.hpp"

#include <algorithm>

namespace pfilin {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kNormViolation: return "NormViolation";
    case ErrorCode::kZeroBasis: return "ZeroBasis";
    case ErrorCode::kDegenerateColumn: return "DegenerateColumn";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNoExplorationSample: return "NoExplorationSample";
    case ErrorCode::kNotMab: return "NotMab";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigParse: return "ConfigParse";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kInvalidParameter: return "InvalidParameter";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

Rng make_stream(std::uint64_t base_seed, std::uint64_t replication, Stream stream) {
  const auto tag = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(replication >> 32),
                    static_cast<std::uint32_t>(tag)};
  return Rng(seq);
}

RngStreams RngStreams::for_replication(std::uint64_t base_seed, std::uint64_t replication) {
  return RngStreams{make_stream(base_seed, replication, Stream::kEnvironment),
                    make_stream(base_seed, replication, Stream::kAlgorithm),
                    make_stream(base_seed, replication, Stream::kWeights),
                    make_stream(base_seed, replication, Stream::kResampling)};
}

bool contains(const ArmSet& set, ArmIndex arm) {
  return std::binary_search(set.begin(), set.end(), arm);
}

}  // namespace pfilin

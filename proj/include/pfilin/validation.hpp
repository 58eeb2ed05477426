#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfilin/common.hpp"

namespace pfilin {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Structural invariants on the context fixtures found in `fixtures_dir`
/// (files named contexts_*.csv, dimension taken from the column count) plus
/// `random_fixtures` random context matrices:
///  - decomposition identities of the context set,
///  - the normalized norm bound x^T (sum x x^T + eps I)^{-1} x <= 1,
///  - design norms below t^{-1/2} and nonincreasing in t,
///  - exploration ledger invariants after every round of adaptive runs,
///  - recursive and batch estimator states agree within 1e-8,
///  - undetermined/accepted set invariants of the elimination loop.
std::vector<CheckResult> run_structural_checks(const std::string& fixtures_dir, std::uint64_t seed,
                                               std::size_t random_fixtures = 20);

/// Random d x K context matrix with column norms in [0.3, 1].
Matrix random_contexts(std::size_t d, std::size_t K, Rng& rng);

}  // namespace pfilin

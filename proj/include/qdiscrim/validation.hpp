#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdiscrim/montecarlo.hpp"

namespace qdiscrim {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runtime invariant checks: state guards, superoperator identities, Bloch
/// round-trips, posterior normalization and shift invariance, determinism and
/// parallel/sequential bit-equality. `cfg` supplies the model pair.
std::vector<CheckResult> run_invariant_suite(const ExperimentConfig& cfg);

}  // namespace qdiscrim

#pragma once

#include <cstdint>
#include <vector>

#include "veram/confidence.hpp"
#include "veram/dataset.hpp"
#include "veram/viewspace.hpp"

namespace veram {

struct OracleConfig {
  int steps = 2;                 // T
  long budget = 1'000'000;       // max sequences = (rows*cols)^T
  int threads = 1;
  ReadoutTrainConfig readout{};  // trained once per candidate sequence
};

struct OracleResult {
  std::vector<GridIndex> sequence;  // lexicographically smallest maximizer
  double test_accuracy = 0;
  double train_accuracy = 0;
  long sequences_evaluated = 0;
};

/// Exhaustive search over fixed (open-loop) view sequences: every
/// cells^T sequence gets a freshly trained affine+LogSoftMax readout on
/// the concatenated selected-view features of the training split, and the
/// test-accuracy maximizer wins. Throws UsageError when the enumeration
/// exceeds the budget or T < 1.
OracleResult best_fixed_sequence(const Dataset& train, const Dataset& test, const OracleConfig& cfg);

/// Oracle accuracy minus the trained agent's test accuracy.
double policy_gap(double oracle_accuracy, double agent_accuracy);

}  // namespace veram

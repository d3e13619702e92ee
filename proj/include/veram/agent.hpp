#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "veram/dataset.hpp"
#include "veram/tape.hpp"
#include "veram/tensor.hpp"
#include "veram/viewspace.hpp"

namespace veram {

enum class Recurrent { kLinear, kLstm };

struct ModelConfig {
  int feature_dim = 0;
  int classes = 0;
  int grid_rows = 12;
  int grid_cols = 12;
  int loc_embed_dim = 16;
  int hidden_dim = 48;
  int adapter_dim = 0;  // 0 = raw features go straight into the fusion layer
  Recurrent recurrent = Recurrent::kLinear;
  int steps = 4;  // T
  double elu_alpha = 1.0;

  GridShape grid() const { return {grid_rows, grid_cols}; }
  int fused_input_dim() const { return loc_embed_dim + (adapter_dim > 0 ? adapter_dim : feature_dim); }
};

/// Indices into AgentParams::tensors; -1 when the slot is absent for the
/// configured recurrent variant.
struct ParamLayout {
  int w_le = -1, b_le = -1;      // location embedding
  int w_v = -1, b_v = -1;        // optional feature adapter
  int w_lv = -1, b_lv = -1;      // fusion
  int w_h = -1;                  // linear recurrence
  int w_x = -1, w_hh = -1, b_g = -1;  // lstm gates (i,f,g,o stacked)
  int w_l = -1, b_l = -1;        // view estimation
  int w_c = -1, b_c = -1;        // classification
};

struct AgentParams {
  ModelConfig cfg;
  ParamLayout layout;
  std::vector<Tensor> tensors;
  std::vector<double> baselines;  // one reward baseline per time step

  /// Seedable uniform +-1/sqrt(fan-in) init; the view-estimation bias
  /// starts at the grid center so the first view is interior.
  static AgentParams init(const ModelConfig& cfg, std::uint64_t seed);

  std::uint64_t checksum() const;
};

enum class RolloutMode { kTrain, kTest, kReplay };

struct StepRecord {
  Location estimate;   // u_t (pre-sample mean, possibly outside the box)
  Location viewpoint;  // l_t (clamped sample, or clamped u_t at test time)
  GridIndex cell;
  double confidence = 1.0;  // c_t of the visited view
  std::vector<double> observation;
  std::vector<double> hidden;
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  std::vector<double> log_probs;
  int predicted = -1;
  int label = -1;
  double reward = 0.0;  // 1 iff predicted == label after T steps
};

/// Trace plus the recorded graph, kept alive so training can seed
/// gradients at the u_t and log-prob nodes.
struct Rollout {
  EpisodeTrace trace;
  std::unique_ptr<Tape> tape;
  std::vector<NodeId> u_nodes;
  NodeId log_probs_node = -1;
};

struct RolloutOptions {
  double delta = 0.11;  // train-mode sampling spread
  Rng* rng = nullptr;   // required in train mode
  const std::vector<Location>* fixed_viewpoints = nullptr;  // required in replay mode
};

/// Runs one episode. kTrain samples viewpoints around u_t; kTest uses
/// clamp(u_t) directly; kReplay revisits `fixed_viewpoints` (for
/// finite-difference checks with the sampling frozen).
Rollout rollout(const Dataset& ds, const FeatureGrid& shape, const AgentParams& params, RolloutMode mode,
                const RolloutOptions& opts = {});

/// Checkpoint = params (+ optional trainer state) in a little-endian
/// "VAP1" container.
struct TrainerState {
  std::vector<Tensor> velocity;
  int completed_epochs = 0;
};

void write_params(const std::string& path, const AgentParams& params, const TrainerState* state = nullptr);
AgentParams read_params(const std::string& path, TrainerState* state = nullptr);

}  // namespace veram

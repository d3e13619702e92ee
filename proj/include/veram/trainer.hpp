#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "veram/learning.hpp"
#include "veram/optim.hpp"

namespace veram {

struct TrainConfig {
  SchemeConfig scheme{};
  int epochs = 300;
  int batch = 32;
  std::uint64_t seed = 1;
  int threads = 1;
  LrSchedule lr{};
  double momentum = 0.9;
  int eval_every = 0;        // 0 = only at the end
  int checkpoint_every = 0;  // 0 = never
  std::string checkpoint_prefix;
};

struct EpochMetrics {
  int epoch = 0;
  double lr = 0;
  double nll = 0;
  double location = 0;
  double train_acc = 0;
  std::optional<double> eval_instance;
  std::optional<double> eval_class;
};

struct RunResult {
  AgentParams params;
  SgdState sgd;
  std::vector<EpochMetrics> metrics;
  EvalReport final_eval;       // valid when an eval set was given
  bool has_final_eval = false;
  double wall_seconds = 0;
};

/// Full training run: per-epoch shuffle, minibatch train_steps, optional
/// periodic eval and checkpoints. Starting from a checkpointed state
/// reproduces the uninterrupted run exactly (per-episode random streams
/// depend only on seed, epoch and shape index).
RunResult train_agent(const Dataset& train, const Dataset* eval_set, const ModelConfig& model,
                      const TrainConfig& cfg,
                      const std::function<void(const EpochMetrics&)>& on_epoch = nullptr,
                      AgentParams* resume_params = nullptr, const TrainerState* resume_state = nullptr);

/// JSON run manifest; a run with the same manifest reproduces the metric
/// stream and final parameter checksum bit-exactly in single-thread mode.
std::string run_manifest_json(const Dataset& train, const ModelConfig& model, const TrainConfig& cfg,
                              const RunResult& result, const std::string& command);

}  // namespace veram

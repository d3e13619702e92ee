#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "veram/agent.hpp"
#include "veram/dataset.hpp"
#include "veram/optim.hpp"

namespace veram {

/// Cumulative ablation ladder: each variant keeps everything below it.
///   kClassical  — REINFORCE with baseline only
///   kBoundary   — + boundary sign rule
///   kConf       — + confidence-weighted policy gradient
///   kLoc        — + pairwise view-separation loss (the full model)
enum class Variant { kClassical, kBoundary, kConf, kLoc };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct SchemeConfig {
  Variant variant = Variant::kLoc;
  double delta = 0.11;
  double lambda_loc = 1.0;
  double baseline_rate = 0.05;  // EMA rate for the per-step reward baseline
  bool toroidal_distance = false;

  bool sign_rule() const { return variant != Variant::kClassical; }
  bool confidence_weighting() const { return variant == Variant::kConf || variant == Variant::kLoc; }
  bool location_loss_active() const { return variant == Variant::kLoc; }
};

/// -log_probs[label].
double nll_loss(const std::vector<double>& log_probs, int label);

/// Ascent gradient dR/du_t for one step, per coordinate:
///   sign * (R - b) * (l - u)/delta^2 * w
/// where w is c (correct) or 1-c (misclassified) when confidence weighting
/// is on, and sign comes from the boundary rule when enabled.
struct ReinforceGrad {
  double r = 0;
  double c = 0;
};
ReinforceGrad reinforce_grad(Location u, Location l, double reward, double baseline, double confidence,
                             bool correct, const SchemeConfig& scheme, GridShape grid = {});

/// Hinge view-separation loss: sum over pairs i<j of
/// max(0, 1/12 - PairDistance(l_i, l_j)), with subgradient 0 at the corner.
/// The margin is the grid's coordinate unit (1/rows).
struct LocationLoss {
  double value = 0;
  std::vector<ReinforceGrad> grads;  // d(loss)/d(l_i), one per location
};
LocationLoss location_loss(const std::vector<Location>& locations, bool toroidal = false, GridShape grid = {});

/// EMA baseline update: b' = (1-rate)*b + rate*R.
double baseline_update(double baseline, double reward, double rate);

struct LossReport {
  double nll = 0;                           // batch mean
  double location = 0;                      // batch mean of the hinge loss
  double accuracy = 0;                      // batch accuracy
  int examples = 0;
  std::vector<double> reinforce_norm;       // per-step mean |dR/du_t|
  bool finite() const;
};

struct TrainStepContext {
  std::uint64_t seed = 1;
  int epoch = 1;        // 1-based
  double lr = 1e-3;
  int threads = 1;
};

/// One optimizer step on a minibatch: train-mode rollouts, NLL gradients
/// through the deterministic path, REINFORCE and view-separation gradients
/// injected at the u_t nodes, everything scaled by 1/batch, then a single
/// SGD update and the baseline EMA. Rollouts run in parallel when
/// threads > 1; gradients reduce in batch order so results are identical
/// for any thread count.
LossReport train_step(const Dataset& ds, const std::vector<int>& batch_indices, AgentParams& params,
                      SgdState& sgd, const SchemeConfig& scheme, const TrainStepContext& ctx);

struct EvalReport {
  double instance_acc = 0;
  double class_acc = 0;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  std::vector<double> per_class_acc;
  std::vector<int> per_class_count;
  bool empty_class_warning = false;         // some declared class had no shapes
  double border_fraction = 0;               // visited views landing on border cells
  long total = 0;
  long correct = 0;
};

/// Test-mode rollouts over the whole dataset (deterministic, read-only on
/// params; parallel across shapes when threads > 1).
EvalReport evaluate(const Dataset& ds, const AgentParams& params, int threads = 1);

}  // namespace veram

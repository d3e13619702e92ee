#include "veram/optim.hpp"

#include <string>

#include "veram/errors.hpp"

namespace veram {

SgdState SgdState::for_params(const std::vector<Tensor>& params, double momentum) {
  SgdState s;
  s.momentum = momentum;
  s.velocity.reserve(params.size());
  for (const Tensor& p : params) s.velocity.push_back(Tensor::zeros(p.shape));
  return s;
}

void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, SgdState& state, double lr) {
  if (lr <= 0) throw UsageError("sgd_step: learning rate must be positive, got " + std::to_string(lr));
  if (params.size() != grads.size() || params.size() != state.velocity.size())
    throw DimensionError("sgd_step: params/grads/velocity count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i], grads[i], "sgd_step");
    Tensor& v = state.velocity[i];
    Tensor& p = params[i];
    for (int k = 0; k < p.size(); ++k) {
      v[k] = state.momentum * v[k] - lr * grads[i][k];
      p[k] += v[k];
    }
  }
}

double lr_schedule(int epoch, const LrSchedule& cfg) {
  if (epoch < 1) throw UsageError("lr_schedule: epoch must be >= 1");
  if (epoch <= cfg.hold_until_epoch) return cfg.initial;
  if (epoch >= cfg.floor_epoch) return cfg.minimum;
  double span = static_cast<double>(cfg.floor_epoch - cfg.hold_until_epoch);
  double frac = static_cast<double>(epoch - cfg.hold_until_epoch) / span;
  return cfg.initial + frac * (cfg.minimum - cfg.initial);
}

}  // namespace veram

#pragma once

#include <vector>

#include "veram/tensor.hpp"

namespace veram {

/// SGD with momentum: v <- mu*v - lr*g; p <- p + v.
struct SgdState {
  double momentum = 0.9;
  std::vector<Tensor> velocity;  // one buffer per parameter, same shapes
  int step_count = 0;            // completed epochs

  static SgdState for_params(const std::vector<Tensor>& params, double momentum = 0.9);
};

void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, SgdState& state, double lr);

struct LrSchedule {
  double initial = 1e-3;
  double minimum = 1e-5;
  int hold_until_epoch = 600;  // constant through this epoch
  int floor_epoch = 1200;      // linear decay lands on `minimum` here
};

/// epoch is 1-based.
double lr_schedule(int epoch, const LrSchedule& cfg = {});

}  // namespace veram

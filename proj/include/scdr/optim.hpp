#pragma once

#include <span>

#include "scdr/tensor.hpp"

namespace scdr {

/// Learning-rate plan: linear ramp to base_lr over the first warmup_epochs,
/// then stepwise decay by decay_ratio every decay_every epochs.
struct LrSchedule {
  float base_lr = 0.01f;
  int warmup_epochs = 10;
  int decay_every = 25;
  float decay_ratio = 0.5f;

  float lr(int epoch) const;
};

/// p <- p - lr(epoch) * grad(p), then grads are cleared.
void sgd_step(std::span<Tensor> params, int epoch, const LrSchedule& schedule);

}  // namespace scdr

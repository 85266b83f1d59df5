#include "scdr/optim.hpp"

#include <cmath>
#include <string>

#include "scdr/errors.hpp"

namespace scdr {

float LrSchedule::lr(int epoch) const {
  if (epoch < 0) throw IndexError("lr: epoch must be >= 0");
  if (epoch < warmup_epochs)
    return base_lr * static_cast<float>(epoch + 1) / static_cast<float>(warmup_epochs);
  const int decays = decay_every > 0 ? (epoch - warmup_epochs) / decay_every : 0;
  return base_lr * std::pow(decay_ratio, static_cast<float>(decays));
}

void sgd_step(std::span<Tensor> params, int epoch, const LrSchedule& schedule) {
  const float lr = schedule.lr(epoch);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad())
      throw StateError("sgd_step: parameter " + std::to_string(i) +
                       " has no gradient; run backward first");
  }
  for (Tensor& p : params) {
    auto v = p.value();
    auto g = p.grad();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    p.clear_grad();
  }
}

}  // namespace scdr

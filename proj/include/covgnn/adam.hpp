#pragma once

#include <vector>

#include "covgnn/tensor.hpp"

namespace covgnn {

struct AdamConfig {
    double learning_rate{0.001};
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};
    double decay_factor{0.95};
    int decay_interval{200};  // batches between decays
};

// First/second moment buffers per parameter tensor, plus the step-wise
// learning-rate schedule lr * decay^floor(completed / interval).
class AdamState {
  public:
    AdamState(AdamConfig config, const std::vector<Tensor*>& params);

    // Rate the next call to step() will apply.
    double effective_lr() const;

    int steps_taken() const { return steps_; }
    const AdamConfig& config() const { return config_; }

    // One update; params and grads must match the construction layout.
    void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

  private:
    AdamConfig config_;
    int steps_{0};
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace covgnn

#pragma once

#include "hrcloud/params.hpp"

namespace hrcloud {

struct OptimizerConfig {
    double learning_rate = 5e-5;
    double weight_decay = 0.0005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool decoupled_weight_decay = true;  // false applies decay as an L2 gradient term

    void validate() const;
};

// ADAM with bias correction; weight decay is decoupled by default and applies
// uniformly to every trainable tensor.
class AdamOptimizer {
public:
    AdamOptimizer(ParameterStore& store, const OptimizerConfig& cfg);

    // Consumes the gradients accumulated in the store and zeroes them.
    void step();

    int64_t step_count() const { return t_; }
    const OptimizerConfig& config() const { return cfg_; }

    // Moment access for checkpointing, aligned with trainable registration
    // order.
    std::vector<Tensor>& first_moments() { return m_; }
    std::vector<Tensor>& second_moments() { return v_; }
    void set_step_count(int64_t t) { t_ = t; }

private:
    ParameterStore& store_;
    OptimizerConfig cfg_;
    std::vector<Tensor> m_, v_;
    int64_t t_ = 0;
};

}  // namespace hrcloud

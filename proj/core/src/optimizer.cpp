#include "hrcloud/optimizer.hpp"

#include <cmath>

#include "hrcloud/error.hpp"

namespace hrcloud {

void OptimizerConfig::validate() const {
    if (learning_rate <= 0) throw ConfigError("optimizer.learning_rate must be positive");
    if (weight_decay < 0) throw ConfigError("optimizer.weight_decay must be >= 0");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
        throw ConfigError("optimizer moment coefficients must lie in [0,1)");
    if (epsilon <= 0) throw ConfigError("optimizer.epsilon must be positive");
}

AdamOptimizer::AdamOptimizer(ParameterStore& store, const OptimizerConfig& cfg)
    : store_(store), cfg_(cfg) {
    cfg.validate();
    for (auto* e : store.trainable_entries()) {
        m_.emplace_back(e->node->value.shape());
        v_.emplace_back(e->node->value.shape());
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    size_t idx = 0;
    for (auto* e : store_.trainable_entries()) {
        Tensor& w = e->node->value;
        Tensor& m = m_[idx];
        Tensor& v = v_[idx];
        ++idx;
        const bool has_grad = !e->node->grad.empty();
        const int64_t n = w.numel();
        for (int64_t i = 0; i < n; ++i) {
            double g = has_grad ? e->node->grad[i] : 0.0;
            if (!cfg_.decoupled_weight_decay) g += cfg_.weight_decay * w[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            double upd = cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            if (cfg_.decoupled_weight_decay) upd += cfg_.learning_rate * cfg_.weight_decay * w[i];
            w[i] -= upd;
        }
    }
    store_.zero_grad();
}

}  // namespace hrcloud

#include "hrcloud/loss.hpp"

#include <cmath>

namespace hrcloud {

ConfidenceMask confidence_mask(const Tensor& teacher_probs, double tau) {
    if (tau < 0.0 || tau > 1.0)
        throw ConfigError("confidence threshold tau must lie in [0,1], got " + std::to_string(tau));
    ConfidenceMask m;
    m.tau = tau;
    m.values = Tensor(teacher_probs.shape());
    const int64_t n = teacher_probs.numel();
    int64_t passed = 0;
    for (int64_t i = 0; i < n; ++i) {
        const bool hit = teacher_probs[i] > tau;  // strict inequality
        m.values[i] = hit ? 1.0 : 0.0;
        passed += hit;
    }
    m.passed_fraction = n > 0 ? double(passed) / double(n) : 0.0;
    return m;
}

Var cross_entropy_loss(const Var& y, const Tensor& target, const CeOptions& opt) {
    return cross_entropy_from_probs(y, target, opt);
}

Var augmented_view_loss(const Var& y_aug, const Tensor& target, const ConfidenceMask& mask,
                        const CeOptions& opt) {
    return masked_cross_entropy_from_probs(y_aug, target, mask.values, opt);
}

LossOutput total_loss(const Var& y, const Var& y_aug, const Tensor& target, const LossWeights& w) {
    Var lce = cross_entropy_loss(y, target, w.ce);
    ConfidenceMask mask = confidence_mask(y->value, w.tau);

    LossOutput out;
    out.breakdown.l_ce = lce->value[0];
    out.breakdown.masked_fraction = mask.passed_fraction;
    if (y_aug) {
        Var laug = augmented_view_loss(y_aug, target, mask, w.ce);
        out.breakdown.l_ce_aug = laug->value[0];
        out.total = scalar_affine(lce, laug, w.lambda1, w.lambda2);
    } else {
        out.breakdown.l_ce_aug = 0.0;
        out.total = scalar_affine(lce, lce, w.lambda1, 0.0);
    }
    out.breakdown.total = out.total->value[0];
    return out;
}

}  // namespace hrcloud

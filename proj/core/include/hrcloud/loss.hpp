#pragma once

#include "hrcloud/ops.hpp"

namespace hrcloud {

// Per-entry indicator 1(y > tau); constant with respect to the parameters,
// so no gradient flows through it.
struct ConfidenceMask {
    Tensor values;  // same shape as the probability map, entries in {0,1}
    double tau = 0.8;
    double passed_fraction = 0.0;  // fraction of pixel-class entries above tau
};

struct LossWeights {
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double tau = 0.8;
    CeOptions ce;
};

struct LossBreakdown {
    double l_ce = 0.0;
    double l_ce_aug = 0.0;
    double total = 0.0;
    double masked_fraction = 0.0;
};

struct LossOutput {
    Var total;  // scalar graph node for backward()
    LossBreakdown breakdown;
};

ConfidenceMask confidence_mask(const Tensor& teacher_probs, double tau);

// Teacher-view loss: -sum t log y with the configured reduction.
Var cross_entropy_loss(const Var& y, const Tensor& target, const CeOptions& opt);

// Student-view loss gated by the teacher's confidence mask; shares the
// teacher loss's reduction denominator.
Var augmented_view_loss(const Var& y_aug, const Tensor& target, const ConfidenceMask& mask,
                        const CeOptions& opt);

// total = lambda1 * L_ce + lambda2 * L_ce_aug; the mask is built from the
// teacher probabilities. Pass y_aug == nullptr to drop the student term (the
// augmented-view-loss ablation).
LossOutput total_loss(const Var& y, const Var& y_aug, const Tensor& target, const LossWeights& w);

}  // namespace hrcloud

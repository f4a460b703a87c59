#pragma once

#include "hrcloud/image.hpp"

namespace hrcloud {

struct ConfusionCounts {
    int64_t tp = 0;
    int64_t tn = 0;
    int64_t fp = 0;
    int64_t fn = 0;
};

ConfusionCounts confusion_counts(const Image& prediction, const Image& label);

// Four-color overlay of a binary prediction against a binary label:
// TP white, TN black, FP red, FN blue.
Image render_overlay(const Image& prediction, const Image& label);

}  // namespace hrcloud

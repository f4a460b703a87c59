#pragma once

// Independent direct-translation oracles for the evaluation measures and the
// loss terms. These deliberately use naive algorithms (brute-force nearest
// foreground search, windowed double loops, literal per-definition passes) so
// they share no code path with the library implementations they check.

#include "hrcloud/image.hpp"
#include "hrcloud/metrics.hpp"
#include "hrcloud/tensor.hpp"

namespace hrcloud::oracle {

double mae(const Image& y, const Image& t);
double weighted_fbeta(const Image& y, const Image& t, const MetricConfig& cfg);
double structure_measure(const Image& y, const Image& t, const MetricConfig& cfg);

// -sum over entries of mask * t * log(max(y, clamp)), divided by pixel count
// when mean is set. Pass mask = nullptr for the plain teacher loss.
double cross_entropy(const Tensor& y, const Tensor& t, const Tensor* mask, double clamp, bool mean);

}  // namespace hrcloud::oracle

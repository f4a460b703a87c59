#pragma once

#include <vector>

#include "hrcloud/autograd.hpp"

namespace hrcloud {

// Batch-norm behavior for one forward pass.
struct BnMode {
    bool training = true;
    bool update_running = true;  // ignored in eval mode
    double momentum = 0.1;
    double epsilon = 1e-5;
};

// 2-d convolution on NCHW input. weight: (Cout, Cin, k, k); bias optional
// (pass nullptr). Square kernel/stride/padding cover every layer in the
// model (k in {1,3}, stride in {1,2}).
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int padding);

// Per-channel batch normalization. running_mean/running_var are plain state
// tensors mutated in training mode when mode.update_running is set; no
// gradient flows through them.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta, Var& running_mean, Var& running_var,
               const BnMode& mode);

Var relu(const Var& x);
Var add(const Var& a, const Var& b);
Var sum_all(const std::vector<Var>& xs);  // n-ary elementwise sum, equal shapes
Var concat_channels(const std::vector<Var>& xs);

// Bilinear resize to (out_h, out_w), half-pixel centers, corners not aligned.
Var bilinear_resize(const Var& x, int out_h, int out_w);

// Adaptive average pooling to (bins_h, bins_w).
Var adaptive_avg_pool(const Var& x, int bins_h, int bins_w);

// Softmax over the channel dimension of an NCHW tensor.
Var softmax_channels(const Var& x);

// total = ca * a + cb * b on scalars; the loss combiner.
Var scalar_affine(const Var& a, const Var& b, double ca, double cb);

struct CeOptions {
    double log_clamp = 1e-12;
    bool mean_reduction = true;  // divide by N*H*W; false = raw sum
};

// -sum t * log(max(y, clamp)) over all pixel/class entries, y a probability
// map (post-softmax), t a one-hot constant of the same shape.
Var cross_entropy_from_probs(const Var& y, const Tensor& target, const CeOptions& opt);

// Same, gated per entry by a constant binary mask.
Var masked_cross_entropy_from_probs(const Var& y, const Tensor& target, const Tensor& mask,
                                    const CeOptions& opt);

}  // namespace hrcloud

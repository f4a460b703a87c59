#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "hrcloud/autograd.hpp"
#include "hrcloud/params.hpp"
#include "hrcloud/rng.hpp"
#include "hrcloud/tiling.hpp"

namespace hrcloud::testutil {

inline Tensor random_tensor(std::vector<int> shape, RngStream& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline Image random_map(int h, int w, RngStream& rng) {
    Image img(h, w, 1);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

inline Image random_binary_map(int h, int w, RngStream& rng, double p_fg = 0.4) {
    Image img(h, w, 1);
    for (auto& v : img.data) v = rng.uniform() < p_fg ? 1.0f : 0.0f;
    return img;
}

// Synthetic cloud scene: bright soft-edged disks (clouds) over a dark noisy
// background; the label marks the disks.
inline SceneImage make_synthetic_scene(int h, int w, uint64_t seed, LabelMask* label_out,
                                       const std::string& scene_id = "synthetic") {
    RngStream rng(seed);
    Image px(h, w, 3);
    Image lb(h, w, 1);
    const int blob_count = 2 + static_cast<int>(rng.next_index(3));
    std::vector<double> cy(static_cast<size_t>(blob_count)), cx(static_cast<size_t>(blob_count)),
        cr(static_cast<size_t>(blob_count));
    for (int b = 0; b < blob_count; ++b) {
        cy[static_cast<size_t>(b)] = rng.uniform(0.2 * h, 0.8 * h);
        cx[static_cast<size_t>(b)] = rng.uniform(0.2 * w, 0.8 * w);
        cr[static_cast<size_t>(b)] = rng.uniform(0.12, 0.22) * std::min(h, w);
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool cloud = false;
            for (int b = 0; b < blob_count; ++b) {
                const double dy = y - cy[static_cast<size_t>(b)];
                const double dx = x - cx[static_cast<size_t>(b)];
                if (dy * dy + dx * dx <= cr[static_cast<size_t>(b)] * cr[static_cast<size_t>(b)]) {
                    cloud = true;
                    break;
                }
            }
            const float noise = static_cast<float>(rng.uniform(-0.04, 0.04));
            const float base = cloud ? 0.88f : 0.12f;
            for (int c = 0; c < 3; ++c) {
                float v = base + noise + 0.02f * static_cast<float>(c);
                px.at(y, x, c) = std::min(1.0f, std::max(0.0f, v));
            }
            lb.at(y, x) = cloud ? 1.0f : 0.0f;
        }
    SceneImage scene;
    scene.pixels = std::move(px);
    scene.scene_id = scene_id;
    scene.source_path = "<synthetic>";
    if (label_out) {
        label_out->labels = std::move(lb);
        label_out->scene_id = scene_id;
    }
    return scene;
}

// Central finite differences of a scalar-valued function against the
// analytic gradients already stored in the leaves. Returns the maximum
// relative error over all checked elements.
struct GradCheckResult {
    double max_rel_err = 0.0;
    int64_t checked = 0;
};

inline double rel_err(double a, double n) {
    const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
    return std::abs(a - n) / denom;
}

// leaves: parameter nodes whose .grad holds the analytic gradient.
// loss_fn: re-evaluates the scalar loss from current leaf values (no grad).
inline GradCheckResult finite_difference_check(const std::vector<Var>& leaves,
                                               const std::function<double()>& loss_fn,
                                               double h = 1e-6) {
    GradCheckResult res;
    NoGradGuard guard;
    for (const auto& leaf : leaves) {
        for (int64_t i = 0; i < leaf->value.numel(); ++i) {
            const double saved = leaf->value[i];
            leaf->value[i] = saved + h;
            const double up = loss_fn();
            leaf->value[i] = saved - h;
            const double dn = loss_fn();
            leaf->value[i] = saved;
            const double numeric = (up - dn) / (2.0 * h);
            const double analytic = leaf->grad.empty() ? 0.0 : leaf->grad[i];
            res.max_rel_err = std::max(res.max_rel_err, rel_err(analytic, numeric));
            ++res.checked;
        }
    }
    return res;
}

}  // namespace hrcloud::testutil

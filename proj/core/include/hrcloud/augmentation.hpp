#pragma once

#include "hrcloud/image.hpp"
#include "hrcloud/rng.hpp"

namespace hrcloud {

// Photometric-only recipe: geometry never changes, so label masks stay
// aligned to both views.
struct AugmentationConfig {
    double p_color_jitter = 0.8;
    double p_grayscale = 0.2;
    double p_blur = 0.5;
    double brightness_lo = 0.6, brightness_hi = 1.4;
    double contrast_lo = 0.6, contrast_hi = 1.4;
    double saturation_lo = 0.6, saturation_hi = 1.4;
    double hue_lo = -0.1, hue_hi = 0.1;
    double blur_sigma_lo = 0.1, blur_sigma_hi = 2.0;

    void validate() const;
};

// Everything needed to replay one augmentation draw exactly.
struct AugmentationTrace {
    bool jitter_fired = false;
    double brightness = 1.0;
    double contrast = 1.0;
    double saturation = 1.0;
    double hue_shift = 0.0;
    bool grayscale_fired = false;
    bool blur_fired = false;
    double blur_sigma = 0.0;
};

// Samples a trace and applies it. Draw order is fixed (jitter gate, jitter
// strengths if fired, grayscale gate, blur gate, sigma if fired) so a given
// (input, config, stream state) triple is fully deterministic.
Image augment(const Image& input, const AugmentationConfig& cfg, RngStream& rng,
              AugmentationTrace* trace_out = nullptr);

// Replays a recorded trace; bit-identical to the original application.
Image apply_trace(const Image& input, const AugmentationTrace& trace);

// (teacher, student) pair: the first view is the untouched input.
std::pair<Image, Image> make_view_pair(const Image& input, const AugmentationConfig& cfg,
                                       RngStream& rng, AugmentationTrace* trace_out = nullptr);

}  // namespace hrcloud

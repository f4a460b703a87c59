#include "hrcloud/augmentation.hpp"

#include <algorithm>
#include <cmath>

#include "hrcloud/tiling.hpp"

namespace hrcloud {

namespace {

float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

void apply_brightness(Image& img, float f) {
    for (auto& v : img.data) v = clamp01(v * f);
}

void apply_contrast(Image& img, float f) {
    // blend toward the mean luma of the whole image
    double sum = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            sum += luma(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
    const float mean = static_cast<float>(sum / double(img.pixel_count()));
    for (auto& v : img.data) v = clamp01(f * v + (1.0f - f) * mean);
}

void apply_saturation(Image& img, float f) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const float g = luma(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = clamp01(f * img.at(y, x, c) + (1.0f - f) * g);
        }
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
    const float mx = std::max({r, g, b});
    const float mn = std::min({r, g, b});
    const float d = mx - mn;
    v = mx;
    s = mx > 0 ? d / mx : 0.0f;
    if (d <= 0) {
        h = 0;
        return;
    }
    if (mx == r)
        h = (g - b) / d;
    else if (mx == g)
        h = 2.0f + (b - r) / d;
    else
        h = 4.0f + (r - g) / d;
    h /= 6.0f;
    if (h < 0) h += 1.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
    if (s <= 0) {
        r = g = b = v;
        return;
    }
    h = h - std::floor(h);
    const float hh = h * 6.0f;
    const int sector = std::min(static_cast<int>(hh), 5);
    const float f = hh - sector;
    const float p = v * (1.0f - s);
    const float q = v * (1.0f - s * f);
    const float t = v * (1.0f - s * (1.0f - f));
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

void apply_hue(Image& img, float shift) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float h, s, v;
            rgb_to_hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), h, s, v);
            float r, g, b;
            hsv_to_rgb(h + shift, s, v, r, g, b);
            img.at(y, x, 0) = clamp01(r);
            img.at(y, x, 1) = clamp01(g);
            img.at(y, x, 2) = clamp01(b);
        }
}

void apply_grayscale(Image& img) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const float g = luma(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
            img.at(y, x, 0) = img.at(y, x, 1) = img.at(y, x, 2) = g;
        }
}

void apply_blur(Image& img, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma)));
    std::vector<float> kernel(static_cast<size_t>(2 * radius + 1));
    double norm = 0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        kernel[static_cast<size_t>(i + radius)] = static_cast<float>(v);
        norm += v;
    }
    for (auto& k : kernel) k = static_cast<float>(k / norm);

    // separable pass with mirror extension at the borders
    Image tmp(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                float acc = 0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[static_cast<size_t>(i + radius)] * img.at(y, mirror_index(x + i, img.width), c);
                tmp.at(y, x, c) = acc;
            }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                float acc = 0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[static_cast<size_t>(i + radius)] * tmp.at(mirror_index(y + i, img.height), x, c);
                img.at(y, x, c) = clamp01(acc);
            }
}

}  // namespace

void AugmentationConfig::validate() const {
    auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob_ok(p_color_jitter) || !prob_ok(p_grayscale) || !prob_ok(p_blur))
        throw ConfigError("augmentation: probabilities must lie in [0,1]");
    if (brightness_lo < 0 || contrast_lo < 0 || saturation_lo < 0)
        throw ConfigError("augmentation: jitter strengths must be non-negative");
    if (brightness_hi < brightness_lo || contrast_hi < contrast_lo || saturation_hi < saturation_lo ||
        hue_hi < hue_lo || blur_sigma_hi < blur_sigma_lo)
        throw ConfigError("augmentation: range upper bounds must be >= lower bounds");
    if (std::abs(hue_lo) > 0.5 || std::abs(hue_hi) > 0.5)
        throw ConfigError("augmentation: hue shift must lie within [-0.5, 0.5]");
    if (blur_sigma_lo <= 0) throw ConfigError("augmentation: blur sigma must be positive");
}

Image augment(const Image& input, const AugmentationConfig& cfg, RngStream& rng,
              AugmentationTrace* trace_out) {
    cfg.validate();
    if (input.channels != 3) throw ShapeError("augment: expected a 3-channel tile");

    AugmentationTrace tr;
    tr.jitter_fired = rng.uniform() < cfg.p_color_jitter;
    if (tr.jitter_fired) {
        tr.brightness = rng.uniform(cfg.brightness_lo, cfg.brightness_hi);
        tr.contrast = rng.uniform(cfg.contrast_lo, cfg.contrast_hi);
        tr.saturation = rng.uniform(cfg.saturation_lo, cfg.saturation_hi);
        tr.hue_shift = rng.uniform(cfg.hue_lo, cfg.hue_hi);
    }
    tr.grayscale_fired = rng.uniform() < cfg.p_grayscale;
    tr.blur_fired = rng.uniform() < cfg.p_blur;
    if (tr.blur_fired) tr.blur_sigma = rng.uniform(cfg.blur_sigma_lo, cfg.blur_sigma_hi);

    if (trace_out) *trace_out = tr;
    return apply_trace(input, tr);
}

Image apply_trace(const Image& input, const AugmentationTrace& tr) {
    Image out = input;
    if (tr.jitter_fired) {
        apply_brightness(out, static_cast<float>(tr.brightness));
        apply_contrast(out, static_cast<float>(tr.contrast));
        apply_saturation(out, static_cast<float>(tr.saturation));
        apply_hue(out, static_cast<float>(tr.hue_shift));
    }
    if (tr.grayscale_fired) apply_grayscale(out);
    if (tr.blur_fired) apply_blur(out, tr.blur_sigma);
    return out;
}

std::pair<Image, Image> make_view_pair(const Image& input, const AugmentationConfig& cfg,
                                       RngStream& rng, AugmentationTrace* trace_out) {
    return {input, augment(input, cfg, rng, trace_out)};
}

}  // namespace hrcloud

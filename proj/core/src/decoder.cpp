#include "hrcloud/decoder.hpp"

#include <numeric>

namespace hrcloud {

void DecoderConfig::validate() const {
    if (pyramid_bins.empty()) throw ConfigError("decoder.pyramid_bins must not be empty");
    for (size_t i = 0; i < pyramid_bins.size(); ++i) {
        if (pyramid_bins[i] < 1) throw ConfigError("decoder.pyramid_bins entries must be >= 1");
        if (i > 0 && pyramid_bins[i] <= pyramid_bins[i - 1])
            throw ConfigError("decoder.pyramid_bins must be strictly increasing");
    }
    if (ppm_input_channels < 0) throw ConfigError("decoder.ppm_input_channels must be >= 0");
    if (ppm_input_channels > 0 && ppm_input_channels % 4 != 0)
        throw ConfigError("decoder.ppm_input_channels must be divisible by 4, got " +
                          std::to_string(ppm_input_channels));
}

int DecoderConfig::resolve_ppm_channels(int aggregate_channels) const {
    if (ppm_input_channels > 0) return ppm_input_channels;
    return ((aggregate_channels + 3) / 4) * 4;
}

CascadeStage::CascadeStage(ParameterStore& store, const std::string& name, int f_channels,
                           int lower_channels, RngStream& rng)
    : block1_(store, name + ".block1", f_channels + lower_channels, f_channels, 3, 1, 1, rng),
      block2_(store, name + ".block2", f_channels, f_channels, 3, 1, 1, rng),
      f_channels_(f_channels),
      lower_channels_(lower_channels) {}

Var CascadeStage::forward(const Var& f_k, const Var& f_lower, const BnMode& mode) const {
    check_shape(f_k->value.dim(1) == f_channels_ && f_lower->value.dim(1) == lower_channels_,
                "cascade: channel plan mismatch, got " + f_k->value.shape_str() + " and " +
                    f_lower->value.shape_str());
    check_shape(f_k->value.dim(2) == 2 * f_lower->value.dim(2) &&
                    f_k->value.dim(3) == 2 * f_lower->value.dim(3),
                "cascade: lower map must be exactly one level below, got " + f_k->value.shape_str() +
                    " and " + f_lower->value.shape_str());
    Var up = bilinear_resize(f_lower, f_k->value.dim(2), f_k->value.dim(3));
    Var cat = concat_channels({f_k, up});
    Var h = block1_.forward(cat, mode, /*relu_after=*/true);
    return block2_.forward(h, mode, /*relu_after=*/true);
}

PyramidPooling::PyramidPooling(ParameterStore& store, const std::string& name, int channels,
                               const std::vector<int>& bins, RngStream& rng)
    : bins_(bins), channels_(channels) {
    if (channels % 4 != 0)
        throw ConfigError("pyramid pooling input channels must be divisible by 4, got " +
                          std::to_string(channels));
    for (size_t i = 0; i < bins.size(); ++i)
        branch_convs_.emplace_back(store, name + ".branch" + std::to_string(i) + ".conv", channels,
                                   channels / 4, 1, 1, 0, /*bias=*/true, rng);
}

Var PyramidPooling::forward(const Var& x) const {
    check_shape(x->value.dim(1) == channels_, "pyramid pooling: expected " +
                                                  std::to_string(channels_) + " channels, got " +
                                                  std::to_string(x->value.dim(1)));
    const int h = x->value.dim(2), w = x->value.dim(3);
    for (int b : bins_)
        if (b > h || b > w)
            throw ConfigError("pyramid pooling: bin size " + std::to_string(b) +
                              " exceeds map size " + std::to_string(h) + "x" + std::to_string(w));
    std::vector<Var> parts{x};
    for (size_t i = 0; i < bins_.size(); ++i) {
        Var pooled = adaptive_avg_pool(x, bins_[i], bins_[i]);
        Var reduced = branch_convs_[i].forward(pooled);
        parts.push_back(bilinear_resize(reduced, h, w));
    }
    return concat_channels(parts);
}

Decoder::Decoder(ParameterStore& store, const DecoderConfig& cfg,
                 const std::vector<int>& branch_widths, bool use_cascaded_fusion,
                 bool use_pyramid_pooling, RngStream& rng)
    : cfg_(cfg), widths_(branch_widths), use_cascade_(use_cascaded_fusion) {
    cfg.validate();
    const int b = static_cast<int>(branch_widths.size());
    if (use_cascade_ && b >= 2) {
        // deepest stage first so parameter registration order matches the
        // forward cascade order (f4 -> f3 -> f2 -> f1)
        for (int k = b - 2; k >= 0; --k)
            cascade_.emplace_back(store, "decoder.cascade" + std::to_string(k),
                                  branch_widths[static_cast<size_t>(k)],
                                  branch_widths[static_cast<size_t>(k + 1)], rng);
    }
    const int aggregate_channels = std::accumulate(branch_widths.begin(), branch_widths.end(), 0);
    const int p = cfg.resolve_ppm_channels(aggregate_channels);
    proj_ = ConvBn(store, "decoder.proj", aggregate_channels, p, 1, 1, 0, rng);
    if (use_pyramid_pooling) ppm_ = std::make_unique<PyramidPooling>(store, "decoder.ppm", p, cfg.pyramid_bins, rng);
    const int head_in = use_pyramid_pooling ? 2 * p : p;
    head_ = ConvLayer(store, "decoder.head", head_in, 2, 1, 1, 0, /*bias=*/true, rng);
}

Var Decoder::aggregate_branches(const std::vector<Var>& fused, const BnMode&) const {
    check_shape(!fused.empty(), "aggregate: missing branches");
    check_shape(fused.size() == widths_.size(),
                "aggregate: expected " + std::to_string(widths_.size()) + " branches, got " +
                    std::to_string(fused.size()));
    const int h = fused[0]->value.dim(2), w = fused[0]->value.dim(3);
    std::vector<Var> parts;
    parts.reserve(fused.size());
    for (const auto& f : fused)
        parts.push_back(f->value.dim(2) == h && f->value.dim(3) == w ? f : bilinear_resize(f, h, w));
    return concat_channels(parts);
}

Var Decoder::forward(const std::vector<Var>& feature_maps, int input_h, int input_w,
                     const BnMode& mode) const {
    check_shape(feature_maps.size() == widths_.size(),
                "decoder: expected " + std::to_string(widths_.size()) + " feature maps, got " +
                    std::to_string(feature_maps.size()));
    const int b = static_cast<int>(feature_maps.size());

    std::vector<Var> fused(feature_maps.begin(), feature_maps.end());
    if (use_cascade_ && b >= 2) {
        for (int k = b - 2; k >= 0; --k) {
            const CascadeStage& stage = cascade_[static_cast<size_t>(b - 2 - k)];
            fused[static_cast<size_t>(k)] = stage.forward(feature_maps[static_cast<size_t>(k)],
                                                          fused[static_cast<size_t>(k + 1)], mode);
        }
    }

    Var agg = aggregate_branches(fused, mode);
    Var h = proj_.forward(agg, mode, /*relu_after=*/true);
    if (ppm_) h = ppm_->forward(h);
    Var logits = head_.forward(h);
    logits = bilinear_resize(logits, input_h, input_w);
    return softmax_channels(logits);
}

}  // namespace hrcloud

#include "hrcloud/model.hpp"

namespace hrcloud {

void ModelConfig::validate() const {
    backbone.validate();
    decoder.validate();
}

void ModelConfig::validate_for_input(int tile_size) const {
    validate();
    if (tile_size < 32 || tile_size % 32 != 0)
        throw ConfigError("tile size must be a positive multiple of 32, got " +
                          std::to_string(tile_size));
    const int agg_size = tile_size / 4;
    if (flags.use_pyramid_pooling)
        for (int b : decoder.pyramid_bins)
            if (b > agg_size)
                throw ConfigError("pyramid bin " + std::to_string(b) +
                                  " exceeds the aggregated map size " + std::to_string(agg_size) +
                                  " for tile size " + std::to_string(tile_size));
}

HrCloudNet::HrCloudNet(ParameterStore& store, const ModelConfig& cfg, RngStream& init_rng)
    : cfg_(cfg) {
    cfg.validate();
    backbone_ = std::make_unique<Backbone>(store, cfg.backbone, cfg.flags.use_multi_resolution,
                                           init_rng);
    std::vector<int> widths;
    for (int b = 0; b < backbone_->branch_count(); ++b) widths.push_back(cfg.backbone.level_width(b));
    decoder_ = std::make_unique<Decoder>(store, cfg.decoder, widths, cfg.flags.use_cascaded_fusion,
                                         cfg.flags.use_pyramid_pooling, init_rng);
}

Var HrCloudNet::forward(const Var& x, const BnMode& mode) const {
    const int h = x->value.dim(2), w = x->value.dim(3);
    std::vector<Var> features = backbone_->forward(x, mode);
    return decoder_->forward(features, h, w, mode);
}

std::unique_ptr<HrCloudNet> build_model(ParameterStore& store, const ModelConfig& cfg,
                                        RngStream& init_rng) {
    return std::make_unique<HrCloudNet>(store, cfg, init_rng);
}

Tensor binarize_cloud_channel(const Tensor& prob_map) {
    check_shape(prob_map.rank() == 4 && prob_map.dim(1) == 2,
                "binarize: expected (N,2,H,W) probability map, got " + prob_map.shape_str());
    const int n = prob_map.dim(0), h = prob_map.dim(2), w = prob_map.dim(3);
    Tensor out({n, 1, h, w});
    const int64_t plane = int64_t(h) * w;
    for (int i = 0; i < n; ++i)
        for (int64_t q = 0; q < plane; ++q)
            out[int64_t(i) * plane + q] = prob_map[(int64_t(i) * 2 + 1) * plane + q] >= 0.5 ? 1.0 : 0.0;
    return out;
}

}  // namespace hrcloud

#pragma once

#include <memory>

#include "hrcloud/backbone.hpp"
#include "hrcloud/decoder.hpp"

namespace hrcloud {

struct AblationFlags {
    bool use_cascaded_fusion = true;
    bool use_pyramid_pooling = true;
    bool use_multi_resolution = true;
    bool use_aug_view_loss = true;
};

struct ModelConfig {
    BackboneConfig backbone;
    DecoderConfig decoder;
    AblationFlags flags;

    void validate() const;
    // Extra checks that depend on the training tile size (level sizes,
    // pyramid bins fitting the aggregated map).
    void validate_for_input(int tile_size) const;
};

// The full segmentation network: encoder branches, cascaded fusion decoder,
// pyramid pooling and the 2-channel probability head.
class HrCloudNet {
public:
    HrCloudNet(ParameterStore& store, const ModelConfig& cfg, RngStream& init_rng);

    // x: (N,3,H,W) in [0,1], H and W divisible by 32. Returns a probability
    // map (N,2,H,W); channel 0 background, channel 1 cloud.
    Var forward(const Var& x, const BnMode& mode) const;

    const Backbone& backbone() const { return *backbone_; }
    const Decoder& decoder() const { return *decoder_; }
    const ModelConfig& config() const { return cfg_; }
    BnMode bn_mode(bool training, bool update_running = true) const {
        return cfg_.backbone.bn_mode(training, update_running);
    }

private:
    ModelConfig cfg_;
    std::unique_ptr<Backbone> backbone_;
    std::unique_ptr<Decoder> decoder_;
};

// Builds the model variant selected by cfg.flags into the given store.
std::unique_ptr<HrCloudNet> build_model(ParameterStore& store, const ModelConfig& cfg,
                                        RngStream& init_rng);

// Binarizes the cloud channel of a probability map at 0.5.
Tensor binarize_cloud_channel(const Tensor& prob_map);

}  // namespace hrcloud

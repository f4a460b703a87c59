#pragma once

#include <memory>
#include <vector>

#include "hrcloud/backbone.hpp"

namespace hrcloud {

struct DecoderConfig {
    std::vector<int> pyramid_bins = {1, 2, 3, 6};
    // Channel width entering the pooling/head section; the aggregate is
    // projected here by a 1x1 conv block. 0 = next multiple of 4 at or above
    // the aggregate width, so the pooling module's 1/4 reduction is exact.
    int ppm_input_channels = 0;

    void validate() const;
    int resolve_ppm_channels(int aggregate_channels) const;
};

// One cascaded fusion step: f_k = ConvBlock(ConvBlock([F_k, up2(f_lower)])).
class CascadeStage {
public:
    CascadeStage(ParameterStore& store, const std::string& name, int f_channels, int lower_channels,
                 RngStream& rng);
    Var forward(const Var& f_k, const Var& f_lower, const BnMode& mode) const;

private:
    ConvBn block1_, block2_;
    int f_channels_ = 0, lower_channels_ = 0;
};

// Parallel adaptive pooling at several bin sizes; each branch is reduced to
// C/4 channels by a biased 1x1 conv and upsampled back, then concatenated
// with the input.
class PyramidPooling {
public:
    PyramidPooling(ParameterStore& store, const std::string& name, int channels,
                   const std::vector<int>& bins, RngStream& rng);
    Var forward(const Var& x) const;
    int out_channels() const { return channels_ * 2; }

private:
    std::vector<ConvLayer> branch_convs_;
    std::vector<int> bins_;
    int channels_ = 0;
};

// Cascaded fusion -> aggregation at 1/4 -> projection -> pyramid pooling ->
// 2-channel head, upsampled to input size and normalized per pixel.
class Decoder {
public:
    Decoder(ParameterStore& store, const DecoderConfig& cfg, const std::vector<int>& branch_widths,
            bool use_cascaded_fusion, bool use_pyramid_pooling, RngStream& rng);

    // feature_maps: highest resolution first, as produced by the backbone.
    Var forward(const std::vector<Var>& feature_maps, int input_h, int input_w,
                const BnMode& mode) const;

    // Exposed pieces (unit-test surface).
    Var aggregate_branches(const std::vector<Var>& fused, const BnMode& mode) const;
    const std::vector<CascadeStage>& cascade_stages() const { return cascade_; }
    const PyramidPooling* pyramid() const { return ppm_.get(); }

private:
    DecoderConfig cfg_;
    std::vector<int> widths_;
    bool use_cascade_ = true;
    std::vector<CascadeStage> cascade_;  // index k fuses F_k with f_{k+1}, deepest first omitted
    ConvBn proj_;
    std::unique_ptr<PyramidPooling> ppm_;
    ConvLayer head_;
};

}  // namespace hrcloud

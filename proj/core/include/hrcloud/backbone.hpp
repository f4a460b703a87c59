#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hrcloud/ops.hpp"
#include "hrcloud/params.hpp"

namespace hrcloud {

struct BackboneConfig {
    int base_width = 18;             // level widths are W, 2W, 4W, 8W
    int residual_units_per_block = 4;
    int modules_per_stage = 1;
    int stage1_bottleneck_units = 4;  // expansion factor 4
    double bn_momentum = 0.1;
    double bn_epsilon = 1e-5;

    int level_width(int level) const { return base_width << level; }
    BnMode bn_mode(bool training, bool update_running = true) const {
        return BnMode{training, update_running, bn_momentum, bn_epsilon};
    }
    void validate() const;
};

// Plain convolution layer; weight owned by the store.
class ConvLayer {
public:
    ConvLayer() = default;
    ConvLayer(ParameterStore& store, const std::string& name, int cin, int cout, int kernel,
              int stride, int padding, bool bias, RngStream& rng);
    Var forward(const Var& x) const;
    int out_channels() const { return cout_; }

private:
    Var weight_, bias_;
    int stride_ = 1, padding_ = 0, cout_ = 0;
};

class BnLayer {
public:
    BnLayer() = default;
    BnLayer(ParameterStore& store, const std::string& name, int channels);
    Var forward(const Var& x, const BnMode& mode) const;

private:
    Var gamma_, beta_;
    mutable Var running_mean_, running_var_;
};

// conv + BN (+ optional ReLU); the building block for stems, transitions and
// fusion transforms.
class ConvBn {
public:
    ConvBn() = default;
    ConvBn(ParameterStore& store, const std::string& name, int cin, int cout, int kernel, int stride,
           int padding, RngStream& rng);
    Var forward(const Var& x, const BnMode& mode, bool relu_after) const;

private:
    ConvLayer conv_;
    BnLayer bn_;
};

// Basic residual unit: x + BN(conv(ReLU(BN(conv(x))))). No post-add ReLU, so
// zeroed weights give an exact identity.
class ResidualUnit {
public:
    ResidualUnit(ParameterStore& store, const std::string& name, int channels, RngStream& rng);
    Var forward(const Var& x, const BnMode& mode) const;

private:
    ConvBn conv1_, conv2_;
};

// ResNet bottleneck (1x1 -> 3x3 -> 1x1, expansion 4) with post-add ReLU.
class BottleneckUnit {
public:
    BottleneckUnit(ParameterStore& store, const std::string& name, int cin, int mid, int cout,
                   RngStream& rng);
    Var forward(const Var& x, const BnMode& mode) const;

private:
    ConvBn conv1_, conv2_, conv3_;
    std::unique_ptr<ConvBn> downsample_;
};

// A branch's stack of residual units within one stage.
class BasicBlock {
public:
    BasicBlock(ParameterStore& store, const std::string& name, int channels, int units,
               RngStream& rng);
    Var forward(const Var& x, const BnMode& mode) const;
    int channels() const { return channels_; }

private:
    std::vector<ResidualUnit> units_;
    int channels_ = 0;
};

// Stride-2 spawn of the next lower-resolution branch.
class TransitionModule {
public:
    TransitionModule(ParameterStore& store, const std::string& name, int cin, int cout,
                     RngStream& rng);
    Var forward(const Var& x, const BnMode& mode) const;

private:
    ConvBn conv_;
};

// Repeated multi-resolution fusion: output k = ReLU(sum_j T_{j->k}(H_j)).
// Upward transforms are 1x1 conv + BN + bilinear upsample; downward ones are
// chains of stride-2 3x3 conv + BN (ReLU between hops, none after the last).
class FusionModule {
public:
    FusionModule(ParameterStore& store, const std::string& name, const std::vector<int>& widths,
                 RngStream& rng);
    std::vector<Var> forward(const std::vector<Var>& branches, const BnMode& mode) const;

private:
    struct DownChain {
        std::vector<ConvBn> hops;
    };
    // up_[k][j] transforms source j (lower res) into target k; down_[k][j]
    // likewise for higher-res sources.
    std::vector<std::vector<std::unique_ptr<ConvBn>>> up_;
    std::vector<std::vector<std::unique_ptr<DownChain>>> down_;
    std::vector<int> widths_;
};

// Stem + four stages with transitions: emits F1..F4 at 1/4..1/32 (or just F1
// when multi-resolution is disabled).
class Backbone {
public:
    Backbone(ParameterStore& store, const BackboneConfig& cfg, bool multi_resolution,
             RngStream& rng);

    Var stem_forward(const Var& x, const BnMode& mode) const;
    std::vector<Var> forward(const Var& x, const BnMode& mode) const;

    int branch_count() const { return multi_resolution_ ? 4 : 1; }
    const BackboneConfig& config() const { return cfg_; }

private:
    struct StageModule {
        std::vector<BasicBlock> blocks;  // one per active branch
        FusionModule fusion;
        StageModule(std::vector<BasicBlock> b, FusionModule f)
            : blocks(std::move(b)), fusion(std::move(f)) {}
    };

    BackboneConfig cfg_;
    bool multi_resolution_ = true;
    ConvBn stem1_, stem2_;
    std::vector<BottleneckUnit> stage1_;
    ConvBn stage1_proj_;
    std::vector<TransitionModule> transitions_;                 // after stages 1..3
    std::vector<std::vector<StageModule>> stages_;              // stages 2..4, modules each
};

}  // namespace hrcloud

#include "hrcloud/backbone.hpp"

namespace hrcloud {

void BackboneConfig::validate() const {
    if (base_width < 1) throw ConfigError("backbone.base_width must be >= 1");
    if (residual_units_per_block < 1) throw ConfigError("backbone.residual_units_per_block must be >= 1");
    if (modules_per_stage < 1) throw ConfigError("backbone.modules_per_stage must be >= 1");
    if (stage1_bottleneck_units < 1) throw ConfigError("backbone.stage1_bottleneck_units must be >= 1");
    if (bn_momentum <= 0 || bn_momentum > 1) throw ConfigError("backbone.bn_momentum must lie in (0,1]");
    if (bn_epsilon <= 0) throw ConfigError("backbone.bn_epsilon must be positive");
}

ConvLayer::ConvLayer(ParameterStore& store, const std::string& name, int cin, int cout, int kernel,
                     int stride, int padding, bool bias, RngStream& rng)
    : stride_(stride), padding_(padding), cout_(cout) {
    weight_ = store.create(name + ".weight", {cout, cin, kernel, kernel}, true);
    ParameterStore::init_he_normal(weight_->value, cin * kernel * kernel, rng);
    if (bias) bias_ = store.create(name + ".bias", {cout}, true);
}

Var ConvLayer::forward(const Var& x) const { return conv2d(x, weight_, bias_, stride_, padding_); }

BnLayer::BnLayer(ParameterStore& store, const std::string& name, int channels) {
    gamma_ = store.create(name + ".gamma", {channels}, true);
    beta_ = store.create(name + ".beta", {channels}, true);
    running_mean_ = store.create(name + ".running_mean", {channels}, false);
    running_var_ = store.create(name + ".running_var", {channels}, false);
    gamma_->value.fill(1.0);
    running_var_->value.fill(1.0);
}

Var BnLayer::forward(const Var& x, const BnMode& mode) const {
    return batch_norm(x, gamma_, beta_, running_mean_, running_var_, mode);
}

ConvBn::ConvBn(ParameterStore& store, const std::string& name, int cin, int cout, int kernel,
               int stride, int padding, RngStream& rng)
    : conv_(store, name + ".conv", cin, cout, kernel, stride, padding, /*bias=*/false, rng),
      bn_(store, name + ".bn", cout) {}

Var ConvBn::forward(const Var& x, const BnMode& mode, bool relu_after) const {
    Var y = bn_.forward(conv_.forward(x), mode);
    return relu_after ? relu(y) : y;
}

ResidualUnit::ResidualUnit(ParameterStore& store, const std::string& name, int channels,
                           RngStream& rng)
    : conv1_(store, name + ".conv1", channels, channels, 3, 1, 1, rng),
      conv2_(store, name + ".conv2", channels, channels, 3, 1, 1, rng) {}

Var ResidualUnit::forward(const Var& x, const BnMode& mode) const {
    Var h = conv1_.forward(x, mode, /*relu_after=*/true);
    h = conv2_.forward(h, mode, /*relu_after=*/false);
    return add(x, h);
}

BottleneckUnit::BottleneckUnit(ParameterStore& store, const std::string& name, int cin, int mid,
                               int cout, RngStream& rng)
    : conv1_(store, name + ".conv1", cin, mid, 1, 1, 0, rng),
      conv2_(store, name + ".conv2", mid, mid, 3, 1, 1, rng),
      conv3_(store, name + ".conv3", mid, cout, 1, 1, 0, rng) {
    if (cin != cout)
        downsample_ = std::make_unique<ConvBn>(store, name + ".downsample", cin, cout, 1, 1, 0, rng);
}

Var BottleneckUnit::forward(const Var& x, const BnMode& mode) const {
    Var h = conv1_.forward(x, mode, true);
    h = conv2_.forward(h, mode, true);
    h = conv3_.forward(h, mode, false);
    Var skip = downsample_ ? downsample_->forward(x, mode, false) : x;
    return relu(add(h, skip));
}

BasicBlock::BasicBlock(ParameterStore& store, const std::string& name, int channels, int units,
                       RngStream& rng)
    : channels_(channels) {
    for (int u = 0; u < units; ++u)
        units_.emplace_back(store, name + ".unit" + std::to_string(u), channels, rng);
}

Var BasicBlock::forward(const Var& x, const BnMode& mode) const {
    check_shape(x->value.dim(1) == channels_,
                "basic block expects " + std::to_string(channels_) + " channels, got " +
                    std::to_string(x->value.dim(1)));
    Var h = x;
    for (const auto& u : units_) h = u.forward(h, mode);
    return h;
}

TransitionModule::TransitionModule(ParameterStore& store, const std::string& name, int cin, int cout,
                                   RngStream& rng)
    : conv_(store, name, cin, cout, 3, 2, 1, rng) {}

Var TransitionModule::forward(const Var& x, const BnMode& mode) const {
    check_shape(x->value.dim(2) >= 2 && x->value.dim(3) >= 2,
                "transition: input too small to halve, got " + x->value.shape_str());
    return conv_.forward(x, mode, /*relu_after=*/true);
}

FusionModule::FusionModule(ParameterStore& store, const std::string& name,
                           const std::vector<int>& widths, RngStream& rng)
    : widths_(widths) {
    const int b = static_cast<int>(widths.size());
    up_.resize(static_cast<size_t>(b));
    down_.resize(static_cast<size_t>(b));
    for (int k = 0; k < b; ++k) {
        up_[static_cast<size_t>(k)].resize(static_cast<size_t>(b));
        down_[static_cast<size_t>(k)].resize(static_cast<size_t>(b));
        for (int j = 0; j < b; ++j) {
            if (j == k) continue;
            const std::string tname = name + ".t" + std::to_string(j) + "to" + std::to_string(k);
            if (j > k) {
                // lower resolution -> 1x1 conv + BN, upsampled at forward time
                up_[static_cast<size_t>(k)][static_cast<size_t>(j)] =
                    std::make_unique<ConvBn>(store, tname, widths[static_cast<size_t>(j)],
                                             widths[static_cast<size_t>(k)], 1, 1, 0, rng);
            } else {
                // higher resolution -> one stride-2 conv per halving
                auto chain = std::make_unique<DownChain>();
                for (int hop = j; hop < k; ++hop) {
                    const int cin = widths[static_cast<size_t>(j)];
                    const int cout = hop == k - 1 ? widths[static_cast<size_t>(k)] : widths[static_cast<size_t>(j)];
                    chain->hops.emplace_back(store, tname + ".hop" + std::to_string(hop - j), cin,
                                             cout, 3, 2, 1, rng);
                }
                down_[static_cast<size_t>(k)][static_cast<size_t>(j)] = std::move(chain);
            }
        }
    }
}

std::vector<Var> FusionModule::forward(const std::vector<Var>& branches, const BnMode& mode) const {
    const int b = static_cast<int>(widths_.size());
    check_shape(static_cast<int>(branches.size()) == b,
                "fusion: expected " + std::to_string(b) + " branches, got " +
                    std::to_string(branches.size()));
    for (int k = 0; k < b; ++k)
        check_shape(branches[static_cast<size_t>(k)]->value.dim(1) == widths_[static_cast<size_t>(k)],
                    "fusion: branch " + std::to_string(k) + " width mismatch");

    std::vector<Var> out;
    out.reserve(static_cast<size_t>(b));
    for (int k = 0; k < b; ++k) {
        const Var& target = branches[static_cast<size_t>(k)];
        const int th = target->value.dim(2), tw = target->value.dim(3);
        std::vector<Var> terms{target};
        for (int j = 0; j < b; ++j) {
            if (j == k) continue;
            if (j > k) {
                Var t = up_[static_cast<size_t>(k)][static_cast<size_t>(j)]->forward(
                    branches[static_cast<size_t>(j)], mode, /*relu_after=*/false);
                terms.push_back(bilinear_resize(t, th, tw));
            } else {
                const auto& chain = *down_[static_cast<size_t>(k)][static_cast<size_t>(j)];
                Var t = branches[static_cast<size_t>(j)];
                for (size_t hop = 0; hop < chain.hops.size(); ++hop)
                    t = chain.hops[hop].forward(t, mode, /*relu_after=*/hop + 1 < chain.hops.size());
                terms.push_back(t);
            }
        }
        out.push_back(relu(sum_all(terms)));
    }
    return out;
}

Backbone::Backbone(ParameterStore& store, const BackboneConfig& cfg, bool multi_resolution,
                   RngStream& rng)
    : cfg_(cfg),
      multi_resolution_(multi_resolution),
      stem1_(store, "stem.1", 3, cfg.base_width, 3, 2, 1, rng),
      stem2_(store, "stem.2", cfg.base_width, cfg.base_width, 3, 2, 1, rng),
      stage1_proj_() {
    cfg.validate();
    const int w = cfg.base_width;
    const int bottleneck_out = 4 * w;
    for (int u = 0; u < cfg.stage1_bottleneck_units; ++u)
        stage1_.emplace_back(store, "stage1.unit" + std::to_string(u), u == 0 ? w : bottleneck_out, w,
                             bottleneck_out, rng);
    stage1_proj_ = ConvBn(store, "stage1.proj", bottleneck_out, w, 3, 1, 1, rng);

    const int stage_count = 3;  // stages 2..4
    for (int s = 0; s < stage_count; ++s) {
        const int stage_id = s + 2;
        const int branches = multi_resolution_ ? stage_id : 1;
        if (multi_resolution_)
            transitions_.emplace_back(store, "transition" + std::to_string(stage_id - 1),
                                      cfg.level_width(branches - 2), cfg.level_width(branches - 1),
                                      rng);
        std::vector<StageModule> mods;
        for (int m = 0; m < cfg.modules_per_stage; ++m) {
            const std::string prefix = "stage" + std::to_string(stage_id) + ".mod" + std::to_string(m);
            std::vector<BasicBlock> blocks;
            std::vector<int> widths;
            for (int b = 0; b < branches; ++b) {
                widths.push_back(cfg.level_width(b));
                blocks.emplace_back(store, prefix + ".branch" + std::to_string(b),
                                    cfg.level_width(b), cfg.residual_units_per_block, rng);
            }
            mods.emplace_back(std::move(blocks), FusionModule(store, prefix + ".fuse", widths, rng));
        }
        stages_.push_back(std::move(mods));
    }
}

Var Backbone::stem_forward(const Var& x, const BnMode& mode) const {
    const Tensor& xv = x->value;
    check_shape(xv.rank() == 4 && xv.dim(1) == 3, "stem: input must be (N,3,H,W), got " + xv.shape_str());
    if (xv.dim(2) % 32 != 0 || xv.dim(3) % 32 != 0)
        throw ShapeError("stem: input spatial size must be divisible by 32, got " +
                         std::to_string(xv.dim(2)) + "x" + std::to_string(xv.dim(3)));
    Var h = stem1_.forward(x, mode, true);
    return stem2_.forward(h, mode, true);
}

std::vector<Var> Backbone::forward(const Var& x, const BnMode& mode) const {
    Var f0 = stem_forward(x, mode);
    Var h = f0;
    for (const auto& u : stage1_) h = u.forward(h, mode);
    h = stage1_proj_.forward(h, mode, true);

    std::vector<Var> branches{h};
    for (size_t s = 0; s < stages_.size(); ++s) {
        if (multi_resolution_) branches.push_back(transitions_[s].forward(branches.back(), mode));
        for (const auto& mod : stages_[s]) {
            std::vector<Var> blocked;
            blocked.reserve(branches.size());
            for (size_t b = 0; b < branches.size(); ++b)
                blocked.push_back(mod.blocks[b].forward(branches[b], mode));
            branches = mod.fusion.forward(blocked, mode);
        }
    }
    return branches;
}

}  // namespace hrcloud

#include "hrcloud/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace hrcloud {

void TrainingConfig::validate() const {
    if (epochs < 0) throw ConfigError("training.epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
    if (eval_every < 1) throw ConfigError("training.eval_every must be >= 1");
    if (checkpoint_every < 1) throw ConfigError("training.checkpoint_every must be >= 1");
    if (max_steps < 0) throw ConfigError("training.max_steps must be >= 0");
}

void RunConfig::validate() const {
    model.validate();
    optimizer.validate();
    training.validate();
    augmentation.validate();
    metrics.validate();
    if (loss.lambda1 < 0 || loss.lambda2 < 0) throw ConfigError("loss.lambda weights must be >= 0");
    if (loss.tau < 0 || loss.tau > 1) throw ConfigError("loss.tau must lie in [0,1]");
    if (loss.ce.log_clamp <= 0 || loss.ce.log_clamp >= 1)
        throw ConfigError("loss.log_clamp must lie in (0,1)");
    if (data.tile_size < 32 || data.tile_size % 32 != 0)
        throw ConfigError("data.tile_size must be a positive multiple of 32");
    model.validate_for_input(data.tile_size);
    for (double v : sweep.lambda1)
        if (v < 0) throw ConfigError("sweep.lambda1 values must be >= 0");
    for (double v : sweep.lambda2)
        if (v < 0) throw ConfigError("sweep.lambda2 values must be >= 0");
}

namespace {

// Walks an object with a declared key set; anything else is rejected with
// its full path.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(path_ + ": expected a JSON object");
    }
    ~StrictObject() = default;

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    const json& at(const char* key) { return j_.at(key); }

    template <typename T>
    void get(const char* key, T& out) {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    void finish() const {
        for (auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError(path_ + "." + k + ": unknown key");
    }

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void parse_range(StrictObject& o, const char* key, double& lo, double& hi) {
    if (!o.has(key)) return;
    const json& j = o.at(key);
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(o.path() + "." + key + ": expected [lo, hi]");
    lo = j[0].get<double>();
    hi = j[1].get<double>();
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError("config: malformed JSON");
    RunConfig c;

    StrictObject root(j, "config");
    root.get("seed", c.seed);
    root.get("run_name", c.run_name);

    if (root.has("data")) {
        StrictObject o(root.at("data"), "config.data");
        o.get("manifest", c.data.manifest);
        o.get("tile_size", c.data.tile_size);
        o.finish();
    }
    if (root.has("model")) {
        StrictObject o(root.at("model"), "config.model");
        o.get("base_width", c.model.backbone.base_width);
        o.get("residual_units_per_block", c.model.backbone.residual_units_per_block);
        o.get("modules_per_stage", c.model.backbone.modules_per_stage);
        o.get("stage1_bottleneck_units", c.model.backbone.stage1_bottleneck_units);
        o.get("bn_momentum", c.model.backbone.bn_momentum);
        o.get("bn_epsilon", c.model.backbone.bn_epsilon);
        o.get("pyramid_bins", c.model.decoder.pyramid_bins);
        o.get("ppm_input_channels", c.model.decoder.ppm_input_channels);
        o.finish();
    }
    if (root.has("ablation")) {
        StrictObject o(root.at("ablation"), "config.ablation");
        o.get("use_cascaded_fusion", c.model.flags.use_cascaded_fusion);
        o.get("use_pyramid_pooling", c.model.flags.use_pyramid_pooling);
        o.get("use_multi_resolution", c.model.flags.use_multi_resolution);
        o.get("use_aug_view_loss", c.model.flags.use_aug_view_loss);
        o.finish();
    }
    if (root.has("loss")) {
        StrictObject o(root.at("loss"), "config.loss");
        o.get("lambda1", c.loss.lambda1);
        o.get("lambda2", c.loss.lambda2);
        o.get("tau", c.loss.tau);
        o.get("log_clamp", c.loss.ce.log_clamp);
        if (o.has("reduction")) {
            const std::string r = o.at("reduction").get<std::string>();
            if (r == "mean")
                c.loss.ce.mean_reduction = true;
            else if (r == "sum")
                c.loss.ce.mean_reduction = false;
            else
                throw ConfigError("config.loss.reduction: must be 'mean' or 'sum'");
        }
        o.finish();
    }
    if (root.has("optimizer")) {
        StrictObject o(root.at("optimizer"), "config.optimizer");
        o.get("learning_rate", c.optimizer.learning_rate);
        o.get("weight_decay", c.optimizer.weight_decay);
        o.get("beta1", c.optimizer.beta1);
        o.get("beta2", c.optimizer.beta2);
        o.get("epsilon", c.optimizer.epsilon);
        o.get("decoupled_weight_decay", c.optimizer.decoupled_weight_decay);
        o.finish();
    }
    if (root.has("training")) {
        StrictObject o(root.at("training"), "config.training");
        o.get("epochs", c.training.epochs);
        o.get("batch_size", c.training.batch_size);
        o.get("eval_every", c.training.eval_every);
        o.get("checkpoint_every", c.training.checkpoint_every);
        o.get("max_steps", c.training.max_steps);
        o.finish();
    }
    if (root.has("augmentation")) {
        StrictObject o(root.at("augmentation"), "config.augmentation");
        o.get("p_color_jitter", c.augmentation.p_color_jitter);
        o.get("p_grayscale", c.augmentation.p_grayscale);
        o.get("p_blur", c.augmentation.p_blur);
        parse_range(o, "brightness", c.augmentation.brightness_lo, c.augmentation.brightness_hi);
        parse_range(o, "contrast", c.augmentation.contrast_lo, c.augmentation.contrast_hi);
        parse_range(o, "saturation", c.augmentation.saturation_lo, c.augmentation.saturation_hi);
        parse_range(o, "hue", c.augmentation.hue_lo, c.augmentation.hue_hi);
        parse_range(o, "blur_sigma", c.augmentation.blur_sigma_lo, c.augmentation.blur_sigma_hi);
        o.finish();
    }
    if (root.has("metrics")) {
        StrictObject o(root.at("metrics"), "config.metrics");
        o.get("beta_squared", c.metrics.beta_squared);
        o.get("alpha", c.metrics.alpha);
        o.get("fw_sigma", c.metrics.fw_sigma);
        o.get("fw_window", c.metrics.fw_window);
        o.get("fw_decay", c.metrics.fw_decay);
        o.get("so_constant", c.metrics.so_constant);
        o.get("eps", c.metrics.eps);
        o.finish();
    }
    if (root.has("sweep")) {
        StrictObject o(root.at("sweep"), "config.sweep");
        o.get("lambda1", c.sweep.lambda1);
        o.get("lambda2", c.sweep.lambda2);
        o.finish();
    }
    root.finish();

    c.validate();
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["run_name"] = run_name;
    j["data"] = {{"manifest", data.manifest}, {"tile_size", data.tile_size}};
    j["model"] = {{"base_width", model.backbone.base_width},
                  {"residual_units_per_block", model.backbone.residual_units_per_block},
                  {"modules_per_stage", model.backbone.modules_per_stage},
                  {"stage1_bottleneck_units", model.backbone.stage1_bottleneck_units},
                  {"bn_momentum", model.backbone.bn_momentum},
                  {"bn_epsilon", model.backbone.bn_epsilon},
                  {"pyramid_bins", model.decoder.pyramid_bins},
                  {"ppm_input_channels", model.decoder.ppm_input_channels}};
    j["ablation"] = {{"use_cascaded_fusion", model.flags.use_cascaded_fusion},
                     {"use_pyramid_pooling", model.flags.use_pyramid_pooling},
                     {"use_multi_resolution", model.flags.use_multi_resolution},
                     {"use_aug_view_loss", model.flags.use_aug_view_loss}};
    j["loss"] = {{"lambda1", loss.lambda1},
                 {"lambda2", loss.lambda2},
                 {"tau", loss.tau},
                 {"log_clamp", loss.ce.log_clamp},
                 {"reduction", loss.ce.mean_reduction ? "mean" : "sum"}};
    j["optimizer"] = {{"learning_rate", optimizer.learning_rate},
                      {"weight_decay", optimizer.weight_decay},
                      {"beta1", optimizer.beta1},
                      {"beta2", optimizer.beta2},
                      {"epsilon", optimizer.epsilon},
                      {"decoupled_weight_decay", optimizer.decoupled_weight_decay}};
    j["training"] = {{"epochs", training.epochs},
                     {"batch_size", training.batch_size},
                     {"eval_every", training.eval_every},
                     {"checkpoint_every", training.checkpoint_every},
                     {"max_steps", training.max_steps}};
    j["augmentation"] = {{"p_color_jitter", augmentation.p_color_jitter},
                         {"p_grayscale", augmentation.p_grayscale},
                         {"p_blur", augmentation.p_blur},
                         {"brightness", {augmentation.brightness_lo, augmentation.brightness_hi}},
                         {"contrast", {augmentation.contrast_lo, augmentation.contrast_hi}},
                         {"saturation", {augmentation.saturation_lo, augmentation.saturation_hi}},
                         {"hue", {augmentation.hue_lo, augmentation.hue_hi}},
                         {"blur_sigma", {augmentation.blur_sigma_lo, augmentation.blur_sigma_hi}}};
    j["metrics"] = {{"beta_squared", metrics.beta_squared},
                    {"alpha", metrics.alpha},
                    {"fw_sigma", metrics.fw_sigma},
                    {"fw_window", metrics.fw_window},
                    {"fw_decay", metrics.fw_decay},
                    {"so_constant", metrics.so_constant},
                    {"eps", metrics.eps}};
    if (sweep.active()) j["sweep"] = {{"lambda1", sweep.lambda1}, {"lambda2", sweep.lambda2}};
    return j.dump(2);
}

RunConfig RunConfig::desk_default() {
    RunConfig c;
    c.model.backbone.base_width = 8;
    c.model.decoder.pyramid_bins = {1, 2, 3, 6};
    c.data.tile_size = 64;
    c.training.batch_size = 4;
    return c;
}

}  // namespace hrcloud

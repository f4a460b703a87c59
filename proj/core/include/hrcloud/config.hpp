#pragma once

#include <string>
#include <vector>

#include "hrcloud/augmentation.hpp"
#include "hrcloud/loss.hpp"
#include "hrcloud/metrics.hpp"
#include "hrcloud/model.hpp"
#include "hrcloud/optimizer.hpp"

namespace hrcloud {

struct DataConfig {
    std::string manifest;
    int tile_size = 352;
};

struct TrainingConfig {
    int epochs = 60;
    int batch_size = 8;
    int eval_every = 1;       // epochs between test-split evaluations
    int checkpoint_every = 1;  // epochs between checkpoint writes
    int64_t max_steps = 0;     // 0 = no step cap (smoke runs set this)

    void validate() const;
};

// Optional trade-off sweep; when both axes are non-empty, training runs the
// full grid and logs the three measures per point.
struct SweepConfig {
    std::vector<double> lambda1;
    std::vector<double> lambda2;
    bool active() const { return !lambda1.empty() && !lambda2.empty(); }
};

// The single configuration document. Defaults encode the training recipe the
// toolkit ships with, so an empty JSON object is a complete valid config.
struct RunConfig {
    uint64_t seed = 0;
    std::string run_name = "run";
    DataConfig data;
    ModelConfig model;
    LossWeights loss;
    OptimizerConfig optimizer;
    TrainingConfig training;
    AugmentationConfig augmentation;
    MetricConfig metrics;
    SweepConfig sweep;

    void validate() const;
    std::string to_json() const;  // fully resolved echo
    // Strict parse: unknown keys are rejected with their field path.
    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);

    // Desk-scale preset used by tests and smoke runs: width 8, 32x32-capable
    // pyramid bins.
    static RunConfig desk_default();
};

}  // namespace hrcloud

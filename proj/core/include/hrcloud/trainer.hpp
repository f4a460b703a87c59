#pragma once

#include <functional>
#include <memory>

#include "hrcloud/checkpoint.hpp"
#include "hrcloud/config.hpp"
#include "hrcloud/manifest.hpp"
#include "hrcloud/metrics.hpp"

namespace hrcloud {

// In-memory dataset: scenes plus their tile grids for one tile size.
struct SceneRecord {
    SceneImage image;
    LabelMask label;
    Split split = Split::Train;
    TileGrid grid;
};

struct Dataset {
    std::vector<SceneRecord> scenes;

    static Dataset load(const DatasetManifest& manifest, int tile_size);
    void plan_grids(int tile_size);

    // Flat train-tile addressing across scenes, row-major within a scene.
    int64_t train_tile_count() const;
    std::vector<int> train_scene_indices() const;
    std::vector<int> test_scene_indices() const;
};

struct StepRecord {
    int64_t step = 0;
    int epoch = 0;
    LossBreakdown losses;
};

struct FitSinks {
    std::function<void(const StepRecord&)> on_step;
    std::function<void(int epoch, const EvalReport&)> on_eval;
    std::function<void(int epoch)> on_checkpoint;
};

struct FitResult {
    std::vector<StepRecord> steps;
    std::vector<std::pair<int, EvalReport>> evals;
};

// Owns the model, parameters, optimizer and rng streams for one run.
class Trainer {
public:
    Trainer(const RunConfig& cfg, Dataset dataset);

    // One optimization step over a batch of flat train-tile ids: a single
    // pass forwards both views, backwards the weighted total, then applies
    // the ADAM update.
    LossBreakdown train_step(const std::vector<int64_t>& tile_ids);

    // Shuffled epochs with per-epoch evaluation and checkpoint hooks.
    FitResult fit(const FitSinks& sinks = {});

    // Stitched cloud-probability map for a full scene (evaluation mode).
    Image predict_scene(const SceneImage& scene) const;
    EvalReport evaluate_split(Split split) const;

    Checkpoint make_checkpoint() const;
    void load_checkpoint_state(const Checkpoint& ck);

    const RunConfig& config() const { return cfg_; }
    const ParameterStore& store() const { return store_; }
    ParameterStore& store() { return store_; }
    const HrCloudNet& model() const { return *model_; }
    const Dataset& dataset() const { return data_; }
    int64_t global_step() const { return global_step_; }
    int epoch() const { return epoch_; }

    // Assembles (input, target) batch tensors for the given tiles.
    std::pair<Tensor, Tensor> assemble_batch(const std::vector<int64_t>& tile_ids) const;

private:
    struct TileRef {
        int scene = 0;
        int row = 0;
        int col = 0;
    };
    TileRef locate(int64_t tile_id) const;
    Image train_tile_pixels(const TileRef& ref) const;
    Image train_tile_label(const TileRef& ref) const;

    RunConfig cfg_;
    Dataset data_;
    ParameterStore store_;
    std::unique_ptr<HrCloudNet> model_;
    std::unique_ptr<AdamOptimizer> opt_;
    RngStream aug_rng_;
    int64_t global_step_ = 0;
    int epoch_ = 0;
    int64_t batch_in_epoch_ = 0;
};

// Tiles a scene, runs evaluation-mode forwards and stitches the cloud
// channel back to scene size.
Image predict_scene_map(const HrCloudNet& model, const SceneImage& scene, int tile_size);

// Inference-only wrapper around a checkpoint: rebuilds the model from the
// embedded configuration and restores its tensors.
class Predictor {
public:
    explicit Predictor(const Checkpoint& ck);
    Image predict_scene(const SceneImage& scene) const {
        return predict_scene_map(*model_, scene, cfg_.data.tile_size);
    }
    const RunConfig& config() const { return cfg_; }
    const HrCloudNet& model() const { return *model_; }

private:
    RunConfig cfg_;
    ParameterStore store_;
    std::unique_ptr<HrCloudNet> model_;
};

// Runs the lambda1 x lambda2 grid; each point is an independent run from the
// same seed. The sink receives the point and its final test-split report.
struct SweepPoint {
    double lambda1 = 0;
    double lambda2 = 0;
    EvalReport report;
};
std::vector<SweepPoint> run_lambda_sweep(
    const RunConfig& cfg, const Dataset& dataset,
    const std::function<void(const SweepPoint&)>& on_point = {});

}  // namespace hrcloud

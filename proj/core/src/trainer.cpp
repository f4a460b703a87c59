#include "hrcloud/trainer.hpp"

#include <cmath>
#include <cstdio>

#include "hrcloud/augmentation.hpp"

namespace hrcloud {

namespace {
constexpr uint64_t kInitStreamTag = 1;
constexpr uint64_t kAugmentStreamTag = 2;
constexpr uint64_t kShuffleStreamTag = 3;

Tensor image_to_chw(const Image& img) {
    Tensor t({img.channels, img.height, img.width});
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                t[(int64_t(c) * img.height + y) * img.width + x] = img.at(y, x, c);
    return t;
}
}  // namespace

Dataset Dataset::load(const DatasetManifest& manifest, int tile_size) {
    Dataset d;
    for (const auto& e : manifest.entries) {
        SceneRecord rec;
        rec.image.pixels = load_image(e.image_path);
        if (rec.image.pixels.channels != 3)
            throw DataError(e.image_path + ": scene images must be RGB");
        rec.image.scene_id = e.scene_id;
        rec.image.source_path = e.image_path;
        rec.label.labels = load_mask(e.mask_path);
        rec.label.scene_id = e.scene_id;
        if (rec.label.labels.height != rec.image.pixels.height ||
            rec.label.labels.width != rec.image.pixels.width)
            throw DataError(e.mask_path + ": label shape does not match scene " + e.image_path);
        rec.split = e.split;
        d.scenes.push_back(std::move(rec));
    }
    d.plan_grids(tile_size);
    return d;
}

void Dataset::plan_grids(int tile_size) {
    for (auto& s : scenes)
        s.grid = plan_grid(s.image.pixels.height, s.image.pixels.width, tile_size);
}

int64_t Dataset::train_tile_count() const {
    int64_t n = 0;
    for (const auto& s : scenes)
        if (s.split == Split::Train) n += s.grid.tile_count();
    return n;
}

std::vector<int> Dataset::train_scene_indices() const {
    std::vector<int> out;
    for (size_t i = 0; i < scenes.size(); ++i)
        if (scenes[i].split == Split::Train) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> Dataset::test_scene_indices() const {
    std::vector<int> out;
    for (size_t i = 0; i < scenes.size(); ++i)
        if (scenes[i].split == Split::Test) out.push_back(static_cast<int>(i));
    return out;
}

Trainer::Trainer(const RunConfig& cfg, Dataset dataset) : cfg_(cfg), data_(std::move(dataset)) {
    cfg_.validate();
    RngStream init_rng(derive_seed(cfg_.seed, kInitStreamTag));
    model_ = build_model(store_, cfg_.model, init_rng);
    opt_ = std::make_unique<AdamOptimizer>(store_, cfg_.optimizer);
    aug_rng_ = RngStream(derive_seed(cfg_.seed, kAugmentStreamTag));
    data_.plan_grids(cfg_.data.tile_size);
}

Trainer::TileRef Trainer::locate(int64_t tile_id) const {
    int64_t remaining = tile_id;
    for (size_t i = 0; i < data_.scenes.size(); ++i) {
        const auto& s = data_.scenes[i];
        if (s.split != Split::Train) continue;
        const int64_t count = s.grid.tile_count();
        if (remaining < count) {
            TileRef ref;
            ref.scene = static_cast<int>(i);
            ref.row = static_cast<int>(remaining / s.grid.cols);
            ref.col = static_cast<int>(remaining % s.grid.cols);
            return ref;
        }
        remaining -= count;
    }
    throw Error("train tile id out of range: " + std::to_string(tile_id));
}

namespace {
// Crops a single tile out of a map with mirror padding (same geometry as
// crop_map, one tile only).
Image crop_one(const Image& map, const TileGrid& grid, int row, int col) {
    const int t = grid.tile_size;
    Image tile(t, t, map.channels);
    const int y0 = row * t, x0 = col * t;
    for (int y = 0; y < t; ++y) {
        const int sy = mirror_index(y0 + y, map.height);
        for (int x = 0; x < t; ++x) {
            const int sx = mirror_index(x0 + x, map.width);
            for (int c = 0; c < map.channels; ++c) tile.at(y, x, c) = map.at(sy, sx, c);
        }
    }
    return tile;
}
}  // namespace

Image Trainer::train_tile_pixels(const TileRef& ref) const {
    const auto& s = data_.scenes[static_cast<size_t>(ref.scene)];
    return crop_one(s.image.pixels, s.grid, ref.row, ref.col);
}

Image Trainer::train_tile_label(const TileRef& ref) const {
    const auto& s = data_.scenes[static_cast<size_t>(ref.scene)];
    return crop_one(s.label.labels, s.grid, ref.row, ref.col);
}

std::pair<Tensor, Tensor> Trainer::assemble_batch(const std::vector<int64_t>& tile_ids) const {
    check_shape(!tile_ids.empty(), "assemble_batch: empty batch");
    const int t = cfg_.data.tile_size;
    const int n = static_cast<int>(tile_ids.size());
    Tensor x({n, 3, t, t});
    Tensor target({n, 2, t, t});
    for (int i = 0; i < n; ++i) {
        TileRef ref = locate(tile_ids[static_cast<size_t>(i)]);
        Image px = train_tile_pixels(ref);
        Image lb = train_tile_label(ref);
        Tensor xt = image_to_chw(px);
        Tensor tt = encode_label(lb);
        std::copy(xt.data(), xt.data() + xt.numel(), x.data() + int64_t(i) * 3 * t * t);
        std::copy(tt.data(), tt.data() + tt.numel(), target.data() + int64_t(i) * 2 * t * t);
    }
    return {std::move(x), std::move(target)};
}

LossBreakdown Trainer::train_step(const std::vector<int64_t>& tile_ids) {
    const int t = cfg_.data.tile_size;
    const int n = static_cast<int>(tile_ids.size());
    auto [x, target] = assemble_batch(tile_ids);

    const bool use_aug = cfg_.model.flags.use_aug_view_loss;
    Tensor x_aug;
    if (use_aug) {
        x_aug = Tensor({n, 3, t, t});
        for (int i = 0; i < n; ++i) {
            TileRef ref = locate(tile_ids[static_cast<size_t>(i)]);
            Image aug = augment(train_tile_pixels(ref), cfg_.augmentation, aug_rng_);
            Tensor at = image_to_chw(aug);
            std::copy(at.data(), at.data() + at.numel(), x_aug.data() + int64_t(i) * 3 * t * t);
        }
    }

    store_.zero_grad();
    const BnMode mode = model_->bn_mode(/*training=*/true);
    Var y = model_->forward(make_constant(std::move(x)), mode);
    Var y_aug;
    if (use_aug) y_aug = model_->forward(make_constant(std::move(x_aug)), mode);

    LossOutput lo = total_loss(y, y_aug, target, cfg_.loss);
    if (!std::isfinite(lo.breakdown.l_ce))
        throw Error("non-finite l_ce at step " + std::to_string(global_step_ + 1));
    if (!std::isfinite(lo.breakdown.l_ce_aug))
        throw Error("non-finite l_ce_aug at step " + std::to_string(global_step_ + 1));
    if (!std::isfinite(lo.breakdown.total))
        throw Error("non-finite total loss at step " + std::to_string(global_step_ + 1));

    backward(lo.total);
    opt_->step();
    ++global_step_;
    return lo.breakdown;
}

FitResult Trainer::fit(const FitSinks& sinks) {
    FitResult result;
    const auto train_scenes = data_.train_scene_indices();
    if (train_scenes.empty()) throw DataError("fit: the training split is empty");
    const int64_t tiles = data_.train_tile_count();
    const int64_t batch = cfg_.training.batch_size;

    for (; epoch_ < cfg_.training.epochs; ++epoch_) {
        if (cfg_.training.max_steps > 0 && global_step_ >= cfg_.training.max_steps) break;

        // Epoch order is a pure function of (seed, epoch) so mid-epoch
        // resume re-derives it.
        std::vector<int64_t> order(static_cast<size_t>(tiles));
        for (int64_t i = 0; i < tiles; ++i) order[static_cast<size_t>(i)] = i;
        RngStream shuffle_rng(derive_seed(cfg_.seed, kShuffleStreamTag + 64 * uint64_t(epoch_ + 1)));
        shuffle_rng.shuffle(order);

        const int64_t batches = (tiles + batch - 1) / batch;
        for (int64_t b = batch_in_epoch_; b < batches; ++b) {
            if (cfg_.training.max_steps > 0 && global_step_ >= cfg_.training.max_steps) break;
            const int64_t lo = b * batch;
            const int64_t hi = std::min(tiles, lo + batch);
            std::vector<int64_t> ids(order.begin() + lo, order.begin() + hi);
            StepRecord rec;
            rec.epoch = epoch_;
            rec.losses = train_step(ids);
            rec.step = global_step_;
            batch_in_epoch_ = b + 1;
            result.steps.push_back(rec);
            if (sinks.on_step) sinks.on_step(rec);
        }
        if (cfg_.training.max_steps > 0 && global_step_ >= cfg_.training.max_steps) break;
        batch_in_epoch_ = 0;

        const bool has_test = !data_.test_scene_indices().empty();
        if (has_test && (epoch_ + 1) % cfg_.training.eval_every == 0) {
            EvalReport report = evaluate_split(Split::Test);
            result.evals.emplace_back(epoch_, report);
            if (sinks.on_eval) sinks.on_eval(epoch_, report);
        }
        if (sinks.on_checkpoint && (epoch_ + 1) % cfg_.training.checkpoint_every == 0)
            sinks.on_checkpoint(epoch_);
    }
    return result;
}

Image predict_scene_map(const HrCloudNet& model, const SceneImage& scene, int tile_size) {
    NoGradGuard no_grad;
    TileGrid grid = plan_grid(scene.pixels.height, scene.pixels.width, tile_size);
    std::vector<Image> tiles = crop_map(scene.pixels, grid);
    const BnMode mode = model.bn_mode(/*training=*/false);

    std::vector<Image> prob_tiles;
    prob_tiles.reserve(tiles.size());
    const int t = tile_size;
    for (const auto& tile : tiles) {
        Var y = model.forward(make_constant(image_to_chw(tile)), mode);
        // keep the cloud channel
        Image prob(t, t, 1);
        const Tensor& yv = y->value;
        for (int r = 0; r < t; ++r)
            for (int c = 0; c < t; ++c)
                prob.at(r, c) = static_cast<float>(yv[(int64_t(1) * t + r) * t + c]);
        prob_tiles.push_back(std::move(prob));
    }
    return stitch_tiles(prob_tiles, grid);
}

Image Trainer::predict_scene(const SceneImage& scene) const {
    return predict_scene_map(*model_, scene, cfg_.data.tile_size);
}

Predictor::Predictor(const Checkpoint& ck) {
    if (ck.config_json.empty())
        throw DataError("checkpoint carries no embedded configuration");
    cfg_ = RunConfig::from_json_text(ck.config_json);
    RngStream init_rng(derive_seed(cfg_.seed, kInitStreamTag));
    model_ = build_model(store_, cfg_.model, init_rng);
    ck.restore(store_, nullptr);
}

EvalReport Trainer::evaluate_split(Split split) const {
    EvalReport report;
    report.config_echo = cfg_.metrics;
    for (const auto& s : data_.scenes) {
        if (s.split != split) continue;
        Image pred = predict_scene(s.image);
        SceneMetrics m = compute_scene_metrics(pred, s.label, cfg_.metrics);
        if (!m.f_defined)
            std::fprintf(stderr, "warning: scene %s has no foreground; F measure excluded\n",
                         s.label.scene_id.c_str());
        report.scenes.push_back(std::move(m));
    }
    report.finalize();
    return report;
}

Checkpoint Trainer::make_checkpoint() const {
    Checkpoint ck = Checkpoint::capture(store_, opt_.get(), cfg_.to_json());
    ck.epoch = epoch_;
    ck.global_step = global_step_;
    ck.rng_states["augment"] = aug_rng_.serialize();
    ck.rng_states["batch_in_epoch"] = std::to_string(batch_in_epoch_);
    return ck;
}

void Trainer::load_checkpoint_state(const Checkpoint& ck) {
    ck.restore(store_, opt_.get());
    epoch_ = ck.epoch;
    global_step_ = ck.global_step;
    auto it = ck.rng_states.find("augment");
    if (it != ck.rng_states.end()) aug_rng_ = RngStream::deserialize(it->second);
    it = ck.rng_states.find("batch_in_epoch");
    batch_in_epoch_ = it != ck.rng_states.end() ? std::stoll(it->second) : 0;
}

std::vector<SweepPoint> run_lambda_sweep(const RunConfig& cfg, const Dataset& dataset,
                                         const std::function<void(const SweepPoint&)>& on_point) {
    if (!cfg.sweep.active()) throw ConfigError("run_lambda_sweep: config has no sweep grid");
    std::vector<SweepPoint> points;
    for (double l1 : cfg.sweep.lambda1) {
        for (double l2 : cfg.sweep.lambda2) {
            RunConfig point_cfg = cfg;
            point_cfg.loss.lambda1 = l1;
            point_cfg.loss.lambda2 = l2;
            point_cfg.sweep = SweepConfig{};
            Trainer trainer(point_cfg, dataset);
            trainer.fit();
            SweepPoint p;
            p.lambda1 = l1;
            p.lambda2 = l2;
            p.report = trainer.evaluate_split(Split::Test);
            if (on_point) on_point(p);
            points.push_back(std::move(p));
        }
    }
    return points;
}

}  // namespace hrcloud

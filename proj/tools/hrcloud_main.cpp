// Command-line surface of the cloud-detection toolkit: train, predict,
// evaluate, tile/stitch utilities and confusion overlays.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hrcloud/trainer.hpp"
#include "hrcloud/visualize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hrcloud;

namespace {

// Exit codes: 0 success, 1 validation, 2 runtime, 3 data.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitData = 3;

fs::path resolve_run_dir(const RunConfig& cfg, const std::string& override_dir) {
    if (!override_dir.empty()) return override_dir;
    const char* root = std::getenv("HRCLOUD_RUN_ROOT");
    return fs::path(root ? root : "runs") / cfg.run_name;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

json step_to_json(const StepRecord& rec) {
    return json{{"type", "step"},
                {"step", rec.step},
                {"epoch", rec.epoch},
                {"l_ce", rec.losses.l_ce},
                {"l_ce_aug", rec.losses.l_ce_aug},
                {"total", rec.losses.total},
                {"masked_fraction", rec.losses.masked_fraction}};
}

json eval_to_json(int epoch, const EvalReport& report) {
    return json{{"type", "epoch"},
                {"epoch", epoch},
                {"e_ma", report.mean_e_ma},
                {"f_beta_w", report.mean_f_beta_w},
                {"m_s", report.mean_m_s},
                {"scene_count", report.scenes.size()}};
}

int cmd_train(const std::string& config_path, const std::string& run_dir_override) {
    RunConfig cfg = RunConfig::from_file(config_path);
    if (cfg.data.manifest.empty())
        throw ConfigError("config.data.manifest: a manifest path is required for training");
    DatasetManifest manifest = load_manifest(cfg.data.manifest);
    Dataset dataset = Dataset::load(manifest, cfg.data.tile_size);

    // validation is done; only now touch the filesystem
    const fs::path run_dir = resolve_run_dir(cfg, run_dir_override);
    fs::create_directories(run_dir);
    write_text(run_dir / "config.json", cfg.to_json());

    if (cfg.sweep.active()) {
        std::ofstream summary(run_dir / "sweep_summary.jsonl");
        run_lambda_sweep(cfg, dataset, [&](const SweepPoint& p) {
            json j{{"lambda1", p.lambda1},
                   {"lambda2", p.lambda2},
                   {"e_ma", p.report.mean_e_ma},
                   {"f_beta_w", p.report.mean_f_beta_w},
                   {"m_s", p.report.mean_m_s}};
            summary << j.dump() << "\n";
            summary.flush();
            std::cout << "sweep point lambda1=" << p.lambda1 << " lambda2=" << p.lambda2
                      << " e_ma=" << p.report.mean_e_ma << " F=" << p.report.mean_f_beta_w
                      << " m_s=" << p.report.mean_m_s << "\n";
        });
        std::cout << "sweep complete; summary at " << (run_dir / "sweep_summary.jsonl") << "\n";
        return kExitOk;
    }

    Trainer trainer(cfg, std::move(dataset));
    std::ofstream log(run_dir / "metrics.jsonl");
    FitSinks sinks;
    sinks.on_step = [&](const StepRecord& rec) { log << step_to_json(rec).dump() << "\n"; };
    sinks.on_eval = [&](int epoch, const EvalReport& report) {
        log << eval_to_json(epoch, report).dump() << "\n";
        log.flush();
        std::cout << "epoch " << epoch << ": e_ma=" << report.mean_e_ma
                  << " F=" << report.mean_f_beta_w << " m_s=" << report.mean_m_s << "\n";
    };
    sinks.on_checkpoint = [&](int) {
        save_checkpoint((run_dir / "checkpoint.bin").string(), trainer.make_checkpoint());
    };
    trainer.fit(sinks);
    save_checkpoint((run_dir / "checkpoint.bin").string(), trainer.make_checkpoint());
    std::cout << "run complete; artifacts in " << run_dir << "\n";
    return kExitOk;
}

int cmd_predict(const std::string& checkpoint_path, const std::vector<std::string>& inputs,
                const std::string& out_dir) {
    Predictor predictor(load_checkpoint(checkpoint_path));
    fs::create_directories(out_dir);
    for (const auto& input : inputs) {
        SceneImage scene;
        scene.pixels = load_image(input);
        if (scene.pixels.channels != 3) throw DataError(input + ": scenes must be RGB");
        scene.scene_id = fs::path(input).stem().string();
        scene.source_path = input;

        Image prob = predictor.predict_scene(scene);
        Image mask(prob.height, prob.width, 1);
        for (size_t i = 0; i < prob.data.size(); ++i)
            mask.data[i] = prob.data[i] >= 0.5f ? 1.0f : 0.0f;

        const fs::path base = fs::path(out_dir) / scene.scene_id;
        save_probability_map(base.string() + "_prob.pgm", prob);
        write_pgm(base.string() + "_mask.pgm", mask);
        std::cout << scene.scene_id << ": wrote " << base.string() << "_prob.pgm and _mask.pgm\n";
    }
    return kExitOk;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& manifest_path,
                 const std::string& out_dir) {
    Predictor predictor(load_checkpoint(checkpoint_path));
    DatasetManifest manifest = load_manifest(manifest_path);
    if (manifest.entries.empty()) throw DataError("evaluate: manifest has no entries");

    EvalReport report;
    report.config_echo = predictor.config().metrics;
    for (const auto& e : manifest.entries) {
        SceneImage scene;
        scene.pixels = load_image(e.image_path);
        scene.scene_id = e.scene_id;
        LabelMask label;
        label.labels = load_mask(e.mask_path);
        label.scene_id = e.scene_id;
        if (label.labels.height != scene.pixels.height || label.labels.width != scene.pixels.width)
            throw DataError(e.mask_path + ": label shape does not match scene");
        Image pred = predictor.predict_scene(scene);
        SceneMetrics m = compute_scene_metrics(pred, label, predictor.config().metrics);
        if (!m.f_defined)
            std::cerr << "warning: scene " << e.scene_id << " has no foreground; F excluded\n";
        report.scenes.push_back(std::move(m));
    }
    report.finalize();

    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "report.json", report.to_json());
    write_text(fs::path(out_dir) / "report.txt", report.to_table());
    std::cout << report.to_table();
    return kExitOk;
}

int cmd_tile(const std::string& input, int tile_size, const std::string& out_dir) {
    Image scene = load_image(input);
    TileGrid grid = plan_grid(scene.height, scene.width, tile_size);
    fs::create_directories(out_dir);
    std::vector<Image> tiles = crop_map(scene, grid);
    const std::string scene_id = fs::path(input).stem().string();
    for (int r = 0; r < grid.rows; ++r)
        for (int c = 0; c < grid.cols; ++c) {
            const Image& tile = tiles[static_cast<size_t>(r * grid.cols + c)];
            const std::string name =
                "tile_r" + std::to_string(r) + "_c" + std::to_string(c) +
                (tile.channels == 3 ? ".ppm" : ".pgm");
            if (tile.channels == 3)
                write_ppm((fs::path(out_dir) / name).string(), tile);
            else
                write_pgm((fs::path(out_dir) / name).string(), tile);
        }
    json meta{{"scene_id", scene_id},          {"scene_height", grid.scene_height},
              {"scene_width", grid.scene_width}, {"tile_size", grid.tile_size},
              {"rows", grid.rows},             {"cols", grid.cols},
              {"pad_bottom", grid.pad_bottom}, {"pad_right", grid.pad_right}};
    write_text(fs::path(out_dir) / "grid.json", meta.dump(2));
    std::cout << "wrote " << grid.tile_count() << " tiles and grid.json to " << out_dir << "\n";
    return kExitOk;
}

int cmd_stitch(const std::string& grid_path, const std::string& tiles_dir,
               const std::string& out_path) {
    std::ifstream in(grid_path);
    if (!in) throw DataError("cannot open grid file: " + grid_path);
    json meta = json::parse(in, nullptr, false);
    if (meta.is_discarded()) throw DataError(grid_path + ": malformed grid JSON");
    TileGrid grid;
    grid.scene_height = meta.at("scene_height").get<int>();
    grid.scene_width = meta.at("scene_width").get<int>();
    grid.tile_size = meta.at("tile_size").get<int>();
    grid.rows = meta.at("rows").get<int>();
    grid.cols = meta.at("cols").get<int>();
    grid.pad_bottom = meta.at("pad_bottom").get<int>();
    grid.pad_right = meta.at("pad_right").get<int>();

    std::vector<Image> tiles;
    tiles.reserve(static_cast<size_t>(grid.tile_count()));
    for (int r = 0; r < grid.rows; ++r)
        for (int c = 0; c < grid.cols; ++c) {
            const std::string stem =
                (fs::path(tiles_dir) / ("tile_r" + std::to_string(r) + "_c" + std::to_string(c)))
                    .string();
            if (fs::exists(stem + ".ppm"))
                tiles.push_back(load_image(stem + ".ppm"));
            else if (fs::exists(stem + ".pgm"))
                tiles.push_back(load_image(stem + ".pgm"));
            else
                throw DataError("missing tile " + stem + ".{ppm,pgm}");
        }
    Image out = stitch_tiles(tiles, grid);
    if (out.channels == 3)
        write_ppm(out_path, out);
    else
        write_pgm(out_path, out);
    std::cout << "stitched " << grid.tile_count() << " tiles into " << out_path << "\n";
    return kExitOk;
}

int cmd_visualize(const std::string& pred_path, const std::string& label_path,
                  const std::string& out_path) {
    Image pred = load_mask(pred_path);
    Image label = load_mask(label_path);
    Image overlay = render_overlay(pred, label);
    write_ppm(out_path, overlay);
    ConfusionCounts c = confusion_counts(pred, label);
    std::cout << "TP=" << c.tp << " TN=" << c.tn << " FP=" << c.fp << " FN=" << c.fn << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "hrcloud - high-resolution cloud detection toolkit\n"
        "Overlay palette: TP white, TN black, FP red, FN blue.\n"
        "Run directories default to $HRCLOUD_RUN_ROOT/<run_name> (./runs otherwise)."};
    app.require_subcommand(1);

    std::string config_path, run_dir;
    auto* train = app.add_subcommand("train", "Train a model from a config file");
    train->add_option("--config", config_path, "JSON config path")->required();
    train->add_option("--run-dir", run_dir, "Override the run directory");

    std::string checkpoint_path, out_dir;
    std::vector<std::string> inputs;
    auto* predict = app.add_subcommand("predict", "Predict stitched cloud maps for scenes");
    predict->add_option("--checkpoint", checkpoint_path, "Checkpoint archive")->required();
    predict->add_option("--input", inputs, "Scene image(s)")->required();
    predict->add_option("--out", out_dir, "Output directory")->required();

    std::string manifest_path, eval_checkpoint, eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint against a manifest");
    evaluate->add_option("--checkpoint", eval_checkpoint, "Checkpoint archive")->required();
    evaluate->add_option("--manifest", manifest_path, "Evaluation manifest")->required();
    evaluate->add_option("--out", eval_out, "Output directory")->required();

    std::string tile_input, tile_out;
    int tile_size = 352;
    auto* tile = app.add_subcommand("tile", "Crop a scene into fixed-size tiles");
    tile->add_option("--input", tile_input, "Scene image")->required();
    tile->add_option("--tile-size", tile_size, "Tile side length");
    tile->add_option("--out", tile_out, "Output directory")->required();

    std::string grid_path, tiles_dir, stitch_out;
    auto* stitch = app.add_subcommand("stitch", "Reassemble tiles into the original scene");
    stitch->add_option("--grid", grid_path, "grid.json from the tile command")->required();
    stitch->add_option("--tiles", tiles_dir, "Directory with tile images")->required();
    stitch->add_option("--out", stitch_out, "Output image path")->required();

    std::string vis_pred, vis_label, vis_out;
    auto* visualize = app.add_subcommand(
        "visualize", "Render a TP/TN/FP/FN overlay (TP white, TN black, FP red, FN blue)");
    visualize->add_option("--pred", vis_pred, "Binary prediction mask")->required();
    visualize->add_option("--label", vis_label, "Binary label mask")->required();
    visualize->add_option("--out", vis_out, "Output PPM path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, run_dir);
        if (predict->parsed()) return cmd_predict(checkpoint_path, inputs, out_dir);
        if (evaluate->parsed()) return cmd_evaluate(eval_checkpoint, manifest_path, eval_out);
        if (tile->parsed()) return cmd_tile(tile_input, tile_size, tile_out);
        if (stitch->parsed()) return cmd_stitch(grid_path, tiles_dir, stitch_out);
        if (visualize->parsed()) return cmd_visualize(vis_pred, vis_label, vis_out);
    } catch (const ConfigError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

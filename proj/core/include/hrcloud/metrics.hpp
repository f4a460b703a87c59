#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrcloud/image.hpp"
#include "hrcloud/tiling.hpp"

namespace hrcloud {

// Every inner constant of the foreground-map measures, echoed in reports so
// numbers are auditable.
struct MetricConfig {
    double beta_squared = 1.0;     // precision/recall trade-off
    double alpha = 0.5;            // object vs region weight of the structure measure
    double fw_sigma = 5.0;         // Gaussian dependency kernel sigma
    int fw_window = 7;             // truncated kernel size (odd)
    double fw_decay = 5.0;         // background proximity decay constant
    double so_constant = 1.0;      // dispersion offset in the object similarity
    double eps = 1e-12;            // denominator guards

    void validate() const;
};

// mean |y - t| over all pixels; y in [0,1], t binary.
double mean_absolute_error(const Image& y, const Image& t);

// Weighted F-measure for foreground maps: error diffusion at the foreground,
// proximity-weighted errors at the background, combined through weighted
// precision/recall. Throws UndefinedMetricError when t has no foreground.
double weighted_fbeta(const Image& y, const Image& t, const MetricConfig& cfg);

// Structure measure: alpha * object similarity + (1-alpha) * region
// similarity; degenerate ground truths fall back to mean-based scores.
double structure_measure(const Image& y, const Image& t, const MetricConfig& cfg);

// Exact squared Euclidean distance to the nearest foreground pixel together
// with that pixel's coordinates. Ties resolve to the lexicographically
// smallest (squared distance, column, row) so results are implementation
// independent.
struct NearestForeground {
    std::vector<int64_t> dist2;
    std::vector<int32_t> src_row;
    std::vector<int32_t> src_col;
};
NearestForeground nearest_foreground(const std::vector<uint8_t>& fg, int h, int w);

struct SceneMetrics {
    std::string scene_id;
    double e_ma = 0.0;
    double f_beta_w = 0.0;
    double m_s = 0.0;
    bool f_defined = true;
};

struct EvalReport {
    std::vector<SceneMetrics> scenes;
    double mean_e_ma = 0.0;
    double mean_f_beta_w = 0.0;  // over scenes where the measure is defined
    double mean_m_s = 0.0;
    int f_excluded_count = 0;
    MetricConfig config_echo;

    void finalize();  // fills the dataset means
    // Human-readable table in the e_ma / F_beta_w / m_s column order.
    std::string to_table() const;
    std::string to_json() const;
};

// All three measures for one scene-sized prediction map.
SceneMetrics compute_scene_metrics(const Image& stitched_prediction, const LabelMask& label,
                                   const MetricConfig& cfg);

// Stitches the per-tile cloud-probability maps to scene size and evaluates
// all three measures against the scene label.
SceneMetrics evaluate_scene(const std::vector<Image>& prediction_tiles, const LabelMask& label,
                            const TileGrid& grid, const MetricConfig& cfg);

}  // namespace hrcloud

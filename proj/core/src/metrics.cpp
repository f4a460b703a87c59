#include "hrcloud/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hrcloud {

void MetricConfig::validate() const {
    if (beta_squared <= 0) throw ConfigError("metrics.beta_squared must be positive");
    if (alpha < 0 || alpha > 1) throw ConfigError("metrics.alpha must lie in [0,1]");
    if (fw_sigma <= 0) throw ConfigError("metrics.fw_sigma must be positive");
    if (fw_window < 1 || fw_window % 2 == 0) throw ConfigError("metrics.fw_window must be odd and >= 1");
    if (fw_decay <= 0) throw ConfigError("metrics.fw_decay must be positive");
    if (eps <= 0) throw ConfigError("metrics.eps must be positive");
}

namespace {

void check_pair(const Image& y, const Image& t) {
    if (!y.same_shape(t))
        throw ShapeError("metric inputs must share a shape, got " + std::to_string(y.height) + "x" +
                         std::to_string(y.width) + " vs " + std::to_string(t.height) + "x" +
                         std::to_string(t.width));
    if (y.channels != 1) throw ShapeError("metrics expect single-channel maps");
}

}  // namespace

double mean_absolute_error(const Image& y, const Image& t) {
    check_pair(y, t);
    double acc = 0;
    for (size_t i = 0; i < y.data.size(); ++i) acc += std::abs(double(y.data[i]) - double(t.data[i]));
    return acc / double(y.data.size());
}

NearestForeground nearest_foreground(const std::vector<uint8_t>& fg, int h, int w) {
    const int64_t n = int64_t(h) * w;
    check_shape(static_cast<int64_t>(fg.size()) == n, "nearest_foreground: size mismatch");
    constexpr int64_t kInf = INT64_MAX / 4;

    // Per-column nearest foreground row; on |dr| ties the smaller row wins
    // (the downward sweep runs first and strict improvement keeps it).
    std::vector<int32_t> col_src(static_cast<size_t>(n), -1);
    std::vector<int64_t> col_d2(static_cast<size_t>(n), kInf);
    for (int c = 0; c < w; ++c) {
        int32_t last = -1;
        for (int r = 0; r < h; ++r) {
            if (fg[static_cast<size_t>(int64_t(r) * w + c)]) last = r;
            if (last >= 0) {
                col_src[static_cast<size_t>(int64_t(r) * w + c)] = last;
                col_d2[static_cast<size_t>(int64_t(r) * w + c)] = int64_t(r - last) * (r - last);
            }
        }
        last = -1;
        for (int r = h - 1; r >= 0; --r) {
            const size_t idx = static_cast<size_t>(int64_t(r) * w + c);
            if (fg[idx]) last = r;
            if (last >= 0) {
                const int64_t d2 = int64_t(last - r) * (last - r);
                if (d2 < col_d2[idx]) {  // strict: equal distance keeps the smaller row
                    col_d2[idx] = d2;
                    col_src[idx] = last;
                }
            }
        }
    }

    NearestForeground out;
    out.dist2.assign(static_cast<size_t>(n), kInf);
    out.src_row.assign(static_cast<size_t>(n), -1);
    out.src_col.assign(static_cast<size_t>(n), -1);

    // Row-wise exact lower envelope over the column parabolas
    // (c - c')^2 + col_d2[r][c']. Boundaries are kept as exact rationals so
    // tie-breaking (smaller column wins) is deterministic.
    std::vector<int> vcol(static_cast<size_t>(w));
    std::vector<int64_t> znum(static_cast<size_t>(w) + 1), zden(static_cast<size_t>(w) + 1);
    for (int r = 0; r < h; ++r) {
        const int64_t base = int64_t(r) * w;
        int k = -1;
        for (int c = 0; c < w; ++c) {
            const int64_t f = col_d2[static_cast<size_t>(base + c)];
            if (f >= kInf) continue;
            // Intersection with the envelope top: s = (f + c^2 - f_k - vk^2)
            // / (2 (c - vk)), den > 0. Pop while s <= z[k]; boundary z[0] is
            // -infinity so the first parabola never pops.
            int64_t num = 0, den = 1;
            while (k >= 0) {
                const int vk = vcol[static_cast<size_t>(k)];
                const int64_t fk = col_d2[static_cast<size_t>(base + vk)];
                num = f + int64_t(c) * c - fk - int64_t(vk) * vk;
                den = 2 * int64_t(c - vk);
                if (k == 0) break;
                if (num * zden[static_cast<size_t>(k)] <= znum[static_cast<size_t>(k)] * den)
                    --k;
                else
                    break;
            }
            if (k < 0) {
                k = 0;
                vcol[0] = c;
                znum[0] = INT64_MIN / 4;
                zden[0] = 1;
            } else {
                ++k;
                vcol[static_cast<size_t>(k)] = c;
                znum[static_cast<size_t>(k)] = num;
                zden[static_cast<size_t>(k)] = den;
            }
        }
        if (k < 0) continue;  // row has no reachable columns (no foreground at all)
        int seg = 0;
        for (int c = 0; c < w; ++c) {
            // advance while the next boundary is strictly left of c; staying
            // put on equality keeps the smaller source column
            while (seg < k &&
                   znum[static_cast<size_t>(seg + 1)] < int64_t(c) * zden[static_cast<size_t>(seg + 1)])
                ++seg;
            const int vc = vcol[static_cast<size_t>(seg)];
            const size_t idx = static_cast<size_t>(base + c);
            out.dist2[idx] = int64_t(c - vc) * (c - vc) + col_d2[static_cast<size_t>(base + vc)];
            out.src_col[idx] = vc;
            out.src_row[idx] = col_src[static_cast<size_t>(base + vc)];
        }
    }
    return out;
}

double weighted_fbeta(const Image& y, const Image& t, const MetricConfig& cfg) {
    cfg.validate();
    check_pair(y, t);
    const int h = y.height, w = y.width;
    const int64_t n = int64_t(h) * w;

    std::vector<uint8_t> fg(static_cast<size_t>(n));
    int64_t nfg = 0;
    for (int64_t i = 0; i < n; ++i) {
        const float tv = t.data[static_cast<size_t>(i)];
        if (tv != 0.0f && tv != 1.0f)
            throw DataError("weighted_fbeta: ground truth must be binary");
        fg[static_cast<size_t>(i)] = tv == 1.0f;
        nfg += fg[static_cast<size_t>(i)];
    }
    if (nfg == 0)
        throw UndefinedMetricError("weighted_fbeta is undefined for an empty foreground");

    std::vector<double> err(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
        err[static_cast<size_t>(i)] = std::abs(double(y.data[static_cast<size_t>(i)]) -
                                               double(t.data[static_cast<size_t>(i)]));

    NearestForeground nearest = nearest_foreground(fg, h, w);

    // Background entries take the error of their nearest foreground pixel
    // before diffusion.
    std::vector<double> et(err);
    for (int64_t i = 0; i < n; ++i)
        if (!fg[static_cast<size_t>(i)]) {
            const int64_t src = int64_t(nearest.src_row[static_cast<size_t>(i)]) * w +
                                nearest.src_col[static_cast<size_t>(i)];
            et[static_cast<size_t>(i)] = err[static_cast<size_t>(src)];
        }

    // Separable zero-padded correlation with the truncated Gaussian.
    const int radius = cfg.fw_window / 2;
    std::vector<double> kernel1d(static_cast<size_t>(cfg.fw_window));
    {
        double norm2d = 0;
        for (int i = -radius; i <= radius; ++i)
            kernel1d[static_cast<size_t>(i + radius)] =
                std::exp(-0.5 * double(i) * i / (cfg.fw_sigma * cfg.fw_sigma));
        for (int i = -radius; i <= radius; ++i)
            for (int j = -radius; j <= radius; ++j)
                norm2d += kernel1d[static_cast<size_t>(i + radius)] * kernel1d[static_cast<size_t>(j + radius)];
        const double s = std::sqrt(norm2d);
        for (auto& v : kernel1d) v /= s;  // product of the two passes sums to 1
    }
    std::vector<double> tmp(static_cast<size_t>(n), 0.0), ea(static_cast<size_t>(n), 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0;
            for (int j = -radius; j <= radius; ++j) {
                const int cc = c + j;
                if (cc >= 0 && cc < w)
                    acc += kernel1d[static_cast<size_t>(j + radius)] * et[static_cast<size_t>(int64_t(r) * w + cc)];
            }
            tmp[static_cast<size_t>(int64_t(r) * w + c)] = acc;
        }
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i) {
                const int rr = r + i;
                if (rr >= 0 && rr < h)
                    acc += kernel1d[static_cast<size_t>(i + radius)] * tmp[static_cast<size_t>(int64_t(rr) * w + c)];
            }
            ea[static_cast<size_t>(int64_t(r) * w + c)] = acc;
        }

    const double decay = std::log(0.5) / cfg.fw_decay;
    double sum_ew_fg = 0, sum_ew_bg = 0;
    for (int64_t i = 0; i < n; ++i) {
        const size_t idx = static_cast<size_t>(i);
        if (fg[idx]) {
            sum_ew_fg += std::min(err[idx], ea[idx]);
        } else {
            const double dist = std::sqrt(double(nearest.dist2[idx]));
            const double b = 2.0 - std::exp(decay * dist);
            sum_ew_bg += err[idx] * b;
        }
    }

    const double tpw = double(nfg) - sum_ew_fg;
    const double fpw = sum_ew_bg;
    const double recall = tpw / (cfg.eps + double(nfg));
    const double precision = tpw / (cfg.eps + tpw + fpw);
    const double b2 = cfg.beta_squared;
    return (1.0 + b2) * precision * recall / (cfg.eps + b2 * precision + recall);
}

namespace {

struct RegionStats {
    double mean_x = 0, mean_y = 0, var_x = 0, var_y = 0, cov = 0;
    int64_t count = 0;
};

// SSIM-flavoured block score over one region of the prediction/ground truth.
double block_similarity(const Image& y, const Image& t, int r0, int r1, int c0, int c1, double eps) {
    RegionStats s;
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
            s.mean_x += y.at(r, c);
            s.mean_y += t.at(r, c);
            ++s.count;
        }
    if (s.count == 0) return 0.0;
    s.mean_x /= double(s.count);
    s.mean_y /= double(s.count);
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
            const double dx = y.at(r, c) - s.mean_x;
            const double dy = t.at(r, c) - s.mean_y;
            s.var_x += dx * dx;
            s.var_y += dy * dy;
            s.cov += dx * dy;
        }
    const double denom = double(s.count - 1) + eps;
    s.var_x /= denom;
    s.var_y /= denom;
    s.cov /= denom;

    const double a = 4.0 * s.mean_x * s.mean_y * s.cov;
    const double b = (s.mean_x * s.mean_x + s.mean_y * s.mean_y) * (s.var_x + s.var_y);
    if (a != 0.0) return a / (b + eps);
    return b == 0.0 ? 1.0 : 0.0;
}

double object_similarity(const Image& y, const Image& t, bool foreground, const MetricConfig& cfg) {
    // mean/dispersion of the (complemented, for background) prediction over
    // the region
    double sum = 0;
    int64_t count = 0;
    for (int r = 0; r < y.height; ++r)
        for (int c = 0; c < y.width; ++c)
            if ((t.at(r, c) == 1.0f) == foreground) {
                sum += foreground ? y.at(r, c) : 1.0 - y.at(r, c);
                ++count;
            }
    if (count == 0) return 0.0;
    const double mean = sum / double(count);
    double ss = 0;
    for (int r = 0; r < y.height; ++r)
        for (int c = 0; c < y.width; ++c)
            if ((t.at(r, c) == 1.0f) == foreground) {
                const double d = (foreground ? y.at(r, c) : 1.0 - y.at(r, c)) - mean;
                ss += d * d;
            }
    const double sd = std::sqrt(ss / (double(count - 1) + cfg.eps));
    return 2.0 * mean / (mean * mean + cfg.so_constant + sd + cfg.eps);
}

}  // namespace

double structure_measure(const Image& y, const Image& t, const MetricConfig& cfg) {
    cfg.validate();
    check_pair(y, t);
    const int h = y.height, w = y.width;

    int64_t nfg = 0;
    double mean_pred = 0;
    for (size_t i = 0; i < t.data.size(); ++i) {
        const float tv = t.data[i];
        if (tv != 0.0f && tv != 1.0f)
            throw DataError("structure_measure: ground truth must be binary");
        nfg += tv == 1.0f;
        mean_pred += y.data[i];
    }
    mean_pred /= double(t.data.size());

    // Degenerate ground truths: mean-based fallback.
    if (nfg == 0) return std::clamp(1.0 - mean_pred, 0.0, 1.0);
    if (nfg == int64_t(h) * w) return std::clamp(mean_pred, 0.0, 1.0);

    const double mu = double(nfg) / double(int64_t(h) * w);
    const double s_object = mu * object_similarity(y, t, true, cfg) +
                            (1.0 - mu) * object_similarity(y, t, false, cfg);

    // Region term: split both maps at the foreground centroid.
    double wr = 0, wc = 0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (t.at(r, c) == 1.0f) {
                wr += r;
                wc += c;
            }
    const int cy = static_cast<int>(std::lround(wr / double(nfg)));
    const int cx = static_cast<int>(std::lround(wc / double(nfg)));

    const int row_split = cy + 1;  // rows [0, split) and [split, h)
    const int col_split = cx + 1;
    const double total = double(int64_t(h) * w);
    double s_region = 0;
    const int bounds[4][4] = {{0, row_split, 0, col_split},
                              {0, row_split, col_split, w},
                              {row_split, h, 0, col_split},
                              {row_split, h, col_split, w}};
    for (const auto& b : bounds) {
        const int64_t count = int64_t(b[1] - b[0]) * (b[3] - b[2]);
        if (count <= 0) continue;
        const double weight = double(count) / total;
        s_region += weight * block_similarity(y, t, b[0], b[1], b[2], b[3], cfg.eps);
    }

    const double q = cfg.alpha * s_object + (1.0 - cfg.alpha) * s_region;
    return std::clamp(q, 0.0, 1.0);
}

void EvalReport::finalize() {
    double se = 0, sf = 0, sm = 0;
    int f_count = 0;
    f_excluded_count = 0;
    for (const auto& s : scenes) {
        se += s.e_ma;
        sm += s.m_s;
        if (s.f_defined) {
            sf += s.f_beta_w;
            ++f_count;
        } else {
            ++f_excluded_count;
        }
    }
    const int n = static_cast<int>(scenes.size());
    mean_e_ma = n ? se / n : 0.0;
    mean_m_s = n ? sm / n : 0.0;
    mean_f_beta_w = f_count ? sf / f_count : 0.0;
}

std::string EvalReport::to_table() const {
    std::ostringstream os;
    os << "scene              e_ma(v)   F_beta_w(^)   m_s(^)\n";
    char buf[160];
    for (const auto& s : scenes) {
        if (s.f_defined)
            std::snprintf(buf, sizeof(buf), "%-18s %8.4f   %11.4f   %6.4f\n", s.scene_id.c_str(),
                          s.e_ma, s.f_beta_w, s.m_s);
        else
            std::snprintf(buf, sizeof(buf), "%-18s %8.4f   %11s   %6.4f\n", s.scene_id.c_str(),
                          s.e_ma, "n/a", s.m_s);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%-18s %8.4f   %11.4f   %6.4f\n", "mean", mean_e_ma,
                  mean_f_beta_w, mean_m_s);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "constants: beta^2=%g alpha=%g sigma=%g window=%d decay=%g so_offset=%g eps=%g\n",
                  config_echo.beta_squared, config_echo.alpha, config_echo.fw_sigma,
                  config_echo.fw_window, config_echo.fw_decay, config_echo.so_constant,
                  config_echo.eps);
    os << buf;
    return os.str();
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["constants"] = {{"beta_squared", config_echo.beta_squared},
                      {"alpha", config_echo.alpha},
                      {"fw_sigma", config_echo.fw_sigma},
                      {"fw_window", config_echo.fw_window},
                      {"fw_decay", config_echo.fw_decay},
                      {"so_constant", config_echo.so_constant},
                      {"eps", config_echo.eps}};
    j["scenes"] = nlohmann::json::array();
    for (const auto& s : scenes) {
        nlohmann::json e = {{"scene_id", s.scene_id},
                            {"e_ma", s.e_ma},
                            {"m_s", s.m_s},
                            {"f_defined", s.f_defined}};
        if (s.f_defined) e["f_beta_w"] = s.f_beta_w;
        j["scenes"].push_back(e);
    }
    j["mean"] = {{"e_ma", mean_e_ma}, {"f_beta_w", mean_f_beta_w}, {"m_s", mean_m_s}};
    j["scene_count"] = scenes.size();
    j["f_excluded_count"] = f_excluded_count;
    return j.dump(2);
}

SceneMetrics compute_scene_metrics(const Image& stitched_prediction, const LabelMask& label,
                                   const MetricConfig& cfg) {
    SceneMetrics m;
    m.scene_id = label.scene_id;
    m.e_ma = mean_absolute_error(stitched_prediction, label.labels);
    m.m_s = structure_measure(stitched_prediction, label.labels, cfg);
    try {
        m.f_beta_w = weighted_fbeta(stitched_prediction, label.labels, cfg);
        m.f_defined = true;
    } catch (const UndefinedMetricError&) {
        m.f_beta_w = 0.0;
        m.f_defined = false;
    }
    return m;
}

SceneMetrics evaluate_scene(const std::vector<Image>& prediction_tiles, const LabelMask& label,
                            const TileGrid& grid, const MetricConfig& cfg) {
    Image stitched = stitch_tiles(prediction_tiles, grid);
    if (stitched.channels != 1)
        throw ShapeError("evaluate_scene: prediction tiles must be single-channel probability maps");
    return compute_scene_metrics(stitched, label, cfg);
}

}  // namespace hrcloud

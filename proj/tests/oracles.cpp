#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace hrcloud::oracle {

double mae(const Image& y, const Image& t) {
    double acc = 0;
    for (size_t i = 0; i < y.data.size(); ++i) acc += std::abs(double(y.data[i]) - double(t.data[i]));
    return acc / double(y.data.size());
}

double weighted_fbeta(const Image& y, const Image& t, const MetricConfig& cfg) {
    const int h = y.height, w = y.width;
    std::vector<std::pair<int, int>> fg;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (t.at(r, c) == 1.0f) fg.emplace_back(r, c);
    if (fg.empty()) throw UndefinedMetricError("empty foreground");

    auto err = [&](int r, int c) { return std::abs(double(y.at(r, c)) - double(t.at(r, c))); };

    // nearest foreground by (squared distance, column, row)
    auto nearest = [&](int r, int c) {
        int64_t best_d2 = INT64_MAX;
        int best_row = -1, best_col = -1;
        for (const auto& [fr, fc] : fg) {
            const int64_t d2 = int64_t(r - fr) * (r - fr) + int64_t(c - fc) * (c - fc);
            if (d2 < best_d2 || (d2 == best_d2 && (fc < best_col || (fc == best_col && fr < best_row)))) {
                best_d2 = d2;
                best_row = fr;
                best_col = fc;
            }
        }
        return std::tuple<int64_t, int, int>(best_d2, best_row, best_col);
    };

    // substituted error field: background entries take their nearest
    // foreground pixel's error
    std::vector<double> et(static_cast<size_t>(h) * w);
    std::vector<double> dist(static_cast<size_t>(h) * w, 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const size_t i = static_cast<size_t>(r) * w + c;
            if (t.at(r, c) == 1.0f) {
                et[i] = err(r, c);
            } else {
                auto [d2, fr, fc] = nearest(r, c);
                et[i] = err(fr, fc);
                dist[i] = std::sqrt(double(d2));
            }
        }

    // truncated 2-d Gaussian, normalized, zero-padded correlation
    const int radius = cfg.fw_window / 2;
    std::vector<double> kernel(static_cast<size_t>(cfg.fw_window) * cfg.fw_window);
    double ksum = 0;
    for (int i = -radius; i <= radius; ++i)
        for (int j = -radius; j <= radius; ++j) {
            const double v = std::exp(-0.5 * (i * i + j * j) / (cfg.fw_sigma * cfg.fw_sigma));
            kernel[static_cast<size_t>(i + radius) * cfg.fw_window + (j + radius)] = v;
            ksum += v;
        }
    for (auto& v : kernel) v /= ksum;

    double sum_fg = 0, sum_bg = 0;
    int64_t nfg = 0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const size_t i = static_cast<size_t>(r) * w + c;
            if (t.at(r, c) == 1.0f) {
                double ea = 0;
                for (int di = -radius; di <= radius; ++di)
                    for (int dj = -radius; dj <= radius; ++dj) {
                        const int rr = r + di, cc = c + dj;
                        if (rr >= 0 && rr < h && cc >= 0 && cc < w)
                            ea += kernel[static_cast<size_t>(di + radius) * cfg.fw_window + (dj + radius)] *
                                  et[static_cast<size_t>(rr) * w + cc];
                    }
                sum_fg += std::min(err(r, c), ea);
                ++nfg;
            } else {
                const double b = 2.0 - std::exp(std::log(0.5) / cfg.fw_decay * dist[i]);
                sum_bg += err(r, c) * b;
            }
        }

    const double tpw = double(nfg) - sum_fg;
    const double recall = tpw / (cfg.eps + double(nfg));
    const double precision = tpw / (cfg.eps + tpw + sum_bg);
    return (1.0 + cfg.beta_squared) * precision * recall /
           (cfg.eps + cfg.beta_squared * precision + recall);
}

namespace {

double region_mean(const std::vector<double>& v) {
    if (v.empty()) return 0;
    double s = 0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double ssim_block(const std::vector<double>& x, const std::vector<double>& yv, double eps) {
    const double mx = region_mean(x), my = region_mean(yv);
    double vx = 0, vy = 0, cxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (yv[i] - my) * (yv[i] - my);
        cxy += (x[i] - mx) * (yv[i] - my);
    }
    const double denom = double(x.size()) - 1.0 + eps;
    vx /= denom;
    vy /= denom;
    cxy /= denom;
    const double a = 4.0 * mx * my * cxy;
    const double b = (mx * mx + my * my) * (vx + vy);
    if (a != 0.0) return a / (b + eps);
    return b == 0.0 ? 1.0 : 0.0;
}

}  // namespace

double structure_measure(const Image& y, const Image& t, const MetricConfig& cfg) {
    const int h = y.height, w = y.width;
    int64_t nfg = 0;
    double mean_pred = 0;
    for (size_t i = 0; i < t.data.size(); ++i) {
        nfg += t.data[i] == 1.0f;
        mean_pred += y.data[i];
    }
    mean_pred /= double(t.data.size());
    if (nfg == 0) return std::clamp(1.0 - mean_pred, 0.0, 1.0);
    if (nfg == int64_t(h) * w) return std::clamp(mean_pred, 0.0, 1.0);

    // object term
    auto object_score = [&](bool foreground) {
        std::vector<double> vals;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                if ((t.at(r, c) == 1.0f) == foreground)
                    vals.push_back(foreground ? double(y.at(r, c)) : 1.0 - double(y.at(r, c)));
        if (vals.empty()) return 0.0;
        const double m = region_mean(vals);
        double ss = 0;
        for (double v : vals) ss += (v - m) * (v - m);
        const double sd = std::sqrt(ss / (double(vals.size()) - 1.0 + cfg.eps));
        return 2.0 * m / (m * m + cfg.so_constant + sd + cfg.eps);
    };
    const double mu = double(nfg) / double(int64_t(h) * w);
    const double s_o = mu * object_score(true) + (1.0 - mu) * object_score(false);

    // region term: centroid split, per-block similarity weighted by share
    double wr = 0, wc = 0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (t.at(r, c) == 1.0f) {
                wr += r;
                wc += c;
            }
    const int cy = static_cast<int>(std::lround(wr / double(nfg)));
    const int cx = static_cast<int>(std::lround(wc / double(nfg)));
    double s_r = 0;
    const int splits[4][4] = {{0, cy + 1, 0, cx + 1},
                              {0, cy + 1, cx + 1, w},
                              {cy + 1, h, 0, cx + 1},
                              {cy + 1, h, cx + 1, w}};
    for (const auto& b : splits) {
        std::vector<double> px, pt;
        for (int r = b[0]; r < b[1]; ++r)
            for (int c = b[2]; c < b[3]; ++c) {
                px.push_back(y.at(r, c));
                pt.push_back(t.at(r, c));
            }
        if (px.empty()) continue;
        s_r += (double(px.size()) / double(int64_t(h) * w)) * ssim_block(px, pt, cfg.eps);
    }
    return std::clamp(cfg.alpha * s_o + (1.0 - cfg.alpha) * s_r, 0.0, 1.0);
}

double cross_entropy(const Tensor& y, const Tensor& t, const Tensor* mask, double clamp, bool mean) {
    double acc = 0;
    for (int64_t i = 0; i < y.numel(); ++i) {
        const double m = mask ? (*mask)[i] : 1.0;
        acc -= m * t[i] * std::log(std::max(y[i], clamp));
    }
    if (mean) {
        const int64_t pixels = y.numel() / y.dim(1);
        acc /= double(pixels);
    }
    return acc;
}

}  // namespace hrcloud::oracle

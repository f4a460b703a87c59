#include "hrcloud/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace hrcloud {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;

int conv_out_size(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

// Unpacks one sample's receptive fields into a (Cin*k*k) x (Ho*Wo) matrix.
void im2col(const double* x, int cin, int h, int w, int k, int stride, int pad, int ho, int wo,
            double* col) {
    const int64_t plane = int64_t(h) * w;
    const int64_t ocols = int64_t(ho) * wo;
    for (int c = 0; c < cin; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                double* row = col + (int64_t(c) * k * k + ki * k + kj) * ocols;
                const double* src = x + c * plane;
                for (int oh = 0; oh < ho; ++oh) {
                    int ih = oh * stride - pad + ki;
                    double* out = row + int64_t(oh) * wo;
                    if (ih < 0 || ih >= h) {
                        std::fill(out, out + wo, 0.0);
                        continue;
                    }
                    const double* srow = src + int64_t(ih) * w;
                    for (int ow = 0; ow < wo; ++ow) {
                        int iw = ow * stride - pad + kj;
                        out[ow] = (iw >= 0 && iw < w) ? srow[iw] : 0.0;
                    }
                }
            }
        }
    }
}

// Scatter-adds a column-matrix gradient back onto the input plane.
void col2im_accumulate(const double* col, int cin, int h, int w, int k, int stride, int pad, int ho,
                       int wo, double* dx) {
    const int64_t plane = int64_t(h) * w;
    const int64_t ocols = int64_t(ho) * wo;
    for (int c = 0; c < cin; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                const double* row = col + (int64_t(c) * k * k + ki * k + kj) * ocols;
                double* dst = dx + c * plane;
                for (int oh = 0; oh < ho; ++oh) {
                    int ih = oh * stride - pad + ki;
                    if (ih < 0 || ih >= h) continue;
                    double* drow = dst + int64_t(ih) * w;
                    const double* srow = row + int64_t(oh) * wo;
                    for (int ow = 0; ow < wo; ++ow) {
                        int iw = ow * stride - pad + kj;
                        if (iw >= 0 && iw < w) drow[iw] += srow[ow];
                    }
                }
            }
        }
    }
}

struct ResizeTaps {
    std::vector<int> lo, hi;
    std::vector<double> frac;
};

ResizeTaps make_taps(int in, int out) {
    ResizeTaps t;
    t.lo.resize(out);
    t.hi.resize(out);
    t.frac.resize(out);
    const double scale = double(in) / double(out);
    for (int i = 0; i < out; ++i) {
        double src = (i + 0.5) * scale - 0.5;
        if (src < 0) src = 0;
        int lo = std::min(static_cast<int>(src), in - 1);
        t.lo[i] = lo;
        t.hi[i] = std::min(lo + 1, in - 1);
        t.frac[i] = src - lo;
    }
    return t;
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int padding) {
    const Tensor& xv = x->value;
    const Tensor& wv = weight->value;
    check_shape(xv.rank() == 4, "conv2d: input must be NCHW, got " + xv.shape_str());
    check_shape(wv.rank() == 4 && wv.dim(2) == wv.dim(3),
                "conv2d: weight must be (Cout,Cin,k,k), got " + wv.shape_str());
    check_shape(xv.dim(1) == wv.dim(1), "conv2d: channel mismatch, input " + xv.shape_str() +
                                            " vs weight " + wv.shape_str());
    const int n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    const int cout = wv.dim(0), k = wv.dim(2);
    const int ho = conv_out_size(h, k, stride, padding);
    const int wo = conv_out_size(w, k, stride, padding);
    check_shape(ho >= 1 && wo >= 1, "conv2d: output would be empty for input " + xv.shape_str());
    if (bias) check_shape(bias->value.numel() == cout, "conv2d: bias size mismatch");

    const int64_t krows = int64_t(cin) * k * k;
    const int64_t ocols = int64_t(ho) * wo;

    Tensor y({n, cout, ho, wo});
    std::vector<double> col(static_cast<size_t>(krows * ocols));
    MapCM wm(wv.data(), cout, krows);
    for (int i = 0; i < n; ++i) {
        im2col(xv.data() + int64_t(i) * cin * h * w, cin, h, w, k, stride, padding, ho, wo, col.data());
        MapCM cm(col.data(), krows, ocols);
        MapM ym(y.data() + int64_t(i) * cout * ocols, cout, ocols);
        ym.noalias() = wm * cm;
    }
    if (bias) {
        const double* b = bias->value.data();
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < cout; ++c) {
                double* row = y.data() + (int64_t(i) * cout + c) * ocols;
                for (int64_t p = 0; p < ocols; ++p) row[p] += b[c];
            }
    }

    std::vector<Var> parents = bias ? std::vector<Var>{x, weight, bias} : std::vector<Var>{x, weight};
    auto fn = [stride, padding, n, cin, h, w, cout, k, ho, wo, krows, ocols](Node& node) {
        Var xp = node.parents[0];
        Var wp = node.parents[1];
        Var bp = node.parents.size() > 2 ? node.parents[2] : nullptr;
        const double* dy = node.grad.data();

        if (bp && bp->requires_grad) {
            bp->ensure_grad();
            double* db = bp->grad.data();
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < cout; ++c) {
                    const double* row = dy + (int64_t(i) * cout + c) * ocols;
                    double s = 0;
                    for (int64_t p = 0; p < ocols; ++p) s += row[p];
                    db[c] += s;
                }
        }

        std::vector<double> col(static_cast<size_t>(krows * ocols));
        if (wp->requires_grad) {
            wp->ensure_grad();
            MapM dwm(wp->grad.data(), cout, krows);
            for (int i = 0; i < n; ++i) {
                im2col(xp->value.data() + int64_t(i) * cin * h * w, cin, h, w, k, stride, padding, ho,
                       wo, col.data());
                MapCM cm(col.data(), krows, ocols);
                MapCM dym(dy + int64_t(i) * cout * ocols, cout, ocols);
                dwm.noalias() += dym * cm.transpose();
            }
        }
        if (xp->requires_grad) {
            xp->ensure_grad();
            MapCM wm(wp->value.data(), cout, krows);
            for (int i = 0; i < n; ++i) {
                MapCM dym(dy + int64_t(i) * cout * ocols, cout, ocols);
                MapM cm(col.data(), krows, ocols);
                cm.noalias() = wm.transpose() * dym;
                col2im_accumulate(col.data(), cin, h, w, k, stride, padding, ho, wo,
                                  xp->grad.data() + int64_t(i) * cin * h * w);
            }
        }
    };
    return make_op(std::move(y), std::move(parents), std::move(fn));
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta, Var& running_mean, Var& running_var,
               const BnMode& mode) {
    const Tensor& xv = x->value;
    check_shape(xv.rank() == 4, "batch_norm: input must be NCHW");
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    check_shape(gamma->value.numel() == c && beta->value.numel() == c,
                "batch_norm: affine parameter size mismatch");
    check_shape(running_mean->value.numel() == c && running_var->value.numel() == c,
                "batch_norm: running statistic size mismatch");
    const int64_t m = int64_t(n) * h * w;
    const int64_t plane = int64_t(h) * w;

    std::vector<double> mean(c), inv_std(c);
    if (mode.training) {
        for (int ch = 0; ch < c; ++ch) {
            double s = 0, s2 = 0;
            for (int i = 0; i < n; ++i) {
                const double* p = xv.data() + (int64_t(i) * c + ch) * plane;
                for (int64_t q = 0; q < plane; ++q) {
                    s += p[q];
                    s2 += p[q] * p[q];
                }
            }
            double mu = s / double(m);
            double var = s2 / double(m) - mu * mu;
            if (var < 0) var = 0;  // numeric guard
            mean[ch] = mu;
            inv_std[ch] = 1.0 / std::sqrt(var + mode.epsilon);
            if (mode.update_running) {
                double* rm = running_mean->value.data();
                double* rv = running_var->value.data();
                rm[ch] = (1.0 - mode.momentum) * rm[ch] + mode.momentum * mu;
                rv[ch] = (1.0 - mode.momentum) * rv[ch] + mode.momentum * var;
            }
        }
    } else {
        const double* rm = running_mean->value.data();
        const double* rv = running_var->value.data();
        for (int ch = 0; ch < c; ++ch) {
            mean[ch] = rm[ch];
            inv_std[ch] = 1.0 / std::sqrt(rv[ch] + mode.epsilon);
        }
    }

    Tensor y(xv.shape());
    const double* g = gamma->value.data();
    const double* b = beta->value.data();
    for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch) {
            const double* src = xv.data() + (int64_t(i) * c + ch) * plane;
            double* dst = y.data() + (int64_t(i) * c + ch) * plane;
            const double mu = mean[ch], is = inv_std[ch], gg = g[ch], bb = b[ch];
            for (int64_t q = 0; q < plane; ++q) dst[q] = gg * (src[q] - mu) * is + bb;
        }

    bool training = mode.training;
    auto fn = [n, c, plane, m, mean, inv_std, training](Node& node) {
        Var xp = node.parents[0];
        Var gp = node.parents[1];
        Var bp = node.parents[2];
        const double* dy = node.grad.data();
        const double* xd = xp->value.data();
        const double* g = gp->value.data();

        for (int ch = 0; ch < c; ++ch) {
            const double mu = mean[ch], is = inv_std[ch];
            double sum_dy = 0, sum_dy_xhat = 0;
            for (int i = 0; i < n; ++i) {
                const double* dyp = dy + (int64_t(i) * c + ch) * plane;
                const double* xdp = xd + (int64_t(i) * c + ch) * plane;
                for (int64_t q = 0; q < plane; ++q) {
                    sum_dy += dyp[q];
                    sum_dy_xhat += dyp[q] * (xdp[q] - mu) * is;
                }
            }
            if (gp->requires_grad) {
                gp->ensure_grad();
                gp->grad[ch] += sum_dy_xhat;
            }
            if (bp->requires_grad) {
                bp->ensure_grad();
                bp->grad[ch] += sum_dy;
            }
            if (xp->requires_grad) {
                xp->ensure_grad();
                const double gg = g[ch];
                if (training) {
                    const double inv_m = 1.0 / double(m);
                    for (int i = 0; i < n; ++i) {
                        const double* dyp = dy + (int64_t(i) * c + ch) * plane;
                        const double* xdp = xd + (int64_t(i) * c + ch) * plane;
                        double* dxp = xp->grad.data() + (int64_t(i) * c + ch) * plane;
                        for (int64_t q = 0; q < plane; ++q) {
                            double xhat = (xdp[q] - mu) * is;
                            dxp[q] += gg * is * (dyp[q] - inv_m * sum_dy - xhat * inv_m * sum_dy_xhat);
                        }
                    }
                } else {
                    for (int i = 0; i < n; ++i) {
                        const double* dyp = dy + (int64_t(i) * c + ch) * plane;
                        double* dxp = xp->grad.data() + (int64_t(i) * c + ch) * plane;
                        for (int64_t q = 0; q < plane; ++q) dxp[q] += gg * is * dyp[q];
                    }
                }
            }
        }
    };
    return make_op(std::move(y), {x, gamma, beta}, std::move(fn));
}

Var relu(const Var& x) {
    Tensor y(x->value.shape());
    const double* src = x->value.data();
    double* dst = y.data();
    const int64_t n = y.numel();
    for (int64_t i = 0; i < n; ++i) dst[i] = src[i] > 0 ? src[i] : 0.0;
    auto fn = [n](Node& node) {
        Var xp = node.parents[0];
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        const double* dy = node.grad.data();
        const double* xd = xp->value.data();
        double* dx = xp->grad.data();
        for (int64_t i = 0; i < n; ++i)
            if (xd[i] > 0) dx[i] += dy[i];
    };
    return make_op(std::move(y), {x}, std::move(fn));
}

Var add(const Var& a, const Var& b) { return sum_all({a, b}); }

Var sum_all(const std::vector<Var>& xs) {
    check_shape(!xs.empty(), "sum_all: empty operand list");
    for (const auto& v : xs)
        check_shape(v->value.same_shape(xs[0]->value), "sum_all: operand shape mismatch " +
                                                           v->value.shape_str() + " vs " +
                                                           xs[0]->value.shape_str());
    Tensor y(xs[0]->value.shape());
    const int64_t n = y.numel();
    double* dst = y.data();
    for (const auto& v : xs) {
        const double* src = v->value.data();
        for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
    }
    auto fn = [n](Node& node) {
        const double* dy = node.grad.data();
        for (auto& p : node.parents) {
            if (!p->requires_grad) continue;
            p->ensure_grad();
            double* dx = p->grad.data();
            for (int64_t i = 0; i < n; ++i) dx[i] += dy[i];
        }
    };
    return make_op(std::move(y), xs, std::move(fn));
}

Var concat_channels(const std::vector<Var>& xs) {
    check_shape(!xs.empty(), "concat_channels: empty operand list");
    const Tensor& first = xs[0]->value;
    check_shape(first.rank() == 4, "concat_channels: operands must be NCHW");
    const int n = first.dim(0), h = first.dim(2), w = first.dim(3);
    int ctot = 0;
    for (const auto& v : xs) {
        check_shape(v->value.rank() == 4 && v->value.dim(0) == n && v->value.dim(2) == h &&
                        v->value.dim(3) == w,
                    "concat_channels: spatial/batch mismatch " + v->value.shape_str());
        ctot += v->value.dim(1);
    }
    const int64_t plane = int64_t(h) * w;
    Tensor y({n, ctot, h, w});
    std::vector<int> offsets;
    int off = 0;
    for (const auto& v : xs) {
        offsets.push_back(off);
        const int ci = v->value.dim(1);
        for (int i = 0; i < n; ++i)
            std::copy(v->value.data() + int64_t(i) * ci * plane,
                      v->value.data() + int64_t(i + 1) * ci * plane,
                      y.data() + (int64_t(i) * ctot + off) * plane);
        off += ci;
    }
    auto fn = [n, ctot, plane, offsets](Node& node) {
        const double* dy = node.grad.data();
        for (size_t k = 0; k < node.parents.size(); ++k) {
            Var p = node.parents[k];
            if (!p->requires_grad) continue;
            p->ensure_grad();
            const int ci = p->value.dim(1);
            for (int i = 0; i < n; ++i) {
                const double* src = dy + (int64_t(i) * ctot + offsets[k]) * plane;
                double* dst = p->grad.data() + int64_t(i) * ci * plane;
                for (int64_t q = 0; q < int64_t(ci) * plane; ++q) dst[q] += src[q];
            }
        }
    };
    return make_op(std::move(y), xs, std::move(fn));
}

Var bilinear_resize(const Var& x, int out_h, int out_w) {
    const Tensor& xv = x->value;
    check_shape(xv.rank() == 4, "bilinear_resize: input must be NCHW");
    check_shape(out_h >= 1 && out_w >= 1, "bilinear_resize: non-positive output size");
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    ResizeTaps ty = make_taps(h, out_h);
    ResizeTaps tx = make_taps(w, out_w);

    Tensor y({n, c, out_h, out_w});
    for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch) {
            const double* src = xv.data() + (int64_t(i) * c + ch) * h * w;
            double* dst = y.data() + (int64_t(i) * c + ch) * out_h * out_w;
            for (int oy = 0; oy < out_h; ++oy) {
                const double fy = ty.frac[oy];
                const double* r0 = src + int64_t(ty.lo[oy]) * w;
                const double* r1 = src + int64_t(ty.hi[oy]) * w;
                double* orow = dst + int64_t(oy) * out_w;
                for (int ox = 0; ox < out_w; ++ox) {
                    const double fx = tx.frac[ox];
                    const int x0 = tx.lo[ox], x1 = tx.hi[ox];
                    orow[ox] = (1 - fy) * ((1 - fx) * r0[x0] + fx * r0[x1]) +
                               fy * ((1 - fx) * r1[x0] + fx * r1[x1]);
                }
            }
        }

    auto fn = [n, c, h, w, out_h, out_w, ty, tx](Node& node) {
        Var xp = node.parents[0];
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        const double* dy = node.grad.data();
        for (int i = 0; i < n; ++i)
            for (int ch = 0; ch < c; ++ch) {
                double* dx = xp->grad.data() + (int64_t(i) * c + ch) * h * w;
                const double* src = dy + (int64_t(i) * c + ch) * out_h * out_w;
                for (int oy = 0; oy < out_h; ++oy) {
                    const double fy = ty.frac[oy];
                    double* r0 = dx + int64_t(ty.lo[oy]) * w;
                    double* r1 = dx + int64_t(ty.hi[oy]) * w;
                    const double* srow = src + int64_t(oy) * out_w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const double g = srow[ox];
                        const double fx = tx.frac[ox];
                        const int x0 = tx.lo[ox], x1 = tx.hi[ox];
                        r0[x0] += (1 - fy) * (1 - fx) * g;
                        r0[x1] += (1 - fy) * fx * g;
                        r1[x0] += fy * (1 - fx) * g;
                        r1[x1] += fy * fx * g;
                    }
                }
            }
    };
    return make_op(std::move(y), {x}, std::move(fn));
}

Var adaptive_avg_pool(const Var& x, int bins_h, int bins_w) {
    const Tensor& xv = x->value;
    check_shape(xv.rank() == 4, "adaptive_avg_pool: input must be NCHW");
    check_shape(bins_h >= 1 && bins_w >= 1, "adaptive_avg_pool: non-positive bin count");
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);

    auto lo = [](int i, int in, int bins) { return (i * in) / bins; };
    auto hi = [](int i, int in, int bins) { return ((i + 1) * in + bins - 1) / bins; };

    Tensor y({n, c, bins_h, bins_w});
    for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch) {
            const double* src = xv.data() + (int64_t(i) * c + ch) * h * w;
            double* dst = y.data() + (int64_t(i) * c + ch) * bins_h * bins_w;
            for (int by = 0; by < bins_h; ++by) {
                int r0 = lo(by, h, bins_h), r1 = hi(by, h, bins_h);
                for (int bx = 0; bx < bins_w; ++bx) {
                    int c0 = lo(bx, w, bins_w), c1 = hi(bx, w, bins_w);
                    double s = 0;
                    for (int r = r0; r < r1; ++r)
                        for (int q = c0; q < c1; ++q) s += src[int64_t(r) * w + q];
                    dst[int64_t(by) * bins_w + bx] = s / double((r1 - r0) * (c1 - c0));
                }
            }
        }

    auto fn = [n, c, h, w, bins_h, bins_w, lo, hi](Node& node) {
        Var xp = node.parents[0];
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        const double* dy = node.grad.data();
        for (int i = 0; i < n; ++i)
            for (int ch = 0; ch < c; ++ch) {
                double* dx = xp->grad.data() + (int64_t(i) * c + ch) * h * w;
                const double* src = dy + (int64_t(i) * c + ch) * bins_h * bins_w;
                for (int by = 0; by < bins_h; ++by) {
                    int r0 = lo(by, h, bins_h), r1 = hi(by, h, bins_h);
                    for (int bx = 0; bx < bins_w; ++bx) {
                        int c0 = lo(bx, w, bins_w), c1 = hi(bx, w, bins_w);
                        double g = src[int64_t(by) * bins_w + bx] / double((r1 - r0) * (c1 - c0));
                        for (int r = r0; r < r1; ++r)
                            for (int q = c0; q < c1; ++q) dx[int64_t(r) * w + q] += g;
                    }
                }
            }
    };
    return make_op(std::move(y), {x}, std::move(fn));
}

Var softmax_channels(const Var& x) {
    const Tensor& xv = x->value;
    check_shape(xv.rank() == 4, "softmax_channels: input must be NCHW");
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    const int64_t plane = int64_t(h) * w;

    Tensor y(xv.shape());
    for (int i = 0; i < n; ++i) {
        const double* src = xv.data() + int64_t(i) * c * plane;
        double* dst = y.data() + int64_t(i) * c * plane;
        for (int64_t q = 0; q < plane; ++q) {
            double m = src[q];
            for (int ch = 1; ch < c; ++ch) m = std::max(m, src[ch * plane + q]);
            double z = 0;
            for (int ch = 0; ch < c; ++ch) {
                double e = std::exp(src[ch * plane + q] - m);
                dst[ch * plane + q] = e;
                z += e;
            }
            for (int ch = 0; ch < c; ++ch) dst[ch * plane + q] /= z;
        }
    }

    auto fn = [n, c, plane](Node& node) {
        Var xp = node.parents[0];
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        const double* dy = node.grad.data();
        const double* yv = node.value.data();
        for (int i = 0; i < n; ++i) {
            const double* dyp = dy + int64_t(i) * c * plane;
            const double* yp = yv + int64_t(i) * c * plane;
            double* dxp = xp->grad.data() + int64_t(i) * c * plane;
            for (int64_t q = 0; q < plane; ++q) {
                double dot = 0;
                for (int ch = 0; ch < c; ++ch) dot += dyp[ch * plane + q] * yp[ch * plane + q];
                for (int ch = 0; ch < c; ++ch)
                    dxp[ch * plane + q] += yp[ch * plane + q] * (dyp[ch * plane + q] - dot);
            }
        }
    };
    return make_op(std::move(y), {x}, std::move(fn));
}

Var scalar_affine(const Var& a, const Var& b, double ca, double cb) {
    check_shape(a->value.numel() == 1 && b->value.numel() == 1, "scalar_affine: operands must be scalars");
    Tensor y = Tensor::scalar(ca * a->value[0] + cb * b->value[0]);
    auto fn = [ca, cb](Node& node) {
        const double g = node.grad[0];
        if (node.parents[0]->requires_grad) {
            node.parents[0]->ensure_grad();
            node.parents[0]->grad[0] += ca * g;
        }
        if (node.parents[1]->requires_grad) {
            node.parents[1]->ensure_grad();
            node.parents[1]->grad[0] += cb * g;
        }
    };
    return make_op(std::move(y), {a, b}, std::move(fn));
}

namespace {

Var weighted_ce(const Var& y, const Tensor& target, const Tensor* mask, const CeOptions& opt) {
    const Tensor& yv = y->value;
    check_shape(yv.rank() == 4, "cross_entropy: y must be NCHW");
    check_shape(yv.same_shape(target), "cross_entropy: target shape " + shape_to_string(target.shape()) +
                                           " does not match prediction " + yv.shape_str());
    if (mask)
        check_shape(yv.same_shape(*mask), "cross_entropy: mask shape " +
                                              shape_to_string(mask->shape()) +
                                              " does not match prediction " + yv.shape_str());
    const int n = yv.dim(0), h = yv.dim(2), w = yv.dim(3);
    const double denom = opt.mean_reduction ? double(int64_t(n) * h * w) : 1.0;
    const double clamp = opt.log_clamp;

    const int64_t total = yv.numel();
    const double* yd = yv.data();
    const double* td = target.data();
    const double* md = mask ? mask->data() : nullptr;
    double acc = 0;
    for (int64_t i = 0; i < total; ++i) {
        double wgt = td[i] * (md ? md[i] : 1.0);
        if (wgt != 0.0) acc -= wgt * std::log(std::max(yd[i], clamp));
    }
    Tensor out = Tensor::scalar(acc / denom);

    Tensor tcopy = target;
    Tensor mcopy = mask ? *mask : Tensor();
    bool has_mask = mask != nullptr;
    auto fn = [tcopy = std::move(tcopy), mcopy = std::move(mcopy), has_mask, denom, clamp,
               total](Node& node) {
        Var yp = node.parents[0];
        if (!yp->requires_grad) return;
        yp->ensure_grad();
        const double g = node.grad[0] / denom;
        const double* yd = yp->value.data();
        const double* td = tcopy.data();
        const double* md = has_mask ? mcopy.data() : nullptr;
        double* dy = yp->grad.data();
        for (int64_t i = 0; i < total; ++i) {
            double wgt = td[i] * (md ? md[i] : 1.0);
            // clamped entries contribute a constant, so no gradient there
            if (wgt != 0.0 && yd[i] > clamp) dy[i] -= g * wgt / yd[i];
        }
    };
    return make_op(std::move(out), {y}, std::move(fn));
}

}  // namespace

Var cross_entropy_from_probs(const Var& y, const Tensor& target, const CeOptions& opt) {
    return weighted_ce(y, target, nullptr, opt);
}

Var masked_cross_entropy_from_probs(const Var& y, const Tensor& target, const Tensor& mask,
                                    const CeOptions& opt) {
    return weighted_ce(y, target, &mask, opt);
}

}  // namespace hrcloud

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bhflow/errors.hpp"
#include "bhflow/grid.hpp"
#include "bhflow/rng.hpp"

namespace bhflow {

// NCHW tensor. T is float for training/inference, double for the
// finite-difference gradient checks.
template <class T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

    size_t plane(int ni, int ci) const {
        return (static_cast<size_t>(ni) * c + ci) * static_cast<size_t>(h) * w;
    }
    T& at(int ni, int ci, int r, int col) { return v[plane(ni, ci) + static_cast<size_t>(r) * w + col]; }
    const T& at(int ni, int ci, int r, int col) const {
        return v[plane(ni, ci) + static_cast<size_t>(r) * w + col];
    }
    size_t size() const { return v.size(); }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

template <class T>
struct ParamRef {
    std::string name;
    std::vector<T>* value;
    std::vector<T>* grad;
};

// --- layers ---

template <class T>
struct Conv2d {
    int in_c, out_c, k, pad;
    std::vector<T> weight, wgrad;  // [out_c][in_c][k][k]
    std::vector<T> bias, bgrad;    // [out_c]
    Tensor<T> x_cache;

    Conv2d(int in_c_, int out_c_, int k_)
        : in_c(in_c_), out_c(out_c_), k(k_), pad(k_ / 2),
          weight(static_cast<size_t>(out_c_) * in_c_ * k_ * k_),
          wgrad(weight.size()),
          bias(static_cast<size_t>(out_c_)),
          bgrad(bias.size()) {}

    void init(GaussianRng& rng) {
        double fan_in = static_cast<double>(in_c) * k * k;
        double std_dev = std::sqrt(2.0 / fan_in);
        for (T& x : weight) x = static_cast<T>(std_dev * rng.normal());
        for (T& x : bias) x = T(0);
    }

    T wget(int oc, int ic, int di, int dj) const {
        return weight[((static_cast<size_t>(oc) * in_c + ic) * k + di) * k + dj];
    }

    Tensor<T> forward(const Tensor<T>& x) {
        x_cache = x;
        Tensor<T> y(x.n, out_c, x.h, x.w);
        for (int ni = 0; ni < x.n; ++ni)
            for (int oc = 0; oc < out_c; ++oc) {
                T* yp = &y.at(ni, oc, 0, 0);
                T b = bias[static_cast<size_t>(oc)];
                for (size_t i = 0; i < static_cast<size_t>(x.h) * x.w; ++i) yp[i] = b;
                for (int ic = 0; ic < in_c; ++ic)
                    for (int di = 0; di < k; ++di)
                        for (int dj = 0; dj < k; ++dj) {
                            T wv = wget(oc, ic, di, dj);
                            for (int r = 0; r < x.h; ++r) {
                                int sr = r + di - pad;
                                if (sr < 0 || sr >= x.h) continue;
                                const T* xp = &x.at(ni, ic, sr, 0);
                                T* yr = yp + static_cast<size_t>(r) * x.w;
                                int c0 = std::max(0, pad - dj);
                                int c1 = x.w - std::max(0, dj - pad);
                                for (int col = c0; col < c1; ++col)
                                    yr[col] += wv * xp[col + dj - pad];
                            }
                        }
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const Tensor<T>& x = x_cache;
        Tensor<T> dx(x.n, in_c, x.h, x.w);
        for (int ni = 0; ni < x.n; ++ni)
            for (int oc = 0; oc < out_c; ++oc) {
                const T* dyp = &dy.at(ni, oc, 0, 0);
                T bacc = T(0);
                for (size_t i = 0; i < static_cast<size_t>(x.h) * x.w; ++i) bacc += dyp[i];
                bgrad[static_cast<size_t>(oc)] += bacc;
                for (int ic = 0; ic < in_c; ++ic)
                    for (int di = 0; di < k; ++di)
                        for (int dj = 0; dj < k; ++dj) {
                            T wv = wget(oc, ic, di, dj);
                            T wacc = T(0);
                            for (int r = 0; r < x.h; ++r) {
                                int sr = r + di - pad;
                                if (sr < 0 || sr >= x.h) continue;
                                const T* xp = &x.at(ni, ic, sr, 0);
                                T* dxp = &dx.at(ni, ic, sr, 0);
                                const T* dyr = dyp + static_cast<size_t>(r) * x.w;
                                int c0 = std::max(0, pad - dj);
                                int c1 = x.w - std::max(0, dj - pad);
                                for (int col = c0; col < c1; ++col) {
                                    wacc += dyr[col] * xp[col + dj - pad];
                                    dxp[col + dj - pad] += wv * dyr[col];
                                }
                            }
                            wgrad[((static_cast<size_t>(oc) * in_c + ic) * k + di) * k + dj] += wacc;
                        }
            }
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".weight", &weight, &wgrad});
        out.push_back({prefix + ".bias", &bias, &bgrad});
    }
};

// Per-channel batch normalization with running statistics.
template <class T>
struct BatchNorm2d {
    int channels;
    double eps = 1e-5;
    double momentum = 0.1;
    std::vector<T> gamma, ggrad, beta, bgrad;
    std::vector<T> running_mean, running_var;
    // caches
    Tensor<T> xhat;
    std::vector<double> invstd;
    bool train_cached = false;

    explicit BatchNorm2d(int c)
        : channels(c),
          gamma(static_cast<size_t>(c), T(1)),
          ggrad(static_cast<size_t>(c)),
          beta(static_cast<size_t>(c)),
          bgrad(static_cast<size_t>(c)),
          running_mean(static_cast<size_t>(c)),
          running_var(static_cast<size_t>(c), T(1)) {}

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        Tensor<T> y(x.n, x.c, x.h, x.w);
        xhat = Tensor<T>(x.n, x.c, x.h, x.w);
        invstd.assign(static_cast<size_t>(channels), 0.0);
        train_cached = train;
        const double cnt = static_cast<double>(x.n) * x.h * x.w;
        for (int ci = 0; ci < channels; ++ci) {
            double mean, var;
            if (train) {
                double s = 0.0;
                for (int ni = 0; ni < x.n; ++ni) {
                    const T* p = &x.at(ni, ci, 0, 0);
                    for (size_t i = 0; i < static_cast<size_t>(x.h) * x.w; ++i) s += p[i];
                }
                mean = s / cnt;
                double sv = 0.0;
                for (int ni = 0; ni < x.n; ++ni) {
                    const T* p = &x.at(ni, ci, 0, 0);
                    for (size_t i = 0; i < static_cast<size_t>(x.h) * x.w; ++i) {
                        double d = p[i] - mean;
                        sv += d * d;
                    }
                }
                var = sv / cnt;  // biased, as used for normalization
                running_mean[static_cast<size_t>(ci)] = static_cast<T>(
                    (1 - momentum) * running_mean[static_cast<size_t>(ci)] + momentum * mean);
                running_var[static_cast<size_t>(ci)] = static_cast<T>(
                    (1 - momentum) * running_var[static_cast<size_t>(ci)] + momentum * var);
            } else {
                mean = running_mean[static_cast<size_t>(ci)];
                var = running_var[static_cast<size_t>(ci)];
            }
            double is = 1.0 / std::sqrt(var + eps);
            invstd[static_cast<size_t>(ci)] = is;
            T g = gamma[static_cast<size_t>(ci)], b = beta[static_cast<size_t>(ci)];
            for (int ni = 0; ni < x.n; ++ni) {
                const T* p = &x.at(ni, ci, 0, 0);
                T* xh = &xhat.at(ni, ci, 0, 0);
                T* yp = &y.at(ni, ci, 0, 0);
                for (size_t i = 0; i < static_cast<size_t>(x.h) * x.w; ++i) {
                    xh[i] = static_cast<T>((p[i] - mean) * is);
                    yp[i] = g * xh[i] + b;
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
        const double cnt = static_cast<double>(dy.n) * dy.h * dy.w;
        for (int ci = 0; ci < channels; ++ci) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int ni = 0; ni < dy.n; ++ni) {
                const T* d = &dy.at(ni, ci, 0, 0);
                const T* xh = &xhat.at(ni, ci, 0, 0);
                for (size_t i = 0; i < static_cast<size_t>(dy.h) * dy.w; ++i) {
                    sum_dy += d[i];
                    sum_dy_xhat += static_cast<double>(d[i]) * xh[i];
                }
            }
            ggrad[static_cast<size_t>(ci)] += static_cast<T>(sum_dy_xhat);
            bgrad[static_cast<size_t>(ci)] += static_cast<T>(sum_dy);
            double g = gamma[static_cast<size_t>(ci)];
            double is = invstd[static_cast<size_t>(ci)];
            for (int ni = 0; ni < dy.n; ++ni) {
                const T* d = &dy.at(ni, ci, 0, 0);
                const T* xh = &xhat.at(ni, ci, 0, 0);
                T* dxp = &dx.at(ni, ci, 0, 0);
                for (size_t i = 0; i < static_cast<size_t>(dy.h) * dy.w; ++i) {
                    if (train_cached) {
                        dxp[i] = static_cast<T>(
                            g * is * (d[i] - sum_dy / cnt - xh[i] * sum_dy_xhat / cnt));
                    } else {
                        dxp[i] = static_cast<T>(g * is * d[i]);
                    }
                }
            }
        }
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".gamma", &gamma, &ggrad});
        out.push_back({prefix + ".beta", &beta, &bgrad});
    }
};

template <class T>
struct ReLU {
    Tensor<T> y_cache;
    Tensor<T> forward(const Tensor<T>& x) {
        Tensor<T> y = x;
        for (T& v : y.v)
            if (v < T(0)) v = T(0);
        y_cache = y;
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (size_t i = 0; i < dx.size(); ++i)
            if (y_cache.v[i] <= T(0)) dx.v[i] = T(0);
        return dx;
    }
};

template <class T>
struct MaxPool2d {
    std::vector<uint32_t> argmax;
    int in_h = 0, in_w = 0, in_n = 0, in_c = 0;

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.h % 2 || x.w % 2) throw ArgumentError("maxpool: dims must be even");
        in_h = x.h; in_w = x.w; in_n = x.n; in_c = x.c;
        Tensor<T> y(x.n, x.c, x.h / 2, x.w / 2);
        argmax.assign(y.size(), 0);
        size_t oi = 0;
        for (int ni = 0; ni < x.n; ++ni)
            for (int ci = 0; ci < x.c; ++ci)
                for (int r = 0; r < y.h; ++r)
                    for (int col = 0; col < y.w; ++col, ++oi) {
                        size_t base = x.plane(ni, ci);
                        T best = x.v[base + static_cast<size_t>(2 * r) * x.w + 2 * col];
                        uint32_t bi = static_cast<uint32_t>(static_cast<size_t>(2 * r) * x.w + 2 * col);
                        for (int dr = 0; dr < 2; ++dr)
                            for (int dc = 0; dc < 2; ++dc) {
                                size_t idx = static_cast<size_t>(2 * r + dr) * x.w + 2 * col + dc;
                                if (x.v[base + idx] > best) {
                                    best = x.v[base + idx];
                                    bi = static_cast<uint32_t>(idx);
                                }
                            }
                        y.v[oi] = best;
                        argmax[oi] = bi;
                    }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(in_n, in_c, in_h, in_w);
        size_t oi = 0;
        for (int ni = 0; ni < dy.n; ++ni)
            for (int ci = 0; ci < dy.c; ++ci) {
                size_t base = dx.plane(ni, ci);
                for (size_t i = 0; i < static_cast<size_t>(dy.h) * dy.w; ++i, ++oi)
                    dx.v[base + argmax[oi]] += dy.v[oi];
            }
        return dx;
    }
};

// 2x2 stride-2 transposed convolution; doubles spatial dims, halves channels
// in the decoder path.
template <class T>
struct ConvTranspose2d {
    int in_c, out_c;
    std::vector<T> weight, wgrad;  // [in_c][out_c][2][2]
    std::vector<T> bias, bgrad;
    Tensor<T> x_cache;

    ConvTranspose2d(int in_c_, int out_c_)
        : in_c(in_c_), out_c(out_c_),
          weight(static_cast<size_t>(in_c_) * out_c_ * 4),
          wgrad(weight.size()),
          bias(static_cast<size_t>(out_c_)),
          bgrad(bias.size()) {}

    void init(GaussianRng& rng) {
        double fan_in = static_cast<double>(in_c);  // each output pixel sees one input pixel per in-channel
        double std_dev = std::sqrt(2.0 / fan_in);
        for (T& x : weight) x = static_cast<T>(std_dev * rng.normal());
        for (T& x : bias) x = T(0);
    }

    size_t widx(int ic, int oc, int di, int dj) const {
        return ((static_cast<size_t>(ic) * out_c + oc) * 2 + di) * 2 + dj;
    }

    Tensor<T> forward(const Tensor<T>& x) {
        x_cache = x;
        Tensor<T> y(x.n, out_c, x.h * 2, x.w * 2);
        for (int ni = 0; ni < x.n; ++ni)
            for (int oc = 0; oc < out_c; ++oc) {
                T* yp = &y.at(ni, oc, 0, 0);
                T b = bias[static_cast<size_t>(oc)];
                for (size_t i = 0; i < static_cast<size_t>(y.h) * y.w; ++i) yp[i] = b;
                for (int ic = 0; ic < in_c; ++ic) {
                    const T* xp = &x.at(ni, ic, 0, 0);
                    for (int di = 0; di < 2; ++di)
                        for (int dj = 0; dj < 2; ++dj) {
                            T wv = weight[widx(ic, oc, di, dj)];
                            for (int r = 0; r < x.h; ++r) {
                                const T* xr = xp + static_cast<size_t>(r) * x.w;
                                T* yr = yp + static_cast<size_t>(2 * r + di) * y.w + dj;
                                for (int col = 0; col < x.w; ++col) yr[2 * col] += wv * xr[col];
                            }
                        }
                }
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const Tensor<T>& x = x_cache;
        Tensor<T> dx(x.n, in_c, x.h, x.w);
        for (int ni = 0; ni < x.n; ++ni) {
            for (int oc = 0; oc < out_c; ++oc) {
                const T* dyp = &dy.at(ni, oc, 0, 0);
                T bacc = T(0);
                for (size_t i = 0; i < static_cast<size_t>(dy.h) * dy.w; ++i) bacc += dyp[i];
                bgrad[static_cast<size_t>(oc)] += bacc;
                for (int ic = 0; ic < in_c; ++ic) {
                    const T* xp = &x.at(ni, ic, 0, 0);
                    T* dxp = &dx.at(ni, ic, 0, 0);
                    for (int di = 0; di < 2; ++di)
                        for (int dj = 0; dj < 2; ++dj) {
                            T wv = weight[widx(ic, oc, di, dj)];
                            T wacc = T(0);
                            for (int r = 0; r < x.h; ++r) {
                                const T* xr = xp + static_cast<size_t>(r) * x.w;
                                T* dxr = dxp + static_cast<size_t>(r) * x.w;
                                const T* dyr = dyp + static_cast<size_t>(2 * r + di) * dy.w + dj;
                                for (int col = 0; col < x.w; ++col) {
                                    wacc += dyr[2 * col] * xr[col];
                                    dxr[col] += wv * dyr[2 * col];
                                }
                            }
                            wgrad[widx(ic, oc, di, dj)] += wacc;
                        }
                }
            }
        }
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".weight", &weight, &wgrad});
        out.push_back({prefix + ".bias", &bias, &bgrad});
    }
};

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> y(a.n, a.c + b.c, a.h, a.w);
    for (int ni = 0; ni < a.n; ++ni) {
        std::copy(a.v.begin() + static_cast<long>(a.plane(ni, 0)),
                  a.v.begin() + static_cast<long>(a.plane(ni, 0) + static_cast<size_t>(a.c) * a.h * a.w),
                  y.v.begin() + static_cast<long>(y.plane(ni, 0)));
        std::copy(b.v.begin() + static_cast<long>(b.plane(ni, 0)),
                  b.v.begin() + static_cast<long>(b.plane(ni, 0) + static_cast<size_t>(b.c) * b.h * b.w),
                  y.v.begin() + static_cast<long>(y.plane(ni, a.c)));
    }
    return y;
}

template <class T>
void split_channels(const Tensor<T>& dy, Tensor<T>& da, Tensor<T>& db, int ca) {
    da = Tensor<T>(dy.n, ca, dy.h, dy.w);
    db = Tensor<T>(dy.n, dy.c - ca, dy.h, dy.w);
    for (int ni = 0; ni < dy.n; ++ni) {
        std::copy(dy.v.begin() + static_cast<long>(dy.plane(ni, 0)),
                  dy.v.begin() + static_cast<long>(dy.plane(ni, 0) + static_cast<size_t>(ca) * dy.h * dy.w),
                  da.v.begin() + static_cast<long>(da.plane(ni, 0)));
        std::copy(dy.v.begin() + static_cast<long>(dy.plane(ni, ca)),
                  dy.v.begin() + static_cast<long>(dy.plane(ni, ca) +
                                                   static_cast<size_t>(dy.c - ca) * dy.h * dy.w),
                  db.v.begin() + static_cast<long>(db.plane(ni, 0)));
    }
}

// conv -> norm -> ReLU, twice.
template <class T>
struct DoubleConv {
    Conv2d<T> conv1, conv2;
    BatchNorm2d<T> bn1, bn2;
    ReLU<T> relu1, relu2;

    DoubleConv(int in_c, int out_c)
        : conv1(in_c, out_c, 3), conv2(out_c, out_c, 3), bn1(out_c), bn2(out_c) {}

    void init(GaussianRng& rng) {
        conv1.init(rng);
        conv2.init(rng);
    }
    Tensor<T> forward(const Tensor<T>& x, bool train) {
        return relu2.forward(bn2.forward(conv2.forward(relu1.forward(bn1.forward(conv1.forward(x), train))), train));
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        return conv1.backward(bn1.backward(relu1.backward(conv2.backward(bn2.backward(relu2.backward(dy))))));
    }
    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        conv1.collect(out, prefix + ".conv1");
        bn1.collect(out, prefix + ".bn1");
        conv2.collect(out, prefix + ".conv2");
        bn2.collect(out, prefix + ".bn2");
    }
};

struct NetConfig {
    int depth = 2;          // down/up stages (production-scale: 4)
    int base_channels = 8;  // production-scale: 64

    void validate() const {
        if (depth < 1) throw ArgumentError("NetConfig: depth must be >= 1");
        if (base_channels < 1) throw ArgumentError("NetConfig: base_channels must be >= 1");
    }
    int divisor() const { return 1 << depth; }
};

// Encoder-decoder next-frame model with skip connections: per-stage
// DoubleConv, 2x2 max pooling down, 2x2 stride-2 transposed conv up with
// channel concatenation, and a 1x1 output head.
template <class T>
struct UNet {
    NetConfig cfg;
    std::vector<DoubleConv<T>> enc;       // depth+1 blocks (last = bottleneck)
    std::vector<MaxPool2d<T>> pools;      // depth
    std::vector<ConvTranspose2d<T>> ups;  // depth
    std::vector<DoubleConv<T>> dec;       // depth
    Conv2d<T> head;
    std::vector<Tensor<T>> skip_cache;

    explicit UNet(const NetConfig& c) : cfg(c), head(c.base_channels, 1, 1) {
        cfg.validate();
        int ch = cfg.base_channels;
        enc.emplace_back(1, ch);
        for (int d = 1; d <= cfg.depth; ++d) {
            enc.emplace_back(ch, ch * 2);
            ch *= 2;
        }
        pools.resize(static_cast<size_t>(cfg.depth));
        for (int d = 0; d < cfg.depth; ++d) {
            ups.emplace_back(ch, ch / 2);
            dec.emplace_back(ch, ch / 2);  // concat doubles the up output back to ch
            ch /= 2;
        }
    }

    void init(uint64_t seed) {
        GaussianRng rng(seed);
        for (auto& b : enc) b.init(rng);
        for (auto& u : ups) u.init(rng);
        for (auto& b : dec) b.init(rng);
        head.init(rng);
    }

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        if (x.h % cfg.divisor() || x.w % cfg.divisor())
            throw ArgumentError("forward: dims must be divisible by 2^depth");
        skip_cache.clear();
        Tensor<T> cur = enc[0].forward(x, train);
        for (int d = 0; d < cfg.depth; ++d) {
            skip_cache.push_back(cur);
            cur = enc[static_cast<size_t>(d) + 1].forward(pools[static_cast<size_t>(d)].forward(cur), train);
        }
        for (int d = 0; d < cfg.depth; ++d) {
            Tensor<T> up = ups[static_cast<size_t>(d)].forward(cur);
            cur = dec[static_cast<size_t>(d)].forward(
                concat_channels(up, skip_cache[static_cast<size_t>(cfg.depth - 1 - d)]), train);
        }
        return head.forward(cur);
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> cur = head.backward(dy);
        std::vector<Tensor<T>> skip_grads(static_cast<size_t>(cfg.depth));
        for (int d = cfg.depth - 1; d >= 0; --d) {
            Tensor<T> dcat = dec[static_cast<size_t>(d)].backward(cur);
            Tensor<T> dup, dskip;
            split_channels(dcat, dup, dskip, ups[static_cast<size_t>(d)].out_c);
            skip_grads[static_cast<size_t>(cfg.depth - 1 - d)] = std::move(dskip);
            cur = ups[static_cast<size_t>(d)].backward(dup);
        }
        for (int d = cfg.depth - 1; d >= 0; --d) {
            Tensor<T> dpool =
                pools[static_cast<size_t>(d)].backward(enc[static_cast<size_t>(d) + 1].backward(cur));
            for (size_t i = 0; i < dpool.size(); ++i)
                dpool.v[i] += skip_grads[static_cast<size_t>(d)].v[i];
            cur = dpool;
        }
        return enc[0].backward(cur);
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        for (size_t i = 0; i < enc.size(); ++i) enc[i].collect(out, "enc" + std::to_string(i));
        for (size_t i = 0; i < ups.size(); ++i) ups[i].collect(out, "up" + std::to_string(i));
        for (size_t i = 0; i < dec.size(); ++i) dec[i].collect(out, "dec" + std::to_string(i));
        head.collect(out, "head");
        return out;
    }

    // Running statistics, saved with checkpoints but never optimized.
    std::vector<ParamRef<T>> norm_stats() {
        std::vector<ParamRef<T>> out;
        auto add = [&](BatchNorm2d<T>& bn, const std::string& prefix) {
            out.push_back({prefix + ".running_mean", &bn.running_mean, nullptr});
            out.push_back({prefix + ".running_var", &bn.running_var, nullptr});
        };
        for (size_t i = 0; i < enc.size(); ++i) {
            add(enc[i].bn1, "enc" + std::to_string(i) + ".bn1");
            add(enc[i].bn2, "enc" + std::to_string(i) + ".bn2");
        }
        for (size_t i = 0; i < dec.size(); ++i) {
            add(dec[i].bn1, "dec" + std::to_string(i) + ".bn1");
            add(dec[i].bn2, "dec" + std::to_string(i) + ".bn2");
        }
        return out;
    }

    void zero_grad() {
        for (auto& p : params())
            std::fill(p.grad->begin(), p.grad->end(), T(0));
    }
};

}  // namespace bhflow

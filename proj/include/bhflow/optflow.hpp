#pragma once

#include <cmath>
#include <vector>

#include "bhflow/errors.hpp"
#include "bhflow/grid.hpp"
#include "bhflow/pyramid.hpp"
#include "bhflow/tensorio.hpp"

namespace bhflow {

// Dense displacement field in pixels/frame: content at (r,c) in the earlier
// frame appears at (r + v, c + u) in the later frame.
struct FlowField {
    Grid<double> u;  // column displacement
    Grid<double> v;  // row displacement

    FlowField() = default;
    FlowField(int rows, int cols) : u(rows, cols), v(rows, cols) {}
    double max_magnitude() const {
        double m = 0.0;
        for (size_t i = 0; i < u.size(); ++i)
            m = std::max(m, std::hypot(u.v[i], v.v[i]));
        return m;
    }
};

struct FlowOptions {
    int levels = 3;      // coarse-to-fine pyramid levels
    int window = 25;     // box window for the local least squares
    int iterations = 3;  // warp/refine passes per level
    double smooth_sigma = 1.5;
    double regularization = 1e-6;
};

namespace detail {

// Sample img at (r + sign*flow.v, c + sign*flow.u), clamp at edges.
inline Grid<double> sample_shifted(const Grid<double>& img, const FlowField& flow, double sign) {
    Grid<double> out(img.rows, img.cols);
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c)
            out.at(r, c) = bilinear_sample(img, r + sign * flow.v.at(r, c), c + sign * flow.u.at(r, c));
    return out;
}

inline Grid<double> box_sum(const Grid<double>& g, int radius) {
    Grid<double> tmp(g.rows, g.cols), out(g.rows, g.cols);
    for (int r = 0; r < g.rows; ++r) {
        double acc = 0.0;
        for (int c = -radius; c <= radius; ++c) acc += g.at(r, std::clamp(c, 0, g.cols - 1));
        for (int c = 0; c < g.cols; ++c) {
            tmp.at(r, c) = acc;
            acc -= g.at(r, std::clamp(c - radius, 0, g.cols - 1));
            acc += g.at(r, std::clamp(c + radius + 1, 0, g.cols - 1));
        }
    }
    for (int c = 0; c < g.cols; ++c) {
        double acc = 0.0;
        for (int r = -radius; r <= radius; ++r) acc += tmp.at(std::clamp(r, 0, g.rows - 1), c);
        for (int r = 0; r < g.rows; ++r) {
            out.at(r, c) = acc;
            acc -= tmp.at(std::clamp(r - radius, 0, g.rows - 1), c);
            acc += tmp.at(std::clamp(r + radius + 1, 0, g.rows - 1), c);
        }
    }
    return out;
}

inline Grid<double> pad_even(const Grid<double>& g) {
    if (g.rows % 2 == 0 && g.cols % 2 == 0) return g;
    Grid<double> out(g.rows + g.rows % 2, g.cols + g.cols % 2);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c)
            out.at(r, c) = g.at(std::min(r, g.rows - 1), std::min(c, g.cols - 1));
    return out;
}

}  // namespace detail

// Coarse-to-fine windowed least-squares dense flow with smoothness
// regularization via Gaussian filtering of the field.
inline FlowField estimate_flow(const Grid<double>& f1, const Grid<double>& f2,
                               const FlowOptions& opts = {}) {
    if (!f1.same_shape(f2)) throw ArgumentError("estimate_flow: dim mismatch");
    // image pyramids
    std::vector<Grid<double>> p1{f1}, p2{f2};
    for (int l = 1; l < opts.levels; ++l) {
        p1.push_back(downscale(detail::pad_even(p1.back())));
        p2.push_back(downscale(detail::pad_even(p2.back())));
    }
    FlowField flow(p1.back().rows, p1.back().cols);
    const int radius = opts.window / 2;

    for (int l = opts.levels - 1; l >= 0; --l) {
        const Grid<double>& i1 = p1[static_cast<size_t>(l)];
        const Grid<double>& i2 = p2[static_cast<size_t>(l)];
        if (flow.u.rows != i1.rows || flow.u.cols != i1.cols) {
            // upsample flow to this level, scaling displacements by 2
            FlowField up(i1.rows, i1.cols);
            Grid<double> uu = upscale(flow.u), vv = upscale(flow.v);
            for (int r = 0; r < i1.rows; ++r)
                for (int c = 0; c < i1.cols; ++c) {
                    up.u.at(r, c) = 2.0 * uu.at(std::min(r, uu.rows - 1), std::min(c, uu.cols - 1));
                    up.v.at(r, c) = 2.0 * vv.at(std::min(r, vv.rows - 1), std::min(c, vv.cols - 1));
                }
            flow = std::move(up);
        }
        for (int it = 0; it < opts.iterations; ++it) {
            Grid<double> i2w = detail::sample_shifted(i2, flow, +1.0);
            Grid<double> ix(i1.rows, i1.cols), iy(i1.rows, i1.cols), itd(i1.rows, i1.cols);
            for (int r = 0; r < i1.rows; ++r)
                for (int c = 0; c < i1.cols; ++c) {
                    int cm = std::max(0, c - 1), cp = std::min(i1.cols - 1, c + 1);
                    int rm = std::max(0, r - 1), rp = std::min(i1.rows - 1, r + 1);
                    // gradient of the average image, central differences
                    ix.at(r, c) = 0.5 * (i1.at(r, cp) - i1.at(r, cm) + i2w.at(r, cp) - i2w.at(r, cm)) /
                                  std::max(1, cp - cm);
                    iy.at(r, c) = 0.5 * (i1.at(rp, c) - i1.at(rm, c) + i2w.at(rp, c) - i2w.at(rm, c)) /
                                  std::max(1, rp - rm);
                    itd.at(r, c) = i2w.at(r, c) - i1.at(r, c);
                }
            Grid<double> xx(i1.rows, i1.cols), xy(i1.rows, i1.cols), yy(i1.rows, i1.cols),
                xt(i1.rows, i1.cols), yt(i1.rows, i1.cols);
            for (size_t i = 0; i < xx.size(); ++i) {
                xx.v[i] = ix.v[i] * ix.v[i];
                xy.v[i] = ix.v[i] * iy.v[i];
                yy.v[i] = iy.v[i] * iy.v[i];
                xt.v[i] = ix.v[i] * itd.v[i];
                yt.v[i] = iy.v[i] * itd.v[i];
            }
            Grid<double> sxx = detail::box_sum(xx, radius), sxy = detail::box_sum(xy, radius),
                         syy = detail::box_sum(yy, radius), sxt = detail::box_sum(xt, radius),
                         syt = detail::box_sum(yt, radius);
            double scale = 0.0;
            for (size_t i = 0; i < sxx.size(); ++i) scale = std::max(scale, sxx.v[i] + syy.v[i]);
            double alpha = opts.regularization * std::max(scale, 1e-300);
            for (int r = 0; r < i1.rows; ++r)
                for (int c = 0; c < i1.cols; ++c) {
                    double a = sxx.at(r, c) + alpha, b = sxy.at(r, c), d = syy.at(r, c) + alpha;
                    double det = a * d - b * b;
                    double bu = -sxt.at(r, c), bv = -syt.at(r, c);
                    flow.u.at(r, c) += (d * bu - b * bv) / det;
                    flow.v.at(r, c) += (a * bv - b * bu) / det;
                }
            if (opts.smooth_sigma > 0) {
                flow.u = blur_gaussian_sigma(flow.u, opts.smooth_sigma);
                flow.v = blur_gaussian_sigma(flow.v, opts.smooth_sigma);
            }
        }
    }
    return flow;
}

// Advance a frame one step along the flow: out(x) = img(x - flow(x)),
// bilinear with edge clamp. Constants are preserved exactly.
inline Grid<double> warp_forward(const Grid<double>& img, const FlowField& flow) {
    return detail::sample_shifted(img, flow, -1.0);
}

}  // namespace bhflow

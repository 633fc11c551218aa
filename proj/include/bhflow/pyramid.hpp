#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bhflow/errors.hpp"
#include "bhflow/grid.hpp"
#include "bhflow/tensorio.hpp"

namespace bhflow {

// Non-overlapping 2x2 average pooling; preserves the mean exactly.
template <class T>
Grid<T> downscale(const Grid<T>& img) {
    if (img.rows % 2 != 0 || img.cols % 2 != 0) throw ArgumentError("downscale: dims must be even");
    Grid<T> out(img.rows / 2, img.cols / 2);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c)
            out.at(r, c) = static_cast<T>(
                (img.at(2 * r, 2 * c) + img.at(2 * r, 2 * c + 1) + img.at(2 * r + 1, 2 * c) +
                 img.at(2 * r + 1, 2 * c + 1)) /
                T(4));
    return out;
}

// Bilinear x2 upsampling, align-corners=false: output sample centers at
// (i+0.5)/2 - 0.5 in input coordinates, clamp at borders.
template <class T>
Grid<T> upscale(const Grid<T>& img) {
    Grid<T> out(img.rows * 2, img.cols * 2);
    for (int r = 0; r < out.rows; ++r) {
        double sr = (r + 0.5) / 2.0 - 0.5;
        for (int c = 0; c < out.cols; ++c) {
            double sc = (c + 0.5) / 2.0 - 0.5;
            out.at(r, c) = static_cast<T>(bilinear_sample(img, sr, sc));
        }
    }
    return out;
}

// Adjoint of downscale: spread each pooled gradient back over its 2x2 cell.
inline Grid<double> adjoint_downscale(const Grid<double>& dy) {
    Grid<double> dx(dy.rows * 2, dy.cols * 2);
    for (int r = 0; r < dy.rows; ++r)
        for (int c = 0; c < dy.cols; ++c) {
            double g = dy.at(r, c) / 4.0;
            dx.at(2 * r, 2 * c) += g;
            dx.at(2 * r, 2 * c + 1) += g;
            dx.at(2 * r + 1, 2 * c) += g;
            dx.at(2 * r + 1, 2 * c + 1) += g;
        }
    return dx;
}

// Adjoint of upscale: scatter bilinear weights back to the source grid.
inline Grid<double> adjoint_upscale(const Grid<double>& dy, int src_rows, int src_cols) {
    Grid<double> dx(src_rows, src_cols);
    for (int r = 0; r < dy.rows; ++r) {
        double sr = std::clamp((r + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(src_rows - 1));
        int r0 = static_cast<int>(std::floor(sr));
        int r1 = std::min(r0 + 1, src_rows - 1);
        double fr = sr - r0;
        for (int c = 0; c < dy.cols; ++c) {
            double sc = std::clamp((c + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(src_cols - 1));
            int c0 = static_cast<int>(std::floor(sc));
            int c1 = std::min(c0 + 1, src_cols - 1);
            double fc = sc - c0;
            double g = dy.at(r, c);
            dx.at(r0, c0) += g * (1 - fr) * (1 - fc);
            dx.at(r0, c1) += g * (1 - fr) * fc;
            dx.at(r1, c0) += g * fr * (1 - fc);
            dx.at(r1, c1) += g * fr * fc;
        }
    }
    return dx;
}

inline double mean_flux(const Grid<double>& g) { return grid_mean(g); }
inline double mean_flux(const NormalizedFrame& f) { return grid_mean(f.pixels); }

struct PyramidStack {
    std::vector<Grid<double>> gaussians;            // G_0..G_{max_level+1}, G_0 = input
    std::map<int, Grid<double>> laplacians;         // Lap_k for each requested level
    double mean_flux = 0.0;                          // arithmetic mean of G_0
};

inline PyramidStack build_pyramid(const Grid<double>& img, const std::vector<int>& levels) {
    if (levels.empty()) throw ArgumentError("build_pyramid: empty level set");
    int max_level = levels.back();
    int div = 1 << (max_level + 1);
    if (img.rows % div != 0 || img.cols % div != 0)
        throw ArgumentError("build_pyramid: dims must be divisible by 2^(max level + 1)");
    PyramidStack st;
    st.gaussians.push_back(img);
    for (int k = 0; k < max_level + 1; ++k) st.gaussians.push_back(downscale(st.gaussians.back()));
    for (int k : levels) {
        Grid<double> up = upscale(st.gaussians[static_cast<size_t>(k) + 1]);
        Grid<double> lap = st.gaussians[static_cast<size_t>(k)];
        for (size_t i = 0; i < lap.size(); ++i) lap.v[i] -= up.v[i];
        st.laplacians.emplace(k, std::move(lap));
    }
    st.mean_flux = mean_flux(img);
    return st;
}

inline PyramidStack build_pyramid(const NormalizedFrame& f, const std::vector<int>& levels) {
    return build_pyramid(f.pixels, levels);
}

// Multi-scale loss weights: per-level terms on Laplacian bands plus a
// mean-flux term. Per-level loss mixes l1 and l2 with l1_share.
struct LossSpec {
    std::vector<int> levels = {0, 1, 2};
    std::vector<double> level_weights = {1.0, 0.5, 0.25};
    double flux_weight = 0.125;
    double l1_share = 0.5;
    // When false, per-level terms act on the Gaussian levels themselves
    // instead of Laplacian bands; with levels {0} this is a plain pixel loss
    // (the ablation baseline).
    bool laplacian = true;

    void validate() const {
        if (levels.size() != level_weights.size())
            throw ArgumentError("LossSpec: levels/weights size mismatch");
        if (levels.empty()) throw ArgumentError("LossSpec: empty levels");
        for (size_t i = 0; i + 1 < levels.size(); ++i)
            if (levels[i] >= levels[i + 1]) throw ArgumentError("LossSpec: levels must be ascending");
        for (double w : level_weights)
            if (!(w > 0)) throw ArgumentError("LossSpec: level weights must be > 0");
        if (flux_weight < 0) throw ArgumentError("LossSpec: flux_weight must be >= 0");
        if (l1_share < 0 || l1_share > 1) throw ArgumentError("LossSpec: l1_share outside [0,1]");
    }

    static LossSpec l2_only() {
        LossSpec s;
        s.levels = {0};
        s.level_weights = {1.0};
        s.flux_weight = 0.0;
        s.l1_share = 0.0;
        s.laplacian = false;
        return s;
    }

    std::string dump() const {
        std::ostringstream os;
        os << "levels=";
        for (size_t i = 0; i < levels.size(); ++i) os << (i ? "," : "") << levels[i];
        os << "\nweights=";
        for (size_t i = 0; i < level_weights.size(); ++i) os << (i ? "," : "") << level_weights[i];
        os << "\nflux_weight=" << flux_weight << "\nl1_share=" << l1_share
           << "\nlaplacian=" << (laplacian ? 1 : 0) << "\n";
        return os.str();
    }

    static LossSpec parse(std::istream& is) {
        LossSpec s;
        std::string line;
        while (std::getline(is, line)) {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(0, eq);
            std::string val = line.substr(eq + 1);
            std::istringstream vs(val);
            std::string tok;
            if (key == "levels") {
                s.levels.clear();
                while (std::getline(vs, tok, ',')) s.levels.push_back(std::stoi(tok));
            } else if (key == "weights") {
                s.level_weights.clear();
                while (std::getline(vs, tok, ',')) s.level_weights.push_back(std::stod(tok));
            } else if (key == "flux_weight") {
                s.flux_weight = std::stod(val);
            } else if (key == "l1_share") {
                s.l1_share = std::stod(val);
            } else if (key == "laplacian") {
                s.laplacian = std::stoi(val) != 0;
            }
        }
        s.validate();
        return s;
    }

    static LossSpec load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot open loss spec: " + path);
        return parse(is);
    }
};

namespace detail {

// Reflect-pad (edge duplicated) at bottom/right up to the next multiple of `mult`.
inline Grid<double> reflect_pad_to(const Grid<double>& img, int mult, int& pad_r, int& pad_c) {
    int pr = (mult - img.rows % mult) % mult;
    int pc = (mult - img.cols % mult) % mult;
    pad_r = pr;
    pad_c = pc;
    if (pr == 0 && pc == 0) return img;
    Grid<double> out(img.rows + pr, img.cols + pc);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c)
            out.at(r, c) = img.at(reflect_index(r, img.rows), reflect_index(c, img.cols));
    return out;
}

// Adjoint of reflect_pad_to: fold padded-region gradients back onto sources.
inline Grid<double> adjoint_reflect_pad(const Grid<double>& dy, int src_rows, int src_cols) {
    Grid<double> dx(src_rows, src_cols);
    for (int r = 0; r < dy.rows; ++r)
        for (int c = 0; c < dy.cols; ++c)
            dx.at(reflect_index(r, src_rows), reflect_index(c, src_cols)) += dy.at(r, c);
    return dx;
}

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace detail

struct LossResult {
    double loss = 0.0;
    Grid<double> grad;  // d loss / d pred, same shape as pred
};

// Weighted multi-scale loss and its exact gradient with respect to pred.
// Inputs are reflect-padded up to divisibility; each band is cropped back to
// the region covering the unpadded input before reduction, so padding never
// contributes to the loss. The flux term is computed on the unpadded frame.
inline LossResult multiscale_loss(const Grid<double>& pred, const Grid<double>& target,
                                  const LossSpec& spec) {
    spec.validate();
    if (!pred.same_shape(target)) throw ArgumentError("multiscale_loss: dim mismatch");
    const int H = pred.rows, W = pred.cols;
    const int max_level = spec.levels.back();
    const int mult = 1 << (max_level + 1);

    int pad_r = 0, pad_c = 0;
    Grid<double> pp = detail::reflect_pad_to(pred, mult, pad_r, pad_c);
    Grid<double> tp = detail::reflect_pad_to(target, mult, pad_r, pad_c);

    // Gaussian chains on padded inputs.
    std::vector<Grid<double>> gp{pp}, gt{tp};
    for (int k = 0; k < max_level + 1; ++k) {
        gp.push_back(downscale(gp.back()));
        gt.push_back(downscale(gt.back()));
    }

    const double a = spec.l1_share, b = 1.0 - spec.l1_share;
    double loss = 0.0;
    // dG[k] accumulates d loss / d gp[k].
    std::vector<Grid<double>> dG(static_cast<size_t>(max_level) + 2);
    for (size_t k = 0; k < dG.size(); ++k)
        dG[k] = Grid<double>(gp[k].rows, gp[k].cols);

    for (size_t li = 0; li < spec.levels.size(); ++li) {
        const int k = spec.levels[li];
        const double w = spec.level_weights[li];
        Grid<double> up_p, up_t;
        if (spec.laplacian) {
            up_p = upscale(gp[static_cast<size_t>(k) + 1]);
            up_t = upscale(gt[static_cast<size_t>(k) + 1]);
        }
        const int ch = detail::ceil_div(H, 1 << k);
        const int cw = detail::ceil_div(W, 1 << k);
        const double n = static_cast<double>(ch) * cw;
        Grid<double> dlap(gp[static_cast<size_t>(k)].rows, gp[static_cast<size_t>(k)].cols);
        double term = 0.0;
        for (int r = 0; r < ch; ++r)
            for (int c = 0; c < cw; ++c) {
                double d = gp[static_cast<size_t>(k)].at(r, c) - gt[static_cast<size_t>(k)].at(r, c);
                if (spec.laplacian) d -= up_p.at(r, c) - up_t.at(r, c);
                term += a * std::abs(d) + b * d * d;
                double sgn = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                dlap.at(r, c) = w * (a * sgn + 2.0 * b * d) / n;
            }
        loss += w * term / n;
        // Lap_k = G_k - Upscale(G_{k+1}); without bands, the term sits on G_k
        for (size_t i = 0; i < dlap.size(); ++i) dG[static_cast<size_t>(k)].v[i] += dlap.v[i];
        if (spec.laplacian) {
            Grid<double> du = adjoint_upscale(dlap, gp[static_cast<size_t>(k) + 1].rows,
                                              gp[static_cast<size_t>(k) + 1].cols);
            for (size_t i = 0; i < du.size(); ++i) dG[static_cast<size_t>(k) + 1].v[i] -= du.v[i];
        }
    }

    // Chain Gaussian levels back to the padded input.
    for (int k = max_level + 1; k >= 1; --k) {
        Grid<double> dprev = adjoint_downscale(dG[static_cast<size_t>(k)]);
        for (size_t i = 0; i < dprev.size(); ++i) dG[static_cast<size_t>(k) - 1].v[i] += dprev.v[i];
    }
    Grid<double> grad =
        (pad_r == 0 && pad_c == 0) ? std::move(dG[0]) : detail::adjoint_reflect_pad(dG[0], H, W);

    // Flux term on the unpadded frames.
    if (spec.flux_weight > 0) {
        double dphi = mean_flux(pred) - mean_flux(target);
        loss += spec.flux_weight * (a * std::abs(dphi) + b * dphi * dphi);
        double sgn = dphi > 0 ? 1.0 : (dphi < 0 ? -1.0 : 0.0);
        double g = spec.flux_weight * (a * sgn + 2.0 * b * dphi) / (static_cast<double>(H) * W);
        for (double& x : grad.v) x += g;
    }

    return {loss, std::move(grad)};
}

}  // namespace bhflow

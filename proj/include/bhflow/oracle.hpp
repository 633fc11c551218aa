#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <vector>

#include "bhflow/errors.hpp"
#include "bhflow/fft.hpp"
#include "bhflow/grid.hpp"
#include "bhflow/optflow.hpp"
#include "bhflow/tensorio.hpp"

namespace bhflow {

constexpr double kNsrClipMin = 1e-6;
constexpr double kNsrClipMax = 1e3;

// Static calibration of the non-learned forecaster: PSF width from grid
// search, noise-to-signal ratio, and the mean dense flow of the train split.
struct OracleCalib {
    double psf_sigma_px = 1.0;
    double nsr = kNsrClipMin;
    FlowField mean_flow;
};

// PSF grid from the calibration defaults: 0.5 to 6.0 in 23 steps.
inline std::vector<double> default_sigma_grid() {
    std::vector<double> g;
    for (int i = 0; i < 23; ++i) g.push_back(0.5 + 0.25 * i);
    return g;
}

struct CalibOptions {
    int num_samples = 50;  // frames used for the PSF grid search
    FlowOptions flow;
};

inline OracleCalib calibrate(const Movie& train_unblurred, const Movie& train_blurred,
                             const std::vector<double>& sigma_grid, const CalibOptions& opts = {}) {
    if (sigma_grid.empty()) throw ArgumentError("calibrate: empty sigma grid");
    if (train_unblurred.frames.size() != train_blurred.frames.size())
        throw ArgumentError("calibrate: movies must be aligned frame-for-frame");
    const size_t n = train_unblurred.frames.size();
    const size_t n_samples = std::min<size_t>(static_cast<size_t>(opts.num_samples), n);
    const size_t stride = std::max<size_t>(1, n / n_samples);

    OracleCalib calib;
    double best_mse = 1e300;
    for (double sigma : sigma_grid) {
        double mse = 0.0;
        size_t count = 0;
        for (size_t t = 0; t < n && count < n_samples; t += stride, ++count) {
            Grid<double> conv =
                blur_gaussian_sigma(train_unblurred.frames[t].pixels.cast<double>(), sigma);
            const Grid<float>& obs = train_blurred.frames[t].pixels;
            for (size_t i = 0; i < conv.size(); ++i) {
                double d = conv.v[i] - static_cast<double>(obs.v[i]);
                mse += d * d;
            }
        }
        if (mse < best_mse) {
            best_mse = mse;
            calib.psf_sigma_px = sigma;
        }
    }

    // NSR: residual noise power over signal power at the selected sigma.
    double noise_power = 0.0, signal_power = 0.0;
    {
        size_t count = 0;
        for (size_t t = 0; t < n && count < n_samples; t += stride, ++count) {
            Grid<double> conv =
                blur_gaussian_sigma(train_unblurred.frames[t].pixels.cast<double>(), calib.psf_sigma_px);
            const Grid<float>& obs = train_blurred.frames[t].pixels;
            for (size_t i = 0; i < conv.size(); ++i) {
                double d = static_cast<double>(obs.v[i]) - conv.v[i];
                noise_power += d * d;
                signal_power += conv.v[i] * conv.v[i];
            }
        }
    }
    calib.nsr = std::clamp(signal_power > 0 ? noise_power / signal_power : kNsrClipMax, kNsrClipMin,
                           kNsrClipMax);

    // Mean flow over consecutive unblurred train pairs.
    calib.mean_flow = FlowField(train_unblurred.height(), train_unblurred.width());
    size_t n_pairs = 0;
    for (size_t t = 0; t + 1 < n; ++t) {
        FlowField f = estimate_flow(train_unblurred.frames[t].pixels.cast<double>(),
                                    train_unblurred.frames[t + 1].pixels.cast<double>(), opts.flow);
        for (size_t i = 0; i < f.u.size(); ++i) {
            calib.mean_flow.u.v[i] += f.u.v[i];
            calib.mean_flow.v.v[i] += f.v.v[i];
        }
        ++n_pairs;
    }
    if (n_pairs > 0)
        for (size_t i = 0; i < calib.mean_flow.u.size(); ++i) {
            calib.mean_flow.u.v[i] /= static_cast<double>(n_pairs);
            calib.mean_flow.v.v[i] /= static_cast<double>(n_pairs);
        }
    return calib;
}

// Gaussian PSF circularly embedded (centered at the origin with wraparound),
// normalized to unit sum.
inline Grid<double> periodic_psf(int rows, int cols, double sigma) {
    Grid<double> psf(rows, cols);
    double sum = 0.0;
    for (int r = 0; r < rows; ++r) {
        int dr = r <= rows / 2 ? r : r - rows;
        for (int c = 0; c < cols; ++c) {
            int dc = c <= cols / 2 ? c : c - cols;
            double v = std::exp(-0.5 * (dr * dr + dc * dc) / (sigma * sigma));
            psf.at(r, c) = v;
            sum += v;
        }
    }
    for (double& x : psf.v) x /= sum;
    return psf;
}

// Exact Wiener formula on the periodic domain:
//   G = conj(H) F / (|H|^2 + nsr), inverse transformed.
inline Grid<double> wiener_filter_periodic(const Grid<double>& img, double sigma, double nsr) {
    auto F = fft2(img);
    auto H = fft2(periodic_psf(img.rows, img.cols, sigma));
    for (size_t i = 0; i < F.size(); ++i)
        F[i] = std::conj(H[i]) * F[i] / (std::norm(H[i]) + nsr);
    fft2_inplace(F, img.rows, img.cols, true);
    Grid<double> out(img.rows, img.cols);
    double inv_n = 1.0 / static_cast<double>(img.size());
    for (size_t i = 0; i < out.size(); ++i) out.v[i] = F[i].real() * inv_n;
    return out;
}

// Deconvolution entry point: reflect-pad by 3 sigma to suppress wraparound,
// apply the periodic Wiener filter, crop, clamp to >= 0.
inline Frame wiener_deconvolve(const Frame& f, const OracleCalib& calib) {
    int pad = static_cast<int>(std::ceil(3.0 * calib.psf_sigma_px));
    Grid<double> padded(f.height() + 2 * pad, f.width() + 2 * pad);
    for (int r = 0; r < padded.rows; ++r)
        for (int c = 0; c < padded.cols; ++c)
            padded.at(r, c) = static_cast<double>(
                f.pixels.at(reflect_index(r - pad, f.height()), reflect_index(c - pad, f.width())));
    Grid<double> restored = wiener_filter_periodic(padded, calib.psf_sigma_px, calib.nsr);
    Frame out;
    out.pixel_scale_uas = f.pixel_scale_uas;
    out.pixels = Grid<float>(f.height(), f.width());
    for (int r = 0; r < f.height(); ++r)
        for (int c = 0; c < f.width(); ++c)
            out.pixels.at(r, c) = static_cast<float>(std::max(0.0, restored.at(r + pad, c + pad)));
    return out;
}

// Deconvolve the input once, then advance it repeatedly along the static mean
// flow field.
inline Movie flow_warp_rollout(const Frame& x0, const OracleCalib& calib, int n_steps) {
    if (n_steps < 1) throw ArgumentError("flow_warp_rollout: n_steps must be >= 1");
    Movie out;
    out.dt_M = kDefaultDtM;
    Grid<double> cur = wiener_deconvolve(x0, calib).pixels.cast<double>();
    for (int step = 0; step < n_steps; ++step) {
        cur = warp_forward(cur, calib.mean_flow);
        Frame f;
        f.pixel_scale_uas = x0.pixel_scale_uas;
        f.pixels = cur.cast<float>();
        out.frames.push_back(std::move(f));
    }
    return out;
}

// --- BHOC calibration sidecar ---

inline void save_calib(const OracleCalib& calib, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open calibration for writing: " + path);
    os.write("BHOC", 4);
    detail::write_pod<uint32_t>(os, 1);
    detail::write_pod<double>(os, calib.psf_sigma_px);
    detail::write_pod<double>(os, calib.nsr);
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(calib.mean_flow.u.rows));
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(calib.mean_flow.u.cols));
    auto write_grid = [&](const Grid<double>& g) {
        os.write(reinterpret_cast<const char*>(g.v.data()),
                 static_cast<std::streamsize>(g.size() * sizeof(double)));
    };
    write_grid(calib.mean_flow.u);
    write_grid(calib.mean_flow.v);
    if (!os) throw IoError("calibration write failed: " + path);
}

inline OracleCalib load_calib(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open calibration: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "BHOC", 4) != 0) throw FormatError("bad calibration magic in " + path);
    uint32_t version = detail::read_pod<uint32_t>(is, "version");
    if (version != 1) throw FormatError("unsupported calibration version");
    OracleCalib calib;
    calib.psf_sigma_px = detail::read_pod<double>(is, "sigma");
    calib.nsr = detail::read_pod<double>(is, "nsr");
    uint32_t rows = detail::read_pod<uint32_t>(is, "rows");
    uint32_t cols = detail::read_pod<uint32_t>(is, "cols");
    calib.mean_flow = FlowField(static_cast<int>(rows), static_cast<int>(cols));
    auto read_grid = [&](Grid<double>& g) {
        is.read(reinterpret_cast<char*>(g.v.data()),
                static_cast<std::streamsize>(g.size() * sizeof(double)));
        if (!is) throw TruncationError("truncated flow field in " + path);
    };
    read_grid(calib.mean_flow.u);
    read_grid(calib.mean_flow.v);
    return calib;
}

}  // namespace bhflow

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bhflow/errors.hpp"
#include "bhflow/grid.hpp"

namespace bhflow {

constexpr double kDefaultPixelScaleUas = 0.5;
constexpr double kDefaultDtM = 5.0;
constexpr double kDefaultFloorEps = 1e-8;

// Single-channel intensity frame in linear flux units.
struct Frame {
    Grid<float> pixels;
    double pixel_scale_uas = kDefaultPixelScaleUas;

    int height() const { return pixels.rows; }
    int width() const { return pixels.cols; }
};

struct Movie {
    std::vector<Frame> frames;
    double dt_M = kDefaultDtM;

    int height() const { return frames.empty() ? 0 : frames.front().height(); }
    int width() const { return frames.empty() ? 0 : frames.front().width(); }
    double pixel_scale_uas() const {
        return frames.empty() ? kDefaultPixelScaleUas : frames.front().pixel_scale_uas;
    }
};

// Log-space frame; floor_eps is the clamp applied before the log.
struct NormalizedFrame {
    Grid<double> pixels;
    double floor_eps = kDefaultFloorEps;
};

inline NormalizedFrame normalize(const Frame& f, double floor_eps = kDefaultFloorEps) {
    if (!(floor_eps > 0)) throw ArgumentError("normalize: floor_eps must be > 0");
    if (!f.pixels.all_finite()) throw DataError("normalize: non-finite pixel");
    NormalizedFrame nf;
    nf.floor_eps = floor_eps;
    nf.pixels = Grid<double>(f.height(), f.width());
    for (size_t i = 0; i < f.pixels.size(); ++i)
        nf.pixels.v[i] = std::log(std::max(static_cast<double>(f.pixels.v[i]), floor_eps));
    return nf;
}

inline Frame denormalize(const NormalizedFrame& nf, double pixel_scale_uas = kDefaultPixelScaleUas) {
    Frame f;
    f.pixel_scale_uas = pixel_scale_uas;
    f.pixels = Grid<float>(nf.pixels.rows, nf.pixels.cols);
    for (size_t i = 0; i < nf.pixels.size(); ++i)
        f.pixels.v[i] = static_cast<float>(std::exp(nf.pixels.v[i]));
    return f;
}

// --- BHMV movie file format ---
// magic "BHMV", u32 LE version=1, u32 n_frames, u32 height, u32 width,
// f64 dt_M, f64 pixel_scale_uas, then frames in time order, row-major f32 LE.

namespace detail {

template <class T>
void write_pod(std::ostream& os, T x) {
    os.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <class T>
T read_pod(std::istream& is, const char* what) {
    T x;
    is.read(reinterpret_cast<char*>(&x), sizeof(T));
    if (!is) throw TruncationError(std::string("truncated while reading ") + what);
    return x;
}

}  // namespace detail

inline void write_movie(const Movie& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write("BHMV", 4);
    detail::write_pod<uint32_t>(os, 1);
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(m.frames.size()));
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(m.height()));
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(m.width()));
    detail::write_pod<double>(os, m.dt_M);
    detail::write_pod<double>(os, m.pixel_scale_uas());
    for (const Frame& f : m.frames)
        os.write(reinterpret_cast<const char*>(f.pixels.v.data()),
                 static_cast<std::streamsize>(f.pixels.size() * sizeof(float)));
    if (!os) throw IoError("write failed: " + path);
}

inline Movie read_movie(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "BHMV", 4) != 0) throw FormatError("bad magic in " + path);
    uint32_t version = detail::read_pod<uint32_t>(is, "version");
    if (version != 1) throw FormatError("unsupported BHMV version");
    uint32_t n_frames = detail::read_pod<uint32_t>(is, "n_frames");
    uint32_t height = detail::read_pod<uint32_t>(is, "height");
    uint32_t width = detail::read_pod<uint32_t>(is, "width");
    Movie m;
    m.dt_M = detail::read_pod<double>(is, "dt_M");
    double scale = detail::read_pod<double>(is, "pixel_scale_uas");
    m.frames.reserve(n_frames);
    for (uint32_t t = 0; t < n_frames; ++t) {
        Frame f;
        f.pixel_scale_uas = scale;
        f.pixels = Grid<float>(static_cast<int>(height), static_cast<int>(width));
        is.read(reinterpret_cast<char*>(f.pixels.v.data()),
                static_cast<std::streamsize>(f.pixels.size() * sizeof(float)));
        if (!is) throw TruncationError("truncated frame payload in " + path);
        if (!f.pixels.all_finite()) throw DataError("non-finite pixel in " + path);
        m.frames.push_back(std::move(f));
    }
    return m;
}

// --- degradation transforms ---

constexpr double kFwhmToSigma = 2.3548200450309493;  // 2*sqrt(2*ln 2)

// Separable Gaussian blur with reflect-padded borders; double accumulation.
template <class T>
Grid<T> blur_gaussian_sigma(const Grid<T>& img, double sigma_px) {
    if (sigma_px <= 0) return img;
    int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_px)));
    std::vector<double> k(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma_px * sigma_px));
        sum += k[i + radius];
    }
    for (double& x : k) x /= sum;

    Grid<double> tmp(img.rows, img.cols);
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * static_cast<double>(img.at(r, reflect_index(c + i, img.cols)));
            tmp.at(r, c) = acc;
        }
    Grid<T> out(img.rows, img.cols);
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * tmp.at(reflect_index(r + i, img.rows), c);
            out.at(r, c) = static_cast<T>(acc);
        }
    return out;
}

inline double fwhm_uas_to_sigma_px(double fwhm_uas, double pixel_scale_uas) {
    return (fwhm_uas / pixel_scale_uas) / kFwhmToSigma;
}

inline Frame blur_gaussian(const Frame& f, double fwhm_uas) {
    if (!(fwhm_uas > 0)) throw ArgumentError("blur_gaussian: fwhm must be > 0");
    Frame out = f;
    out.pixels = blur_gaussian_sigma(f.pixels, fwhm_uas_to_sigma_px(fwhm_uas, f.pixel_scale_uas));
    return out;
}

inline Movie blur_movie(const Movie& m, double fwhm_uas) {
    Movie out = m;
    for (Frame& f : out.frames) f = blur_gaussian(f, fwhm_uas);
    return out;
}

struct DegradeSpec {
    enum class Kind { SaltPepper, TranslateX } kind = Kind::SaltPepper;
    double rate = 0.01;      // salt_pepper: fraction of pixels flipped
    double fraction = 0.05;  // translate_x: shift as fraction of width, +x = higher column
    uint64_t seed = 0;

    static DegradeSpec salt_pepper(double rate, uint64_t seed) {
        DegradeSpec s;
        s.kind = Kind::SaltPepper;
        s.rate = rate;
        s.seed = seed;
        return s;
    }
    static DegradeSpec translate_x(double fraction) {
        DegradeSpec s;
        s.kind = Kind::TranslateX;
        s.fraction = fraction;
        return s;
    }
};

inline Frame degrade(const Frame& f, const DegradeSpec& spec) {
    Frame out = f;
    const int h = f.height(), w = f.width();
    if (spec.kind == DegradeSpec::Kind::SaltPepper) {
        if (spec.rate < 0 || spec.rate > 1) throw ArgumentError("salt_pepper rate outside [0,1]");
        const size_t n = f.pixels.size();
        const size_t n_flip = static_cast<size_t>(std::llround(spec.rate * static_cast<double>(n)));
        if (n_flip == 0) return out;
        float lo = f.pixels.min_value();
        float hi = f.pixels.max_value();
        std::vector<uint32_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0u);
        // Hand-rolled Fisher-Yates so the result is bit-stable across standard
        // library implementations.
        std::mt19937_64 rng(spec.seed);
        for (size_t i = n - 1; i > 0; --i) {
            size_t j = static_cast<size_t>(rng() % (i + 1));
            std::swap(idx[i], idx[j]);
        }
        for (size_t i = 0; i < n_flip; ++i)
            out.pixels.v[idx[i]] = (rng() & 1) ? hi : lo;
    } else {
        int shift = static_cast<int>(std::llround(spec.fraction * w));
        Grid<float> dst(h, w, 0.0f);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                int src = c - shift;
                if (src >= 0 && src < w) dst.at(r, c) = f.pixels.at(r, src);
            }
        out.pixels = std::move(dst);
    }
    return out;
}

}  // namespace bhflow

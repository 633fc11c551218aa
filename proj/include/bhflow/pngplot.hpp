#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "bhflow/errors.hpp"

namespace bhflow {

// Minimal raster plotting: RGB canvas, polyline series, axes, PNG output
// through zlib. Enough for line charts of metrics; not a plotting library.

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
};

class Canvas {
public:
    Canvas(int width, int height, Rgb fill = {255, 255, 255})
        : w_(width), h_(height), px_(static_cast<size_t>(width) * height * 3) {
        for (int y = 0; y < h_; ++y)
            for (int x = 0; x < w_; ++x) set(x, y, fill);
    }

    int width() const { return w_; }
    int height() const { return h_; }

    void set(int x, int y, Rgb c) {
        if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
        size_t i = (static_cast<size_t>(y) * w_ + x) * 3;
        px_[i] = c.r;
        px_[i + 1] = c.g;
        px_[i + 2] = c.b;
    }

    void line(double x0, double y0, double x1, double y1, Rgb c) {
        double dx = x1 - x0, dy = y1 - y0;
        int n = static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))) + 1;
        for (int i = 0; i <= n; ++i) {
            double t = static_cast<double>(i) / n;
            set(static_cast<int>(std::lround(x0 + t * dx)), static_cast<int>(std::lround(y0 + t * dy)), c);
        }
    }

    void save_png(const std::string& path) const {
        // filter byte 0 (None) per row
        std::vector<uint8_t> raw;
        raw.reserve(static_cast<size_t>(h_) * (static_cast<size_t>(w_) * 3 + 1));
        for (int y = 0; y < h_; ++y) {
            raw.push_back(0);
            const uint8_t* row = px_.data() + static_cast<size_t>(y) * w_ * 3;
            raw.insert(raw.end(), row, row + static_cast<size_t>(w_) * 3);
        }
        uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
        std::vector<uint8_t> comp(comp_len);
        if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
            throw IoError("png compression failed");
        comp.resize(comp_len);

        std::ofstream os(path, std::ios::binary);
        if (!os) throw IoError("cannot open image for writing: " + path);
        static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
        os.write(reinterpret_cast<const char*>(sig), 8);

        auto chunk = [&](const char* type, const std::vector<uint8_t>& data) {
            auto be32 = [&](uint32_t v) {
                uint8_t b[4] = {static_cast<uint8_t>(v >> 24), static_cast<uint8_t>(v >> 16),
                                static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v)};
                os.write(reinterpret_cast<const char*>(b), 4);
            };
            be32(static_cast<uint32_t>(data.size()));
            os.write(type, 4);
            if (!data.empty())
                os.write(reinterpret_cast<const char*>(data.data()),
                         static_cast<std::streamsize>(data.size()));
            uint32_t crc = static_cast<uint32_t>(
                crc32(crc32(0L, reinterpret_cast<const Bytef*>(type), 4), data.data(),
                      static_cast<uInt>(data.size())));
            be32(crc);
        };

        std::vector<uint8_t> ihdr = {
            static_cast<uint8_t>(w_ >> 24), static_cast<uint8_t>(w_ >> 16),
            static_cast<uint8_t>(w_ >> 8),  static_cast<uint8_t>(w_),
            static_cast<uint8_t>(h_ >> 24), static_cast<uint8_t>(h_ >> 16),
            static_cast<uint8_t>(h_ >> 8),  static_cast<uint8_t>(h_),
            8, 2, 0, 0, 0};  // 8-bit, truecolor
        chunk("IHDR", ihdr);
        chunk("IDAT", comp);
        chunk("IEND", {});
        if (!os) throw IoError("image write failed: " + path);
    }

private:
    int w_, h_;
    std::vector<uint8_t> px_;
};

struct Series {
    std::vector<double> x, y;
    Rgb color{31, 119, 180};
};

// Line chart with a framed plot area; axis labels left to the filename.
inline void write_line_chart(const std::string& path, const std::vector<Series>& series,
                             int width = 640, int height = 480, bool log_y = false) {
    Canvas canvas(width, height);
    const int ml = 50, mr = 15, mt = 15, mb = 35;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Series& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            double y = s.y[i];
            if (log_y) {
                if (!(y > 0)) continue;
                y = std::log10(y);
            }
            if (!std::isfinite(s.x[i]) || !std::isfinite(y)) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) { xmin = 0; xmax = 1; }
    if (ymin > ymax) { ymin = 0; ymax = 1; }
    if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }

    Rgb frame{80, 80, 80};
    canvas.line(ml, mt, ml, mt + ph, frame);
    canvas.line(ml, mt + ph, ml + pw, mt + ph, frame);
    canvas.line(ml, mt, ml + pw, mt, frame);
    canvas.line(ml + pw, mt, ml + pw, mt + ph, frame);

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) {
        if (log_y) y = std::log10(std::max(y, 1e-300));
        return mt + ph - (y - ymin) / (ymax - ymin) * ph;
    };
    for (const Series& s : series)
        for (size_t i = 0; i + 1 < s.x.size(); ++i) {
            if (log_y && (!(s.y[i] > 0) || !(s.y[i + 1] > 0))) continue;
            canvas.line(px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), s.color);
        }
    canvas.save_png(path);
}

}  // namespace bhflow

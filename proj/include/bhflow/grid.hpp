#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bhflow/errors.hpp"

namespace bhflow {

// Row-major 2D array. The workhorse container for frames, pyramid bands,
// cylinder plots and flow components.
template <class T>
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    Grid() = default;
    Grid(int r, int c, T fill = T(0)) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

    T& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Grid& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }
    T min_value() const { return *std::min_element(v.begin(), v.end()); }
    T max_value() const { return *std::max_element(v.begin(), v.end()); }

    template <class U>
    Grid<U> cast() const {
        Grid<U> out(rows, cols);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

// Reflected index into [0, n): ..2,1,0,0,1,2,..,n-1,n-1,n-2,.. (edge duplicated,
// period 2n). Valid for any integer i.
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

// Bilinear sample with clamp-to-edge, coordinates in (row, col) pixel units.
template <class T>
double bilinear_sample(const Grid<T>& g, double r, double c) {
    r = std::clamp(r, 0.0, static_cast<double>(g.rows - 1));
    c = std::clamp(c, 0.0, static_cast<double>(g.cols - 1));
    int r0 = static_cast<int>(std::floor(r));
    int c0 = static_cast<int>(std::floor(c));
    int r1 = std::min(r0 + 1, g.rows - 1);
    int c1 = std::min(c0 + 1, g.cols - 1);
    double fr = r - r0, fc = c - c0;
    // nested lerp form: constant neighborhoods are reproduced exactly
    double a = static_cast<double>(g.at(r0, c0));
    double b = static_cast<double>(g.at(r0, c1));
    double d = static_cast<double>(g.at(r1, c0));
    double e = static_cast<double>(g.at(r1, c1));
    double top = a + fc * (b - a);
    double bottom = d + fc * (e - d);
    return top + fr * (bottom - top);
}

template <class T>
double grid_mean(const Grid<T>& g) {
    double s = 0.0;
    for (T x : g.v) s += static_cast<double>(x);
    return s / static_cast<double>(g.size());
}

}  // namespace bhflow

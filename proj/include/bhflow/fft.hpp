#pragma once

#include <complex>
#include <vector>

#include <fftw3.h>

#include "bhflow/grid.hpp"

namespace bhflow {

// Thin FFTW wrappers. Transforms are unnormalized (FFTW convention); callers
// divide by the element count where needed.

inline void fft2_inplace(std::vector<std::complex<double>>& data, int rows, int cols, bool inverse) {
    fftw_complex* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan =
        fftw_plan_dft_2d(rows, cols, p, p, inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
}

inline std::vector<std::complex<double>> fft2(const Grid<double>& g) {
    std::vector<std::complex<double>> data(g.size());
    for (size_t i = 0; i < g.size(); ++i) data[i] = g.v[i];
    fft2_inplace(data, g.rows, g.cols, false);
    return data;
}

}  // namespace bhflow

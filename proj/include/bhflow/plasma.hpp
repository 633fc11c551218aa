#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "bhflow/errors.hpp"
#include "bhflow/features.hpp"
#include "bhflow/fft.hpp"
#include "bhflow/grid.hpp"
#include "bhflow/tensorio.hpp"

namespace bhflow {

constexpr int kDefaultNTheta = 180;
constexpr double kDefaultDeltaRFrac = 0.1;

// Ring-sampled intensities T(theta, t), stored with rows = time and
// cols = angular bins. `normalized` is log T minus its grand mean.
struct CylinderPlot {
    Grid<double> values;      // raw bilinear ring samples
    Grid<double> normalized;  // log-space, grand mean removed
    double radius_px = 0.0;
    int n_theta() const { return values.cols; }
    int n_t() const { return values.rows; }
};

// Log-space normalization of raw ring samples. Dividing by the grand mean
// before the log makes a power-of-two rescaling of every pixel bit-invisible
// downstream; subtracting the mean of logs afterwards gives the same
// grand-mean-zero plot as log-then-subtract in exact arithmetic.
inline Grid<double> normalize_plot(const Grid<double>& values) {
    Grid<double> out(values.rows, values.cols);
    double raw_mean = grid_mean(values);
    double scale = raw_mean > 0 ? raw_mean : 1.0;
    double mean = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
        out.v[i] = std::log(std::max(values.v[i] / scale, 1e-30));
        mean += out.v[i];
    }
    mean /= static_cast<double>(out.size());
    for (double& x : out.v) x -= mean;
    return out;
}

inline CylinderPlot cylinder_plot(const Movie& movie, double radius_px, int n_theta = kDefaultNTheta) {
    if (n_theta < 32) throw ArgumentError("cylinder_plot: n_theta must be >= 32");
    const int H = movie.height(), W = movie.width();
    if (!(radius_px + 1 < std::min(H, W) / 2.0))
        throw ArgumentError("cylinder_plot: radius out of frame");
    const double cx = (W - 1) / 2.0, cy = (H - 1) / 2.0;
    const int n_t = static_cast<int>(movie.frames.size());

    CylinderPlot cp;
    cp.radius_px = radius_px;
    cp.values = Grid<double>(n_t, n_theta);
    for (int t = 0; t < n_t; ++t)
        for (int j = 0; j < n_theta; ++j) {
            double theta = 2.0 * M_PI * j / n_theta;  // counterclockwise positive
            double col = cx + radius_px * std::cos(theta);
            double row = cy + radius_px * std::sin(theta);
            cp.values.at(t, j) = bilinear_sample(movie.frames[static_cast<size_t>(t)].pixels, row, col);
        }
    cp.normalized = normalize_plot(cp.values);
    return cp;
}

inline double grid_variance(const Grid<double>& g) {
    double m = grid_mean(g), s = 0.0;
    for (double x : g.v) s += (x - m) * (x - m);
    return s / static_cast<double>(g.size());
}

// Remove each angular bin's temporal mean. Static ring structure (the bright
// side) otherwise dominates the autocorrelation and drags the moment-ratio
// pattern speed toward zero.
inline Grid<double> detrend_columns(const Grid<double>& g) {
    Grid<double> out = g;
    for (int c = 0; c < g.cols; ++c) {
        double m = 0.0;
        for (int r = 0; r < g.rows; ++r) m += g.at(r, c);
        m /= g.rows;
        for (int r = 0; r < g.rows; ++r) out.at(r, c) -= m;
    }
    return out;
}

// 2D circular autocorrelation of a zero-mean grid, normalized so xi(0,0) = 1.
inline Grid<double> autocorrelation_grid(const Grid<double>& tilde) {
    double var = grid_variance(tilde);
    double ms = 0.0;
    for (double x : tilde.v) ms += x * x;
    if (var < 1e-24 || ms <= 0) throw DegenerateInputError("autocorrelation: zero-variance plot");
    auto spec = fft2(tilde);
    for (auto& z : spec) z = std::norm(z);
    fft2_inplace(spec, tilde.rows, tilde.cols, true);
    // Unnormalized inverse gives N * sum_x T(x) T(x+d); divide by N * sum T^2.
    Grid<double> xi(tilde.rows, tilde.cols);
    double denom = static_cast<double>(tilde.size()) * ms;
    for (size_t i = 0; i < xi.size(); ++i) xi.v[i] = spec[i].real() / denom;
    return xi;
}

inline Grid<double> autocorrelation(const CylinderPlot& cp) {
    return autocorrelation_grid(cp.normalized);
}

// Autocorrelation that is circular in theta but *linear* in time: the plot is
// zero-padded to 2*n_t rows before the FFT and each time lag is divided by its
// overlap count. The plain circular version wraps pairs (t, t+dt-n_t) into lag
// dt; for a pattern moving at omega that injects a spurious ridge displaced by
// omega*n_t (mod 2pi), which can bias the moment-ratio speed by tens of
// percent depending on the movie length. Output rows map to lags the same way
// as the circular grid: row it holds dt = it (it <= n_t/2) or it - n_t.
inline Grid<double> autocorrelation_grid_linear_t(const Grid<double>& tilde) {
    double var = grid_variance(tilde);
    double ms = 0.0;
    for (double x : tilde.v) ms += x * x;
    if (var < 1e-24 || ms <= 0) throw DegenerateInputError("autocorrelation: zero-variance plot");
    const int n_t = tilde.rows, n_theta = tilde.cols;
    Grid<double> padded(2 * n_t, n_theta, 0.0);
    for (int r = 0; r < n_t; ++r)
        for (int c = 0; c < n_theta; ++c) padded.at(r, c) = tilde.at(r, c);
    auto spec = fft2(padded);
    for (auto& z : spec) z = std::norm(z);
    fft2_inplace(spec, padded.rows, padded.cols, true);
    Grid<double> xi(n_t, n_theta);
    const double norm_per_pair = ms / static_cast<double>(n_t);
    for (int it = 0; it < n_t; ++it) {
        int dt = it <= n_t / 2 ? it : it - n_t;
        int src_row = dt >= 0 ? dt : dt + 2 * n_t;
        int overlap = n_t - std::abs(dt);
        double denom = static_cast<double>(padded.size()) * overlap * norm_per_pair;
        for (int jt = 0; jt < n_theta; ++jt)
            xi.at(it, jt) = spec[static_cast<size_t>(src_row) * n_theta + jt].real() / denom;
    }
    return xi;
}

struct PatternSpeedOptions {
    bool detrend = true;
    bool linear_time = true;          // suppress time wrap-around bias
    double max_dt_frac = 0.25;        // window: |dt| <= max_dt_frac * n_t
    double max_dtheta = M_PI / 2.0;   // window: |dtheta| <= max_dtheta
};

// Ratio of second moments of the clamped autocorrelation over a centered
// window, with lags unwrapped to (-n/2, n/2] and (-pi, pi].
inline double pattern_speed(const CylinderPlot& cp, const PatternSpeedOptions& opts = {}) {
    double base_var = grid_variance(cp.normalized);
    if (base_var < 1e-24) throw DegenerateInputError("pattern_speed: zero-variance plot");
    // Canonical time orientation: compute on whichever of (plot, time-reversed
    // plot) has the lexicographically smaller raw-sample grid and flip the
    // sign back. Reversing the movie then reproduces the exact same arithmetic
    // on the exact same grid, so the estimate is negated bit-for-bit instead
    // of only to rounding. Canonicalization happens on the raw samples (which
    // reverse exactly) and the normalization is redone afterwards, because the
    // grand-mean reductions are summation-order dependent.
    Grid<double> raw = cp.values;
    bool flipped = false;
    {
        Grid<double> rev(raw.rows, raw.cols);
        for (int r = 0; r < raw.rows; ++r)
            for (int c = 0; c < raw.cols; ++c) rev.at(r, c) = raw.at(raw.rows - 1 - r, c);
        if (std::lexicographical_compare(rev.v.begin(), rev.v.end(), raw.v.begin(),
                                         raw.v.end())) {
            raw = std::move(rev);
            flipped = true;
        }
    }
    Grid<double> norm = normalize_plot(raw);
    Grid<double> field = opts.detrend ? detrend_columns(norm) : norm;
    if (opts.detrend) {
        double var = grid_variance(field);
        if (var < 1e-10 * base_var) return 0.0;  // no time structure
    }
    Grid<double> xi =
        opts.linear_time ? autocorrelation_grid_linear_t(field) : autocorrelation_grid(field);
    const int n_t = xi.rows, n_theta = xi.cols;
    const int max_dt0 = std::max(1, static_cast<int>(opts.max_dt_frac * n_t));
    auto moment_ratio = [&](int max_dt) {
        double m_tt = 0.0, m_ttheta = 0.0;
        for (int it = 0; it < n_t; ++it) {
            int dt = it <= n_t / 2 ? it : it - n_t;
            if (std::abs(dt) > max_dt) continue;
            for (int jt = 0; jt < n_theta; ++jt) {
                int db = jt <= n_theta / 2 ? jt : jt - n_theta;
                double dtheta = 2.0 * M_PI * db / n_theta;
                if (std::abs(dtheta) > opts.max_dtheta) continue;
                double w = std::max(xi.at(it, jt), 0.0);
                m_tt += w * static_cast<double>(dt) * dt;
                m_ttheta += w * dt * dtheta;
            }
        }
        if (m_tt <= 0) throw DegenerateInputError("pattern_speed: vanishing time moment");
        return m_ttheta / m_tt;
    };
    // The moment ratio is only unbiased while |omega|*dt stays inside the
    // correlation lobe; for fast patterns shrink the time window until
    // |omega|*max_dt <~ pi/8 (a couple of fixed-point iterations suffice).
    int max_dt = max_dt0;
    double omega = moment_ratio(max_dt);
    for (int iter = 0; iter < 3; ++iter) {
        double a = std::abs(omega);
        if (a < 1e-12) break;
        int want = static_cast<int>((M_PI / 8.0) / a);
        want = std::clamp(want, 3, max_dt0);
        if (want >= max_dt) break;
        max_dt = want;
        omega = moment_ratio(max_dt);
    }
    return flipped ? -omega : omega;
}

inline double pattern_speed(const Movie& movie, double radius_px, int n_theta = kDefaultNTheta,
                            const PatternSpeedOptions& opts = {}) {
    return pattern_speed(cylinder_plot(movie, radius_px, n_theta), opts);
}

// Radius factors for the rotation curve: the heuristic set plus the primary ring.
inline const std::vector<double>& rotation_curve_radius_factors() {
    static const std::vector<double> f = {0.75, 0.9375, 1.0, 1.125, 1.3125, 1.5};
    return f;
}

inline double rotation_curve_slope(const Movie& movie, double r_ring_px,
                                   int n_theta = kDefaultNTheta,
                                   const PatternSpeedOptions& opts = {}) {
    const auto& factors = rotation_curve_radius_factors();
    double r_max = factors.back() * r_ring_px;
    if (!(r_max + 1 < std::min(movie.height(), movie.width()) / 2.0))
        throw ArgumentError("rotation_curve_slope: largest radius does not fit in frame");
    std::vector<double> xs, ys;
    for (double f : factors) {
        try {
            double omega = pattern_speed(movie, f * r_ring_px, n_theta, opts);
            xs.push_back(f - 1.0);
            ys.push_back(omega);
        } catch (const DegenerateInputError&) {
            // drop this radius
        }
    }
    if (xs.size() < 3) throw DegenerateInputError("rotation_curve_slope: < 3 valid radii");
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) throw DegenerateInputError("rotation_curve_slope: singular fit");
    return (n * sxy - sx * sy) / denom;
}

struct PitchAngleOptions {
    bool filter_low_harmonics = true;  // project out m = 0, 1 per frame
    int arm_harmonic = 2;              // bandpass to this angular harmonic (0 = off)
    double max_dtheta = M_PI / 2.0;    // argmax search window
};

// Keep only the angular Fourier harmonic m of every row. Isolates the spiral
// arms' harmonic, so the per-frame cross-correlation peak becomes the clean
// inter-radius phase offset of the arm pattern; contamination that enters both
// radii with the same phase largely cancels in that offset.
inline Grid<double> project_harmonic(const Grid<double>& g, int m) {
    Grid<double> out(g.rows, g.cols, 0.0);
    const int n = g.cols;
    for (int r = 0; r < g.rows; ++r) {
        std::complex<double> cm(0.0, 0.0);
        for (int j = 0; j < n; ++j) {
            double theta = 2.0 * M_PI * j / n;
            cm += g.at(r, j) * std::exp(std::complex<double>(0.0, -m * theta));
        }
        cm *= 2.0 / n;
        for (int j = 0; j < n; ++j) {
            double theta = 2.0 * M_PI * j / n;
            out.at(r, j) = (cm * std::exp(std::complex<double>(0.0, m * theta))).real();
        }
    }
    return out;
}

// Project the m = 0 and m = 1 angular Fourier components out of every row.
// The static bright-side asymmetry lives entirely in those harmonics, so this
// isolates the m >= 2 spiral signal without the partial-period residual that
// temporal detrending would leave behind.
inline Grid<double> remove_low_harmonics(const Grid<double>& g) {
    Grid<double> out = g;
    const int n = g.cols;
    for (int r = 0; r < g.rows; ++r) {
        double c0 = 0.0;
        std::complex<double> c1(0.0, 0.0);
        for (int j = 0; j < n; ++j) {
            double theta = 2.0 * M_PI * j / n;
            c0 += g.at(r, j);
            c1 += g.at(r, j) * std::exp(std::complex<double>(0.0, -theta));
        }
        c0 /= n;
        c1 *= 2.0 / n;
        for (int j = 0; j < n; ++j) {
            double theta = 2.0 * M_PI * j / n;
            out.at(r, j) -= c0 + (c1 * std::exp(std::complex<double>(0.0, theta))).real();
        }
    }
    return out;
}

// Angular offset maximizing the equal-time cross-correlation between the ring
// plot and a plot at a slightly larger radius, converted to a winding angle.
// The argmax is refined with a parabolic fit through the peak's neighbors.
//
// The offset is measured per frame and regressed linearly against time, and
// the t = 0 intercept is what gets converted. Under differential rotation the
// spiral winds up: the inter-radius offset drifts at (dOmega/dlnr)*dlnr per
// frame, so a time-summed correlation measures the winding averaged over the
// movie instead of the intrinsic one, which the intercept recovers.
inline double pitch_angle(const Movie& movie, double r_ring_px,
                          double delta_r_frac = kDefaultDeltaRFrac, int n_theta = kDefaultNTheta,
                          const PitchAngleOptions& opts = {}) {
    if (!(delta_r_frac > 0)) throw ArgumentError("pitch_angle: delta_r_frac must be > 0");
    CylinderPlot cp1 = cylinder_plot(movie, r_ring_px, n_theta);
    CylinderPlot cp2 = cylinder_plot(movie, r_ring_px * (1.0 + delta_r_frac), n_theta);
    Grid<double> a =
        opts.filter_low_harmonics ? remove_low_harmonics(cp1.normalized) : cp1.normalized;
    Grid<double> b =
        opts.filter_low_harmonics ? remove_low_harmonics(cp2.normalized) : cp2.normalized;
    if (opts.arm_harmonic > 0) {
        a = project_harmonic(a, opts.arm_harmonic);
        b = project_harmonic(b, opts.arm_harmonic);
    }
    if (grid_variance(a) < 1e-24 || grid_variance(b) < 1e-24)
        throw DegenerateInputError("pitch_angle: degenerate plots");

    const int n_t = a.rows;
    std::vector<double> ts, offs;
    double tone_rate = 0.0;  // phase increment per frame of the arm harmonic
    if (opts.arm_harmonic > 0) {
        // For a single harmonic the cross-correlation argmax is the complex
        // phase difference divided by m; evaluate it in closed form instead of
        // refining a binned peak (the tight-winding regime needs offsets well
        // below one angular bin).
        const int m = opts.arm_harmonic;
        auto coeff = [n_theta](const Grid<double>& g, int t, int mm) {
            std::complex<double> c(0.0, 0.0);
            for (int j = 0; j < n_theta; ++j) {
                double theta = 2.0 * M_PI * j / n_theta;
                c += g.at(t, j) * std::exp(std::complex<double>(0.0, -mm * theta));
            }
            return c;
        };
        double amp_floor = 0.0;
        std::vector<std::complex<double>> c1s, c2s;
        for (int t = 0; t < n_t; ++t) {
            c1s.push_back(coeff(a, t, m));
            c2s.push_back(coeff(b, t, m));
            amp_floor = std::max(amp_floor, std::abs(c1s.back() * std::conj(c2s.back())));
        }
        amp_floor *= 1e-6;
        {
            std::complex<double> inc(0.0, 0.0);
            for (int t = 0; t + 1 < n_t; ++t)
                inc += c1s[static_cast<size_t>(t) + 1] * std::conj(c1s[static_cast<size_t>(t)]);
            if (std::abs(inc) > 0) tone_rate = std::arg(inc);
        }
        for (int t = 0; t < n_t; ++t) {
            std::complex<double> prod =
                c2s[static_cast<size_t>(t)] * std::conj(c1s[static_cast<size_t>(t)]);
            if (!(std::abs(prod) > amp_floor)) continue;  // no usable spiral signal
            double off = std::arg(prod) / m;  // wrapped to (-pi/m, pi/m]
            if (std::abs(off) > opts.max_dtheta) continue;
            ts.push_back(static_cast<double>(t));
            offs.push_back(off);
        }
    } else {
        std::vector<double> c(static_cast<size_t>(n_theta), 0.0);
        for (int t = 0; t < n_t; ++t) {
            // dtheta = 0 slice of this frame's cross-correlation:
            // c(s) = sum_j a(t,j) b(t,j+s)
            for (int s = 0; s < n_theta; ++s) {
                double acc = 0.0;
                for (int j = 0; j < n_theta; ++j) acc += a.at(t, j) * b.at(t, (j + s) % n_theta);
                c[static_cast<size_t>(s)] = acc;
            }
            int best = -1;
            double best_val = -1e300;
            for (int s = 0; s < n_theta; ++s) {
                int db = s <= n_theta / 2 ? s : s - n_theta;
                double dtheta = 2.0 * M_PI * db / n_theta;
                if (std::abs(dtheta) > opts.max_dtheta) continue;
                if (c[static_cast<size_t>(s)] > best_val) {
                    best_val = c[static_cast<size_t>(s)];
                    best = s;
                }
            }
            if (best < 0) throw DegenerateInputError("pitch_angle: empty search window");
            if (best_val <= 0) continue;  // frame carries no usable spiral signal
            // Sub-bin parabolic refinement around the peak.
            double cm = c[static_cast<size_t>((best - 1 + n_theta) % n_theta)];
            double c0 = c[static_cast<size_t>(best)];
            double cpp = c[static_cast<size_t>((best + 1) % n_theta)];
            double denom = cm - 2.0 * c0 + cpp;
            double frac = std::abs(denom) > 1e-30 ? 0.5 * (cm - cpp) / denom : 0.0;
            frac = std::clamp(frac, -0.5, 0.5);
            int db = best <= n_theta / 2 ? best : best - n_theta;
            ts.push_back(static_cast<double>(t));
            offs.push_back(2.0 * M_PI * (db + frac) / n_theta);
        }
    }
    if (ts.empty()) throw DegenerateInputError("pitch_angle: no usable frames");
    double theta_star;
    // Static contamination of the arm harmonic beats against the rotating arm
    // pattern, rippling the per-frame offsets at the tone rate; when the movie
    // covers at least a full beat period, adding that ripple to the regression
    // keeps it out of the intercept.
    bool model_ripple = ts.size() >= 24 && std::abs(tone_rate) * (ts.back() - ts.front()) >= 2.0 * M_PI;
    if (ts.size() == 1) {
        theta_star = offs[0];
    } else {
        const int k = model_ripple ? 4 : 2;
        double ata[4][4] = {}, atb[4] = {};
        for (size_t i = 0; i < ts.size(); ++i) {
            double row[4] = {1.0, ts[i], std::cos(tone_rate * ts[i]),
                             std::sin(tone_rate * ts[i])};
            for (int p = 0; p < k; ++p) {
                atb[p] += row[p] * offs[i];
                for (int q = 0; q < k; ++q) ata[p][q] += row[p] * row[q];
            }
        }
        // Gaussian elimination with partial pivoting on the k x k system.
        double theta = 0.0;
        bool solved = true;
        {
            double m_[4][5];
            for (int p = 0; p < k; ++p) {
                for (int q = 0; q < k; ++q) m_[p][q] = ata[p][q];
                m_[p][k] = atb[p];
            }
            for (int col = 0; col < k && solved; ++col) {
                int piv = col;
                for (int r2 = col + 1; r2 < k; ++r2)
                    if (std::abs(m_[r2][col]) > std::abs(m_[piv][col])) piv = r2;
                if (std::abs(m_[piv][col]) < 1e-12) {
                    solved = false;
                    break;
                }
                for (int q = 0; q <= k; ++q) std::swap(m_[col][q], m_[piv][q]);
                for (int r2 = 0; r2 < k; ++r2) {
                    if (r2 == col) continue;
                    double f = m_[r2][col] / m_[col][col];
                    for (int q = col; q <= k; ++q) m_[r2][q] -= f * m_[col][q];
                }
            }
            if (solved) theta = m_[0][k] / m_[0][0];  // intercept at t = 0
        }
        if (!solved) {
            double n = static_cast<double>(ts.size());
            double sy = 0;
            for (double o : offs) sy += o;
            theta = sy / n;
        }
        theta_star = theta;
    }
    return std::atan(std::abs(theta_star) / std::log(1.0 + delta_r_frac));
}

struct AsymmetryResult {
    double ratio = 0.0;   // A/C
    double theta0 = 0.0;  // phase in A*cos(theta + theta0) + C
};

// First circular harmonic of the time-averaged ring profile; closed-form
// least-squares fit of A*cos(theta + theta0) + C.
inline AsymmetryResult asymmetry_fit(const Movie& movie, double r_ring_px,
                                     int n_theta = kDefaultNTheta) {
    CylinderPlot cp = cylinder_plot(movie, r_ring_px, n_theta);
    std::vector<double> p(static_cast<size_t>(n_theta), 0.0);
    for (int j = 0; j < n_theta; ++j) {
        double s = 0.0;
        for (int t = 0; t < cp.n_t(); ++t) s += cp.values.at(t, j);
        p[static_cast<size_t>(j)] = s / cp.n_t();
    }
    double c_mean = 0.0;
    std::complex<double> c1(0.0, 0.0);
    for (int j = 0; j < n_theta; ++j) {
        double theta = 2.0 * M_PI * j / n_theta;
        c_mean += p[static_cast<size_t>(j)];
        c1 += p[static_cast<size_t>(j)] * std::exp(std::complex<double>(0.0, -theta));
    }
    c_mean /= n_theta;
    c1 /= static_cast<double>(n_theta);
    if (c_mean <= 0) throw DegenerateInputError("asymmetry: non-positive mean profile");
    AsymmetryResult res;
    res.ratio = 2.0 * std::abs(c1) / c_mean;
    // p ~ C + A cos(theta + theta0) has c1 = (A/2) e^{-i theta0}... with our
    // convention c1 = (A/2) e^{+i(-theta0)}? Derive: cos(theta+theta0) =
    // (e^{i(theta+theta0)}+e^{-i(theta+theta0)})/2, so mean(p e^{-i theta})
    // picks (A/2) e^{i theta0}.
    res.theta0 = std::arg(c1);
    return res;
}

inline double asymmetry(const Movie& movie, double r_ring_px, int n_theta = kDefaultNTheta) {
    return asymmetry_fit(movie, r_ring_px, n_theta).ratio;
}

// Radially averaged power spectrum of a mean-removed frame. Entry k-1 holds
// the average of |FFT|^2 over integer radial frequency bin k; bin 0 (DC) is
// excluded.
inline std::vector<double> radial_psd(const Grid<double>& img) {
    Grid<double> centered = img;
    double m = grid_mean(img);
    for (double& x : centered.v) x -= m;
    auto spec = fft2(centered);
    int kmax = std::min(img.rows, img.cols) / 2;
    std::vector<double> power(static_cast<size_t>(kmax), 0.0);
    std::vector<int> count(static_cast<size_t>(kmax), 0);
    for (int r = 0; r < img.rows; ++r) {
        int fr = r <= img.rows / 2 ? r : r - img.rows;
        for (int c = 0; c < img.cols; ++c) {
            int fc = c <= img.cols / 2 ? c : c - img.cols;
            int bin = static_cast<int>(std::lround(std::hypot(static_cast<double>(fr), fc)));
            if (bin < 1 || bin > kmax) continue;
            power[static_cast<size_t>(bin - 1)] += std::norm(spec[static_cast<size_t>(r) * img.cols + c]);
            count[static_cast<size_t>(bin - 1)] += 1;
        }
    }
    for (size_t i = 0; i < power.size(); ++i)
        if (count[i] > 0) power[i] /= count[i];
    return power;
}

inline std::vector<double> radial_psd(const Frame& f) {
    return radial_psd(f.pixels.cast<double>());
}

// log-PSD l2 distance over the upper half of frequency bins; the
// super-resolution metric.
inline double psd_log_distance_upper(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ArgumentError("psd_log_distance_upper: size mismatch");
    size_t lo = a.size() / 2;
    double s = 0.0;
    for (size_t i = lo; i < a.size(); ++i) {
        double la = std::log(std::max(a[i], 1e-300));
        double lb = std::log(std::max(b[i], 1e-300));
        s += (la - lb) * (la - lb);
    }
    return std::sqrt(s);
}

struct FeatureOptions {
    int n_theta = kDefaultNTheta;
    double delta_r_frac = kDefaultDeltaRFrac;
    PatternSpeedOptions speed;
    PitchAngleOptions pitch;
};

// Composes the four estimators; never throws. Degenerate features are
// reported as 0 with their validity flag cleared.
inline PlasmaFeatures extract_features(const Movie& movie, double r_ring_px,
                                       const FeatureOptions& opts = {}) {
    PlasmaFeatures f;
    try {
        f.pattern_speed = pattern_speed(movie, r_ring_px, opts.n_theta, opts.speed);
    } catch (const std::exception&) {
        f.pattern_speed = 0.0;
        f.flag_omega = false;
    }
    try {
        f.pitch_angle = pitch_angle(movie, r_ring_px, opts.delta_r_frac, opts.n_theta, opts.pitch);
    } catch (const std::exception&) {
        f.pitch_angle = 0.0;
        f.flag_pitch = false;
    }
    try {
        f.asymmetry = asymmetry(movie, r_ring_px, opts.n_theta);
    } catch (const std::exception&) {
        f.asymmetry = 0.0;
        f.flag_asym = false;
    }
    try {
        f.rotation_slope = rotation_curve_slope(movie, r_ring_px, opts.n_theta, opts.speed);
    } catch (const std::exception&) {
        f.rotation_slope = 0.0;
        f.flag_slope = false;
    }
    return f;
}

}  // namespace bhflow

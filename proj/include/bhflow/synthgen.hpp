#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <iomanip>
#include <cstdio>
#include <string>
#include <vector>

#include "bhflow/errors.hpp"
#include "bhflow/features.hpp"
#include "bhflow/rng.hpp"
#include "bhflow/tensorio.hpp"

namespace bhflow {

// Parameters of one synthetic accretion-flow movie. The intensity model is a
// Gaussian ring carrying a static first-harmonic brightness asymmetry plus a
// two-armed log-spiral pattern rotating at a radius-dependent rate:
//
//   I(r,theta,t) = bg + env(r) * [ C*(1 + a*cos(theta - theta_bright))
//                    + B*cos(m*(theta - Omega(r)*t - ln(r/R)*tan(pitch))) ]+
//
// with env(r) = exp(-(r-R)^2 / 2 w^2), Omega(r) = omega_p*(r/R)^s and
// B = C*(1-a)/2 so the bracket stays positive. The spiral's angular offset
// between radii r1 < r2 is ln(r2/r1)*tan(pitch), which is exactly what the
// cross-correlation pitch estimator inverts.
struct FlowParams {
    double ring_radius_px = 16.0;
    double ring_width_px = 3.5;
    double omega_p = 0.04;        // rad/frame at the ring radius; sign = direction
    double pitch_angle = 0.5;     // radians in (0, pi/2)
    double asymmetry_ratio = 0.2; // A/C in [0, 1)
    double theta_bright = 1.0;    // phase of the bright side; sign encodes spin
    double rotation_slope = 0.0;  // exponent s in Omega(r) = omega_p*(r/R)^s
    double noise_level = 0.0;     // multiplicative log-normal sigma
    uint64_t seed = 0;

    void validate() const {
        if (!(ring_radius_px > 2.0 * ring_width_px))
            throw ArgumentError("FlowParams: ring_radius_px must exceed 2*ring_width_px");
        if (asymmetry_ratio < 0 || asymmetry_ratio >= 1)
            throw ArgumentError("FlowParams: asymmetry_ratio must be in [0,1)");
        if (!(pitch_angle > 0 && pitch_angle < M_PI / 2))
            throw ArgumentError("FlowParams: pitch_angle must be in (0, pi/2)");
    }
};

enum class SpinClass { Prograde, Retrograde };
enum class InclClass { NegFaceOn, NegEdgeOn, PosEdgeOn, PosFaceOn };

inline const char* to_string(SpinClass s) {
    return s == SpinClass::Prograde ? "prograde" : "retrograde";
}
inline const char* to_string(InclClass c) {
    switch (c) {
        case InclClass::NegFaceOn: return "neg_face_on";
        case InclClass::NegEdgeOn: return "neg_edge_on";
        case InclClass::PosEdgeOn: return "pos_edge_on";
        default: return "pos_face_on";
    }
}
inline SpinClass spin_from_string(const std::string& s) {
    if (s == "prograde") return SpinClass::Prograde;
    if (s == "retrograde") return SpinClass::Retrograde;
    throw FormatError("unknown spin class: " + s);
}
inline InclClass incl_from_string(const std::string& s) {
    if (s == "neg_face_on") return InclClass::NegFaceOn;
    if (s == "neg_edge_on") return InclClass::NegEdgeOn;
    if (s == "pos_edge_on") return InclClass::PosEdgeOn;
    if (s == "pos_face_on") return InclClass::PosFaceOn;
    throw FormatError("unknown inclination class: " + s);
}

// Face-on vs edge-on sub-classes are banded by asymmetry ratio.
constexpr double kEdgeOnAsymmetryThreshold = 0.2;

struct GroundTruthLabels {
    SpinClass spin_class = SpinClass::Prograde;
    InclClass incl_class = InclClass::PosFaceOn;
    PlasmaFeatures true_features;
};

inline GroundTruthLabels labels_for(const FlowParams& p) {
    GroundTruthLabels lb;
    lb.spin_class = p.theta_bright > 0 ? SpinClass::Prograde : SpinClass::Retrograde;
    bool edge = p.asymmetry_ratio >= kEdgeOnAsymmetryThreshold;
    if (p.omega_p >= 0)
        lb.incl_class = edge ? InclClass::PosEdgeOn : InclClass::PosFaceOn;
    else
        lb.incl_class = edge ? InclClass::NegEdgeOn : InclClass::NegFaceOn;
    lb.true_features.pattern_speed = p.omega_p;
    lb.true_features.pitch_angle = p.pitch_angle;
    lb.true_features.asymmetry = p.asymmetry_ratio;
    // Local derivative of omega_p*(r/R)^s with respect to r/R at the ring.
    lb.true_features.rotation_slope = p.omega_p * p.rotation_slope;
    return lb;
}

constexpr double kSynthBackground = 1e-4;
constexpr int kSpiralArms = 2;
// Field of view of a generated frame. With 64 px across, a 20 uas beam is a
// ~5.4 px sigma: heavy but non-obliterating blur, and within the baseline's
// PSF search grid.
constexpr double kSynthFovUas = 100.0;

inline std::pair<Movie, GroundTruthLabels> generate(const FlowParams& p, int n_frames, int H, int W) {
    p.validate();
    if (H < 64 || W < 64) throw ArgumentError("generate: dims must be >= 64");
    if (n_frames < 2) throw ArgumentError("generate: n_frames must be >= 2");

    const double cx = (W - 1) / 2.0, cy = (H - 1) / 2.0;
    const double R = p.ring_radius_px, w2 = 2.0 * p.ring_width_px * p.ring_width_px;
    const double C = 1.0;
    const double B = 0.5 * C * (1.0 - p.asymmetry_ratio);
    const double tanp = std::tan(p.pitch_angle);
    const double sig = p.noise_level;

    GaussianRng noise(p.seed);
    Movie m;
    m.dt_M = kDefaultDtM;
    m.frames.reserve(static_cast<size_t>(n_frames));
    for (int t = 0; t < n_frames; ++t) {
        Frame f;
        f.pixel_scale_uas = kSynthFovUas / W;
        f.pixels = Grid<float>(H, W);
        for (int r = 0; r < H; ++r) {
            double y = r - cy;
            for (int c = 0; c < W; ++c) {
                double x = c - cx;
                double rad = std::sqrt(x * x + y * y);
                double val = kSynthBackground;
                if (rad > 0.5) {
                    double env = std::exp(-(rad - R) * (rad - R) / w2);
                    if (env > 1e-12) {
                        double theta = std::atan2(y, x);
                        double omega_r = p.omega_p * std::pow(rad / R, p.rotation_slope);
                        double phase =
                            theta - omega_r * t - std::log(rad / R) * tanp;
                        double bracket = C * (1.0 + p.asymmetry_ratio * std::cos(theta - p.theta_bright)) +
                                         B * std::cos(kSpiralArms * phase);
                        if (bracket < 0) bracket = 0;
                        val += env * bracket;
                    }
                }
                if (sig > 0) val *= std::exp(sig * noise.normal() - 0.5 * sig * sig);
                f.pixels.at(r, c) = static_cast<float>(val);
            }
        }
        m.frames.push_back(std::move(f));
    }
    return {std::move(m), labels_for(p)};
}

// --- dataset generation ---

struct DatasetConfig {
    int n_movies = 32;
    int n_frames = 100;
    int height = 64;
    int width = 64;
    double noise_level = 0.05;
    uint64_t seed = 0;
    std::array<double, 3> split = {0.8, 0.1, 0.1};  // train/val/test frame fractions per movie
};

struct ManifestEntry {
    std::string path;
    FlowParams params;
    GroundTruthLabels labels;
    int n_train = 0, n_val = 0, n_test = 0;  // contiguous frame partition, in time order
};

// Draw parameters for one (spin, inclination) grid cell. The banding realizes
// a learnable mapping: inclination classes separate by pattern-speed sign and
// asymmetry band, spin classes by pitch-angle band (with the bright-side phase
// sign tracking spin, which is the labeling rule).
inline FlowParams sample_params(SpinClass spin, InclClass incl, const DatasetConfig& cfg,
                                GaussianRng& rng) {
    FlowParams p;
    p.ring_radius_px = 0.25 * std::min(cfg.height, cfg.width);
    p.ring_width_px = p.ring_radius_px / 4.5;
    double mag = rng.uniform_in(0.025, 0.05);
    bool positive = incl == InclClass::PosEdgeOn || incl == InclClass::PosFaceOn;
    p.omega_p = positive ? mag : -mag;
    bool edge = incl == InclClass::PosEdgeOn || incl == InclClass::NegEdgeOn;
    p.asymmetry_ratio = edge ? rng.uniform_in(0.25, 0.40) : rng.uniform_in(0.05, 0.15);
    p.pitch_angle = spin == SpinClass::Prograde ? rng.uniform_in(0.55, 0.85)
                                                : rng.uniform_in(0.20, 0.45);
    p.theta_bright = spin == SpinClass::Prograde ? rng.uniform_in(0.3, 2.8)
                                                 : rng.uniform_in(-2.8, -0.3);
    p.rotation_slope = rng.uniform_in(-1.0, 0.0);
    p.noise_level = cfg.noise_level;
    return p;
}

inline std::string manifest_header() {
    return "path,omega_p,pitch_angle,asym,slope,spin_class,incl_class,split";
}

inline std::string manifest_row(const ManifestEntry& e) {
    std::ostringstream os;
    os.precision(17);
    os << e.path << ',' << e.params.omega_p << ',' << e.params.pitch_angle << ','
       << e.params.asymmetry_ratio << ',' << e.params.rotation_slope << ','
       << to_string(e.labels.spin_class) << ',' << to_string(e.labels.incl_class) << ','
       << e.n_train << '/' << e.n_val << '/' << e.n_test;
    return os.str();
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest: " + path);
    std::string line;
    if (!std::getline(is, line)) throw FormatError("empty manifest: " + path);
    if (line != manifest_header()) throw FormatError("bad manifest header in " + path);
    std::vector<ManifestEntry> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        ManifestEntry e;
        std::getline(ls, e.path, ',');
        std::getline(ls, tok, ','); e.params.omega_p = std::stod(tok);
        std::getline(ls, tok, ','); e.params.pitch_angle = std::stod(tok);
        std::getline(ls, tok, ','); e.params.asymmetry_ratio = std::stod(tok);
        std::getline(ls, tok, ','); e.params.rotation_slope = std::stod(tok);
        std::getline(ls, tok, ','); e.labels.spin_class = spin_from_string(tok);
        std::getline(ls, tok, ','); e.labels.incl_class = incl_from_string(tok);
        if (!std::getline(ls, tok)) throw FormatError("short manifest row in " + path);
        if (std::sscanf(tok.c_str(), "%d/%d/%d", &e.n_train, &e.n_val, &e.n_test) != 3)
            throw FormatError("bad split column in " + path);
        e.labels.true_features.pattern_speed = e.params.omega_p;
        e.labels.true_features.pitch_angle = e.params.pitch_angle;
        e.labels.true_features.asymmetry = e.params.asymmetry_ratio;
        e.labels.true_features.rotation_slope = e.params.omega_p * e.params.rotation_slope;
        out.push_back(std::move(e));
    }
    return out;
}

// Writes movies plus a CSV manifest; returns the manifest path. Each movie's
// frames are partitioned into contiguous train/val/test ranges by the split
// fractions, recorded in the manifest's split column as counts "a/b/c".
inline std::string make_dataset(const DatasetConfig& cfg, const std::string& out_dir) {
    double fsum = cfg.split[0] + cfg.split[1] + cfg.split[2];
    if (std::abs(fsum - 1.0) > 1e-9) throw ArgumentError("make_dataset: split fractions must sum to 1");
    std::filesystem::create_directories(out_dir);

    static const SpinClass spins[2] = {SpinClass::Prograde, SpinClass::Retrograde};
    static const InclClass incls[4] = {InclClass::NegFaceOn, InclClass::NegEdgeOn,
                                       InclClass::PosEdgeOn, InclClass::PosFaceOn};
    std::vector<ManifestEntry> entries;
    for (int i = 0; i < cfg.n_movies; ++i) {
        uint64_t movie_seed = cfg.seed ^ static_cast<uint64_t>(i);
        GaussianRng rng(movie_seed);
        FlowParams p = sample_params(spins[i % 2], incls[(i / 2) % 4], cfg, rng);
        p.seed = movie_seed;
        auto [movie, labels] = generate(p, cfg.n_frames, cfg.height, cfg.width);
        std::ostringstream name;
        name << "movie_" << std::setw(4) << std::setfill('0') << i << ".bhmv";
        std::string path = (std::filesystem::path(out_dir) / name.str()).string();
        write_movie(movie, path);

        ManifestEntry e;
        e.path = path;
        e.params = p;
        e.labels = labels;
        e.n_train = static_cast<int>(std::llround(cfg.split[0] * cfg.n_frames));
        e.n_val = static_cast<int>(std::llround(cfg.split[1] * cfg.n_frames));
        e.n_test = cfg.n_frames - e.n_train - e.n_val;
        entries.push_back(std::move(e));
    }

    std::string manifest_path = (std::filesystem::path(out_dir) / "manifest.csv").string();
    std::ofstream os(manifest_path);
    if (!os) throw IoError("cannot write manifest: " + manifest_path);
    os << manifest_header() << "\n";
    for (const ManifestEntry& e : entries) os << manifest_row(e) << "\n";
    return manifest_path;
}

}  // namespace bhflow

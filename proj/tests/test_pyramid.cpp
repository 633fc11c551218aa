#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "bhflow/pyramid.hpp"

using namespace bhflow;

namespace {

Grid<double> random_grid(int h, int w, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Grid<double> g(h, w);
    for (auto& v : g.v) v = dist(rng);
    return g;
}

double dot(const Grid<double>& a, const Grid<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a.v[i] * b.v[i];
    return s;
}

}  // namespace

TEST_CASE("downscale averages 2x2 cells exactly") {
    Grid<double> g(2, 4);
    g.v = {1, 2, 3, 4, 5, 6, 7, 8};
    Grid<double> d = downscale(g);
    CHECK(d.at(0, 0) == 3.5);
    CHECK(d.at(0, 1) == 5.5);
    CHECK_THROWS_AS(downscale(random_grid(3, 4, 0)), ArgumentError);
}

TEST_CASE("upscale of a constant is that constant") {
    Grid<double> g(4, 4, 2.5);
    Grid<double> u = upscale(g);
    REQUIRE(u.rows == 8);
    for (double v : u.v) CHECK(v == doctest::Approx(2.5));
}

TEST_CASE("reconstruction identity over 50 random frames") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
        Grid<double> g = random_grid(32, 32, seed, 0.1, 2.0);
        PyramidStack st = build_pyramid(g, {0, 1, 2});
        // G_k = Upscale(G_{k+1}) + Lap_k at every requested level
        for (int k : {0, 1, 2}) {
            Grid<double> rec = upscale(st.gaussians[static_cast<size_t>(k) + 1]);
            const Grid<double>& lap = st.laplacians.at(k);
            const Grid<double>& gk = st.gaussians[static_cast<size_t>(k)];
            for (size_t i = 0; i < rec.size(); ++i) {
                double err = std::abs(rec.v[i] + lap.v[i] - gk.v[i]);
                CHECK(err <= 1e-6 * std::max(1.0, std::abs(gk.v[i])));
            }
        }
    }
}

TEST_CASE("pooling and upsampling adjoints satisfy the inner-product identity") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Grid<double> x = random_grid(16, 16, seed);
        Grid<double> y = random_grid(8, 8, seed + 100);
        CHECK(dot(downscale(x), y) == doctest::Approx(dot(x, adjoint_downscale(y))).epsilon(1e-12));

        Grid<double> y2 = random_grid(32, 32, seed + 200);
        CHECK(dot(upscale(x), y2) ==
              doctest::Approx(dot(x, adjoint_upscale(y2, 16, 16))).epsilon(1e-12));
    }
}

TEST_CASE("default loss spec carries the published weights") {
    LossSpec spec;
    CHECK(spec.levels == std::vector<int>{0, 1, 2});
    CHECK(spec.level_weights == std::vector<double>{1.0, 0.5, 0.25});
    CHECK(spec.flux_weight == 0.125);
    CHECK(spec.l1_share == 0.5);
}

TEST_CASE("loss spec round trips through its text form") {
    LossSpec spec;
    spec.levels = {0, 2};
    spec.level_weights = {0.7, 0.3};
    spec.flux_weight = 0.05;
    spec.l1_share = 0.25;
    std::istringstream is(spec.dump());
    LossSpec back = LossSpec::parse(is);
    CHECK(back.levels == spec.levels);
    CHECK(back.level_weights == spec.level_weights);
    CHECK(back.flux_weight == spec.flux_weight);
    CHECK(back.l1_share == spec.l1_share);
}

TEST_CASE("loss spec validation rejects malformed configs") {
    LossSpec spec;
    spec.levels = {2, 0};
    CHECK_THROWS_AS(spec.validate(), ArgumentError);
    spec = LossSpec{};
    spec.level_weights = {1.0};
    CHECK_THROWS_AS(spec.validate(), ArgumentError);
    spec = LossSpec{};
    spec.l1_share = 1.5;
    CHECK_THROWS_AS(spec.validate(), ArgumentError);
}

TEST_CASE("identical inputs give zero loss and zero gradient") {
    Grid<double> g = random_grid(32, 32, 7);
    LossResult res = multiscale_loss(g, g, LossSpec{});
    CHECK(res.loss == 0.0);
    for (double v : res.grad.v) CHECK(v == 0.0);
}

TEST_CASE("loss gradient matches central finite differences") {
    // f64 path, h = 1e-4, on coordinates with non-negligible gradient
    const double h = 1e-4;
    LossSpec spec;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Grid<double> pred = random_grid(32, 32, seed * 2 + 1);
        Grid<double> target = random_grid(32, 32, seed * 2 + 2);
        LossResult res = multiscale_loss(pred, target, spec);
        double max_rel = 0.0;
        for (size_t i = 0; i < pred.size(); i += 17) {  // subsample for speed
            if (std::abs(res.grad.v[i]) <= 1e-6) continue;
            Grid<double> p = pred;
            p.v[i] += h;
            double up = multiscale_loss(p, target, spec).loss;
            p.v[i] -= 2 * h;
            double down = multiscale_loss(p, target, spec).loss;
            double fd = (up - down) / (2 * h);
            max_rel = std::max(max_rel, std::abs(fd - res.grad.v[i]) / std::abs(res.grad.v[i]));
        }
        CHECK(max_rel < 1e-4);
    }
}

TEST_CASE("loss handles non-divisible shapes via padding without contribution") {
    Grid<double> pred = random_grid(30, 30, 3);
    Grid<double> target = random_grid(30, 30, 4);
    LossResult res = multiscale_loss(pred, target, LossSpec{});
    CHECK(res.loss > 0.0);
    CHECK(res.grad.rows == 30);
    // identical non-divisible inputs still give exactly zero
    LossResult zero = multiscale_loss(pred, pred, LossSpec{});
    CHECK(zero.loss == 0.0);
}

TEST_CASE("l2-only preset reduces to plain mse") {
    Grid<double> pred = random_grid(16, 16, 5);
    Grid<double> target = random_grid(16, 16, 6);
    LossResult res = multiscale_loss(pred, target, LossSpec::l2_only());
    double mse = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        double d = pred.v[i] - target.v[i];
        mse += d * d;
    }
    mse /= static_cast<double>(pred.size());
    CHECK(res.loss == doctest::Approx(mse).epsilon(1e-12));
}

TEST_CASE("each loss term is isolable on constructed inputs") {
    // flux term alone: constant offset lives in the flux and coarse bands;
    // disabling flux_weight must change the loss by exactly w_flux * |delta|
    // blended per the l1/l2 shares on the scalar difference.
    Grid<double> target(32, 32, 0.0);
    Grid<double> pred(32, 32, 0.1);
    LossSpec with_flux;
    LossSpec no_flux = with_flux;
    no_flux.flux_weight = 0.0;
    double lf = multiscale_loss(pred, target, with_flux).loss;
    double l0 = multiscale_loss(pred, target, no_flux).loss;
    double expected_flux = 0.125 * (0.5 * 0.1 + 0.5 * 0.01);
    CHECK(lf - l0 == doctest::Approx(expected_flux).epsilon(1e-9));

    // a pure fine-scale checkerboard has zero coarse bands and zero flux:
    // only level 0 contributes, at weight 1
    Grid<double> cb(32, 32);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) cb.at(r, c) = ((r + c) % 2) ? 0.05 : -0.05;
    LossSpec only_l0 = with_flux;
    double full = multiscale_loss(cb, target, with_flux).loss;
    only_l0.levels = {0};
    only_l0.level_weights = {1.0};
    only_l0.flux_weight = 0.0;
    double fine = multiscale_loss(cb, target, only_l0).loss;
    CHECK(full == doctest::Approx(fine).epsilon(1e-9));
}

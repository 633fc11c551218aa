#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "bhflow/gbt.hpp"

using namespace bhflow;
namespace fs = std::filesystem;

namespace {

// Three blobs separable by axis-aligned thresholds on feature 0 and 1.
void toy_set(int per_class, uint64_t seed, FeatureTable& X, std::vector<int>& y) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    const double centers[3][2] = {{0.0, 0.0}, {4.0, 0.0}, {0.0, 4.0}};
    X = FeatureTable(3 * per_class, 2);
    y.assign(static_cast<size_t>(3 * per_class), 0);
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < per_class; ++i) {
            int r = k * per_class + i;
            X.at(r, 0) = centers[k][0] + jitter(rng);
            X.at(r, 1) = centers[k][1] + jitter(rng);
            y[static_cast<size_t>(r)] = k;
        }
}

const std::vector<std::string> kThree{"a", "b", "c"};

double train_accuracy(const Booster& b, const FeatureTable& X, const std::vector<int>& y) {
    int ok = 0;
    for (int r = 0; r < X.n_rows; ++r)
        if (predict_class(b, X.row(r)) == y[static_cast<size_t>(r)]) ++ok;
    return static_cast<double>(ok) / X.n_rows;
}

}  // namespace

TEST_CASE("config defaults and validation") {
    BoostConfig cfg;
    CHECK(cfg.n_rounds == 1000);
    CHECK(cfg.max_depth == 6);
    CHECK(cfg.learning_rate == 0.05);
    CHECK(cfg.subsample == 0.8);
    CHECK(cfg.colsample == 0.8);
    CHECK_NOTHROW(cfg.validate());
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
    cfg = BoostConfig{};
    cfg.subsample = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("untrained model predicts the uniform distribution") {
    Booster b;
    b.n_classes = 4;
    b.n_features = 2;
    double x[2] = {1.0, 2.0};
    auto p = predict_proba(b, x);
    REQUIRE(p.size() == 4);
    for (double q : p) CHECK(q == 0.25);

    FeatureTable X;
    std::vector<int> y;
    toy_set(10, 1, X, y);
    BoostConfig cfg;
    cfg.n_rounds = 0;
    Booster trained0 = fit(X, y, kThree, cfg);
    auto p0 = predict_proba(trained0, X.row(0));
    for (double q : p0) CHECK(q == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("training requires at least two observed classes") {
    FeatureTable X(8, 2);
    std::vector<int> y(8, 0);  // all one class
    CHECK_THROWS_AS(fit(X, y, kThree, BoostConfig{}), DataError);
    std::vector<int> bad_len(5, 0);
    CHECK_THROWS_AS(fit(X, bad_len, kThree, BoostConfig{}), ArgumentError);
}

TEST_CASE("separable toy set reaches perfect accuracy within 10 rounds") {
    FeatureTable X;
    std::vector<int> y;
    toy_set(20, 2, X, y);
    BoostConfig cfg;
    cfg.n_rounds = 10;
    cfg.max_depth = 3;
    cfg.learning_rate = 0.5;
    cfg.subsample = 1.0;
    cfg.colsample = 1.0;
    Booster b = fit(X, y, kThree, cfg);
    CHECK(train_accuracy(b, X, y) == 1.0);
}

TEST_CASE("probabilities are a distribution on every row") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    FeatureTable X(1000, 3);
    std::vector<int> y(1000);
    for (int r = 0; r < 1000; ++r) {
        for (int c = 0; c < 3; ++c) X.at(r, c) = dist(rng);
        y[static_cast<size_t>(r)] = (X.at(r, 0) + X.at(r, 1) > 0) ? 1 : 0;
    }
    BoostConfig cfg;
    cfg.n_rounds = 20;
    Booster b = fit(X, y, {"neg", "pos"}, cfg);
    for (int r = 0; r < X.n_rows; ++r) {
        auto p = predict_proba(b, X.row(r));
        double s = 0.0;
        for (double q : p) {
            CHECK(q >= 0.0);
            s += q;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("full-sample training log-loss is monotone over rounds") {
    FeatureTable X;
    std::vector<int> y;
    toy_set(25, 3, X, y);
    BoostConfig cfg;
    cfg.n_rounds = 30;
    cfg.subsample = 1.0;
    cfg.colsample = 1.0;
    cfg.learning_rate = 0.2;
    Booster b = fit(X, y, kThree, cfg);
    REQUIRE(!b.rounds.empty());
    Booster partial = b;
    partial.rounds.clear();
    double prev = log_loss(partial, X, y);
    CHECK(prev == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    for (const auto& round : b.rounds) {
        partial.rounds.push_back(round);
        double cur = log_loss(partial, X, y);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("argmax is invariant to positive feature scaling") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        FeatureTable X;
        std::vector<int> y;
        toy_set(15, 100 + seed, X, y);
        BoostConfig cfg;
        cfg.n_rounds = 15;
        cfg.subsample = 1.0;
        cfg.colsample = 1.0;
        cfg.seed = seed;
        Booster b = fit(X, y, kThree, cfg);

        FeatureTable Xs = X;
        const double scale[2] = {4.0, 0.25};  // powers of two: exact rescale
        for (int r = 0; r < X.n_rows; ++r)
            for (int c = 0; c < 2; ++c) Xs.at(r, c) = X.at(r, c) * scale[c];
        BoostConfig cfg2 = cfg;
        Booster bs = fit(Xs, y, kThree, cfg2);
        for (int r = 0; r < X.n_rows; ++r)
            CHECK(predict_class(b, X.row(r)) == predict_class(bs, Xs.row(r)));
    }
}

TEST_CASE("importance is normalized and finds the informative feature") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    FeatureTable X(200, 3);
    std::vector<int> y(200);
    for (int r = 0; r < 200; ++r) {
        for (int c = 0; c < 3; ++c) X.at(r, c) = dist(rng);
        y[static_cast<size_t>(r)] = X.at(r, 0) > 0 ? 1 : 0;  // only feature 0 matters
    }
    BoostConfig cfg;
    cfg.n_rounds = 20;
    cfg.subsample = 1.0;
    cfg.colsample = 1.0;
    Booster b = fit(X, y, {"neg", "pos"}, cfg);
    auto imp = importance(b);
    REQUIRE(imp.size() == 3);
    double s = 0.0;
    for (double v : imp) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(imp[0] > 0.9);
}

TEST_CASE("bootstrap ensembles are deterministic and validated") {
    FeatureTable X;
    std::vector<int> y;
    toy_set(10, 4, X, y);
    BoostConfig cfg;
    cfg.n_rounds = 5;
    cfg.max_depth = 3;
    auto e1 = bootstrap_ensemble(X, y, kThree, cfg, 4, 0.8);
    auto e2 = bootstrap_ensemble(X, y, kThree, cfg, 4, 0.8);
    REQUIRE(e1.models.size() == 4);
    for (int r = 0; r < X.n_rows; ++r)
        for (size_t m = 0; m < e1.models.size(); ++m) {
            auto p1 = predict_proba(e1.models[m], X.row(r));
            auto p2 = predict_proba(e2.models[m], X.row(r));
            for (size_t k = 0; k < p1.size(); ++k) CHECK(p1[k] == p2[k]);
        }

    FeatureTable tiny(5, 2);
    std::vector<int> ty(5, 0);
    CHECK_THROWS_AS(bootstrap_ensemble(tiny, ty, kThree, cfg), ArgumentError);
    CHECK_THROWS_AS(bootstrap_ensemble(X, y, kThree, cfg, 0), ArgumentError);
    CHECK_THROWS_AS(bootstrap_ensemble(X, y, kThree, cfg, 4, 1.5), ArgumentError);
}

TEST_CASE("identical models give exactly zero epistemic uncertainty") {
    FeatureTable X;
    std::vector<int> y;
    toy_set(10, 5, X, y);
    BoostConfig cfg;
    cfg.n_rounds = 8;
    cfg.subsample = 1.0;
    cfg.colsample = 1.0;
    Booster b = fit(X, y, kThree, cfg);
    BoostedEnsemble ens;
    ens.class_names = kThree;
    ens.models = {b, b, b};
    auto rep = uncertainty(ens, X, y);
    CHECK(rep.epistemic == 0.0);
    CHECK(rep.accuracy == 1.0);
    CHECK(rep.mean_confidence > 0.5);
}

TEST_CASE("uniform two-class ensemble has aleatoric entropy ln 2") {
    Booster b;
    b.n_classes = 2;
    b.n_features = 2;
    b.class_names = {"x", "y"};
    BoostedEnsemble ens;
    ens.class_names = b.class_names;
    ens.models = {b};
    FeatureTable X(6, 2);
    std::vector<int> y(6, 0);
    auto rep = uncertainty(ens, X, y);
    CHECK(rep.aleatoric == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(rep.epistemic == 0.0);
}

TEST_CASE("model files round trip") {
    FeatureTable X;
    std::vector<int> y;
    toy_set(12, 6, X, y);
    BoostConfig cfg;
    cfg.n_rounds = 6;
    auto ens = bootstrap_ensemble(X, y, kThree, cfg, 3, 0.8);
    std::string path = (fs::temp_directory_path() / "m.bhgb").string();
    save_ensemble(ens.models, path);
    auto back = load_ensemble(path);
    REQUIRE(back.size() == 3);
    for (size_t m = 0; m < back.size(); ++m) {
        CHECK(back[m].class_names == ens.models[m].class_names);
        for (int r = 0; r < X.n_rows; ++r) {
            auto p1 = predict_proba(ens.models[m], X.row(r));
            auto p2 = predict_proba(back[m], X.row(r));
            for (size_t k = 0; k < p1.size(); ++k) CHECK(p1[k] == p2[k]);
        }
    }

    // single-model convenience wrappers share the format
    std::string single = (fs::temp_directory_path() / "one.bhgb").string();
    save_booster(ens.models[0], single);
    Booster lb = load_booster(single);
    for (int r = 0; r < X.n_rows; ++r)
        CHECK(predict_class(lb, X.row(r)) == predict_class(ens.models[0], X.row(r)));

    std::string bad = (fs::temp_directory_path() / "bad.bhgb").string();
    std::ofstream(bad, std::ios::binary) << "XXXX\x01\x00\x00\x00";
    CHECK_THROWS_AS(load_ensemble(bad), FormatError);
    std::string trunc = (fs::temp_directory_path() / "trunc.bhgb").string();
    fs::copy_file(path, trunc, fs::copy_options::overwrite_existing);
    fs::resize_file(trunc, fs::file_size(trunc) / 2);
    CHECK_THROWS_AS(load_ensemble(trunc), std::runtime_error);
    for (const auto& p : {path, single, bad, trunc}) std::remove(p.c_str());
}

TEST_CASE("imputer fills invalid entries with medians and flags them") {
    FeatureTable V(5, 2);
    std::vector<std::vector<bool>> valid(5, std::vector<bool>(2, true));
    const double col0[5] = {1.0, 3.0, 2.0, 100.0, 4.0};
    const double col1[5] = {10.0, 20.0, 30.0, 40.0, 50.0};
    for (int r = 0; r < 5; ++r) {
        V.at(r, 0) = col0[r];
        V.at(r, 1) = col1[r];
    }
    valid[3][0] = false;  // 100.0 is junk and must not pollute the median
    valid[0][1] = false;
    valid[1][1] = false;

    Imputer imp;
    imp.fit(V, valid);
    CHECK(imp.medians[0] == 2.5);   // median of {1,3,2,4}
    CHECK(imp.medians[1] == 40.0);  // median of {30,40,50}

    FeatureTable out = imp.transform(V, valid);
    REQUIRE(out.n_cols == 4);
    CHECK(out.at(3, 0) == 2.5);
    CHECK(out.at(3, 2) == 1.0);  // indicator set for the imputed cell
    CHECK(out.at(2, 0) == 2.0);
    CHECK(out.at(2, 2) == 0.0);
    CHECK(out.at(0, 1) == 40.0);
    CHECK(out.at(0, 3) == 1.0);

    FeatureTable wrong(5, 3);
    std::vector<std::vector<bool>> wv(5, std::vector<bool>(3, true));
    CHECK_THROWS_AS(imp.transform(wrong, wv), ArgumentError);
}

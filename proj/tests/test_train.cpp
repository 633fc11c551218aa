#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bhflow/synthgen.hpp"
#include "bhflow/train.hpp"

using namespace bhflow;
namespace fs = std::filesystem;

namespace {

std::vector<char> slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string make_tiny_dataset(int movies, int frames, uint64_t seed, const char* name) {
    DatasetConfig cfg;
    cfg.n_movies = movies;
    cfg.n_frames = frames;
    cfg.seed = seed;
    std::string dir = (fs::temp_directory_path() / name).string();
    fs::remove_all(dir);
    return make_dataset(cfg, dir);
}

}  // namespace

TEST_CASE("cosine schedule endpoints and midpoint") {
    CHECK(cosine_lr(1e-3, 0, 100) == doctest::Approx(1e-3));
    CHECK(cosine_lr(1e-3, 50, 100) == doctest::Approx(5e-4));
    CHECK(cosine_lr(1e-3, 100, 100) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cosine_lr(1e-3, 0, 1) == 1e-3);
}

TEST_CASE("optimizer matches a hand-stepped scalar reference") {
    std::vector<float> w{1.0f}, g{0.5f};
    std::vector<ParamRef<float>> params{{"w", &w, &g}};
    AdamW<float> opt(params, 0.01);
    const double lr = 0.1;
    opt.step(params, lr);

    // one AdamW step by hand: m=0.05, v=2.5e-4, mhat=0.5, vhat=0.25
    double expect = 1.0 - lr * 0.5 / (std::sqrt(0.25) + 1e-8) - lr * 0.01 * 1.0;
    CHECK(static_cast<double>(w[0]) == doctest::Approx(expect).epsilon(1e-6));

    // decoupled decay shrinks weights even at zero gradient
    std::vector<float> w2{2.0f}, g2{0.0f};
    std::vector<ParamRef<float>> p2{{"w", &w2, &g2}};
    AdamW<float> opt2(p2, 0.5);
    opt2.step(p2, 0.1);
    CHECK(w2[0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0));
}

TEST_CASE("checkpoint save/load/save is byte stable") {
    NetConfig nc;
    nc.depth = 1;
    nc.base_channels = 2;
    UNet<float> net(nc);
    net.init(9);
    CheckpointMeta meta;
    meta.net = nc;
    meta.step = 17;

    std::string p1 = (fs::temp_directory_path() / "ck1.bhck").string();
    std::string p2 = (fs::temp_directory_path() / "ck2.bhck").string();
    auto params = net.params();
    AdamW<float> opt(params, 1e-4);
    save_checkpoint(net, meta, &opt, p1);

    auto loaded = load_checkpoint<float>(p1);
    CHECK(loaded.meta.net.depth == 1);
    CHECK(loaded.meta.net.base_channels == 2);
    CHECK(loaded.meta.step == 17);

    auto params2 = loaded.net->params();
    AdamW<float> opt2(params2, 1e-4);
    save_checkpoint(*loaded.net, loaded.meta, &opt2, p2);
    CHECK(slurp(p1) == slurp(p2));

    // loaded net computes identical outputs
    Tensor<float> x(1, 1, 16, 16);
    for (size_t i = 0; i < x.v.size(); ++i) x.v[i] = static_cast<float>(i % 7) * 0.1f;
    Tensor<float> y1 = net.forward(x, false);
    Tensor<float> y2 = loaded.net->forward(x, false);
    for (size_t i = 0; i < y1.v.size(); ++i) CHECK(y1.v[i] == y2.v[i]);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("checkpoint loader rejects corrupt files") {
    std::string p = (fs::temp_directory_path() / "ck_bad.bhck").string();
    std::ofstream(p, std::ios::binary) << "WXYZ1234";
    CHECK_THROWS_AS(load_checkpoint<float>(p), FormatError);
    std::remove(p.c_str());
}

TEST_CASE("short training run reduces loss and logs a curve") {
    std::string man = make_tiny_dataset(4, 20, 3, "bh_train_ds");
    auto manifest = read_manifest(man);
    NetConfig nc;
    nc.depth = 1;
    nc.base_channels = 4;
    TrainConfig tc;
    tc.epochs = 8;
    tc.batch_size = 8;
    tc.seed = 1;
    std::string log = (fs::temp_directory_path() / "curve.csv").string();
    auto result = train<float>(manifest, nc, tc, LossSpec{}, log);
    REQUIRE(result.train_losses.size() == 8);
    CHECK(result.train_losses.back() < result.train_losses.front());
    CHECK(result.val_losses.back() < result.val_losses.front());

    std::ifstream is(log);
    std::string header;
    std::getline(is, header);
    CHECK(header == "epoch,train_loss,val_loss,lr");
    int lines = 0;
    for (std::string line; std::getline(is, line);)
        if (!line.empty()) ++lines;
    CHECK(lines == 8);
    std::remove(log.c_str());
}

TEST_CASE("training is deterministic under a fixed seed") {
    std::string man = make_tiny_dataset(2, 14, 4, "bh_det_ds");
    auto manifest = read_manifest(man);
    NetConfig nc;
    nc.depth = 1;
    nc.base_channels = 2;
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 4;
    tc.seed = 5;
    auto r1 = train<float>(manifest, nc, tc, LossSpec{});
    auto r2 = train<float>(manifest, nc, tc, LossSpec{});
    auto p1 = r1.net->params(), p2 = r2.net->params();
    for (size_t i = 0; i < p1.size(); ++i)
        for (size_t j = 0; j < p1[i].value->size(); ++j)
            CHECK((*p1[i].value)[j] == (*p2[i].value)[j]);
}

TEST_CASE("rollout produces the requested number of finite frames") {
    NetConfig nc;
    nc.depth = 1;
    nc.base_channels = 2;
    UNet<float> net(nc);
    net.init(2);
    Frame x0;
    x0.pixels = Grid<float>(16, 16, 0.5f);
    Movie m = rollout(net, x0, 7);
    CHECK(m.frames.size() == 7);
    for (const Frame& f : m.frames) {
        CHECK(f.pixels.all_finite());
        CHECK(f.pixels.min_value() >= 0.0f);
    }
}

TEST_CASE("flux gate reports the failing step") {
    NetConfig nc;
    nc.depth = 1;
    nc.base_channels = 2;
    UNet<float> net(nc);
    net.init(2);
    Frame x0;
    x0.pixels = Grid<float>(16, 16, 0.5f);
    // an untrained net drifts immediately; a tight gate must fire and carry
    // the step index
    try {
        rollout(net, x0, 50, kDefaultFloorEps, 1e-6);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.failing_step >= 0);
        CHECK(e.failing_step < 50);
    }
}

TEST_CASE("rollout validates the step count") {
    NetConfig nc;
    nc.depth = 1;
    nc.base_channels = 2;
    UNet<float> net(nc);
    net.init(1);
    Frame x0;
    x0.pixels = Grid<float>(16, 16, 0.1f);
    CHECK_THROWS_AS(rollout(net, x0, 0), ArgumentError);
}

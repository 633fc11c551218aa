#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "bhflow/errors.hpp"
#include "bhflow/nn.hpp"
#include "bhflow/pyramid.hpp"
#include "bhflow/synthgen.hpp"
#include "bhflow/tensorio.hpp"

namespace bhflow {

struct TrainConfig {
    int batch_size = 16;        // production-scale: 128
    double lr = 1e-3;
    double weight_decay = 1e-4;
    int epochs = 100;           // production-scale: 500
    int pair_stride = 1;
    double floor_eps = kDefaultFloorEps;
    uint64_t seed = 0;

    void validate() const {
        if (!(lr > 0)) throw ArgumentError("TrainConfig: lr must be > 0");
        if (epochs < 1) throw ArgumentError("TrainConfig: epochs must be >= 1");
        if (batch_size < 1) throw ArgumentError("TrainConfig: batch_size must be >= 1");
    }
};

// Cosine annealing over the full run; epoch 0 returns the base rate.
inline double cosine_lr(double base_lr, int epoch, int total_epochs) {
    if (total_epochs <= 1) return base_lr;
    return base_lr * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(epoch) / total_epochs));
}

// Adaptive-moment optimizer with decoupled weight decay.
template <class T>
struct AdamW {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double weight_decay;
    int64_t step_count = 0;
    std::vector<std::vector<double>> m, v;

    explicit AdamW(const std::vector<ParamRef<T>>& params, double wd) : weight_decay(wd) {
        for (const auto& p : params) {
            m.emplace_back(p.value->size(), 0.0);
            v.emplace_back(p.value->size(), 0.0);
        }
    }

    void step(const std::vector<ParamRef<T>>& params, double lr) {
        ++step_count;
        double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (size_t pi = 0; pi < params.size(); ++pi) {
            auto& w = *params[pi].value;
            auto& g = *params[pi].grad;
            for (size_t i = 0; i < w.size(); ++i) {
                double gi = g[i];
                m[pi][i] = beta1 * m[pi][i] + (1 - beta1) * gi;
                v[pi][i] = beta2 * v[pi][i] + (1 - beta2) * gi * gi;
                double mhat = m[pi][i] / bc1;
                double vhat = v[pi][i] / bc2;
                double wd_term = lr * weight_decay * static_cast<double>(w[i]);
                w[i] = static_cast<T>(static_cast<double>(w[i]) - lr * mhat / (std::sqrt(vhat) + eps) -
                                      wd_term);
            }
        }
    }
};

// --- checkpoint file: magic "BHCK" ---

struct CheckpointMeta {
    NetConfig net;
    TrainConfig train;
    LossSpec loss;
    int64_t step = 0;
};

namespace detail {

inline void write_str(std::ostream& os, const std::string& s) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_str(std::istream& is) {
    uint32_t n = read_pod<uint32_t>(is, "string length");
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw TruncationError("truncated string");
    return s;
}

inline void write_tensor_record(std::ostream& os, const std::string& name,
                                const std::vector<float>& data) {
    write_str(os, name);
    write_pod<uint32_t>(os, 1);  // rank
    write_pod<uint32_t>(os, static_cast<uint32_t>(data.size()));
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(float)));
}

}  // namespace detail

template <class T>
void save_checkpoint(UNet<T>& net, const CheckpointMeta& meta, AdamW<T>* opt,
                     const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write("BHCK", 4);
    detail::write_pod<uint32_t>(os, 1);
    std::ostringstream cfg;
    cfg.precision(17);
    cfg << "depth=" << meta.net.depth << "\nbase_channels=" << meta.net.base_channels
        << "\nbatch_size=" << meta.train.batch_size << "\nlr=" << meta.train.lr
        << "\nweight_decay=" << meta.train.weight_decay << "\nepochs=" << meta.train.epochs
        << "\npair_stride=" << meta.train.pair_stride << "\nfloor_eps=" << meta.train.floor_eps
        << "\nseed=" << meta.train.seed << "\nstep=" << meta.step << "\nloss." << "begin\n"
        << meta.loss.dump() << "loss.end\n";
    detail::write_str(os, cfg.str());

    auto params = net.params();
    auto stats = net.norm_stats();
    uint32_t n_tensors = static_cast<uint32_t>(params.size() + stats.size() +
                                               (opt ? 2 * params.size() : 0));
    detail::write_pod<uint32_t>(os, n_tensors);
    auto dump = [&](const std::string& name, const std::vector<T>& data) {
        std::vector<float> f(data.size());
        for (size_t i = 0; i < data.size(); ++i) f[i] = static_cast<float>(data[i]);
        detail::write_tensor_record(os, name, f);
    };
    for (const auto& p : params) dump(p.name, *p.value);
    for (const auto& s : stats) dump(s.name, *s.value);
    if (opt) {
        for (size_t pi = 0; pi < params.size(); ++pi) {
            std::vector<float> mf(opt->m[pi].begin(), opt->m[pi].end());
            std::vector<float> vf(opt->v[pi].begin(), opt->v[pi].end());
            detail::write_tensor_record(os, "adam.m." + params[pi].name, mf);
            detail::write_tensor_record(os, "adam.v." + params[pi].name, vf);
        }
    }
    if (!os) throw IoError("checkpoint write failed: " + path);
}

template <class T>
struct LoadedCheckpoint {
    std::unique_ptr<UNet<T>> net;
    CheckpointMeta meta;
    std::map<std::string, std::vector<float>> extra;  // optimizer moments, if present
};

template <class T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "BHCK", 4) != 0) throw FormatError("bad checkpoint magic in " + path);
    uint32_t version = detail::read_pod<uint32_t>(is, "version");
    if (version != 1) throw FormatError("unsupported checkpoint version");
    std::string cfg = detail::read_str(is);

    LoadedCheckpoint<T> out;
    std::istringstream cs(cfg);
    std::string line, loss_block;
    bool in_loss = false;
    while (std::getline(cs, line)) {
        if (line == "loss.begin") { in_loss = true; continue; }
        if (line == "loss.end") { in_loss = false; continue; }
        if (in_loss) { loss_block += line + "\n"; continue; }
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "depth") out.meta.net.depth = std::stoi(val);
        else if (key == "base_channels") out.meta.net.base_channels = std::stoi(val);
        else if (key == "batch_size") out.meta.train.batch_size = std::stoi(val);
        else if (key == "lr") out.meta.train.lr = std::stod(val);
        else if (key == "weight_decay") out.meta.train.weight_decay = std::stod(val);
        else if (key == "epochs") out.meta.train.epochs = std::stoi(val);
        else if (key == "pair_stride") out.meta.train.pair_stride = std::stoi(val);
        else if (key == "floor_eps") out.meta.train.floor_eps = std::stod(val);
        else if (key == "seed") out.meta.train.seed = std::stoull(val);
        else if (key == "step") out.meta.step = std::stoll(val);
    }
    {
        std::istringstream ls(loss_block);
        out.meta.loss = LossSpec::parse(ls);
    }
    out.net = std::make_unique<UNet<T>>(out.meta.net);

    std::map<std::string, std::vector<float>> tensors;
    uint32_t n_tensors = detail::read_pod<uint32_t>(is, "tensor count");
    for (uint32_t i = 0; i < n_tensors; ++i) {
        std::string name = detail::read_str(is);
        uint32_t rank = detail::read_pod<uint32_t>(is, "rank");
        size_t total = 1;
        for (uint32_t d = 0; d < rank; ++d) total *= detail::read_pod<uint32_t>(is, "dim");
        std::vector<float> data(total);
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(total * sizeof(float)));
        if (!is) throw TruncationError("truncated tensor data in " + path);
        tensors.emplace(std::move(name), std::move(data));
    }
    auto restore = [&](const std::vector<ParamRef<T>>& refs) {
        for (const auto& r : refs) {
            auto it = tensors.find(r.name);
            if (it == tensors.end()) throw FormatError("missing tensor " + r.name + " in " + path);
            if (it->second.size() != r.value->size())
                throw FormatError("size mismatch for tensor " + r.name + " in " + path);
            for (size_t i = 0; i < it->second.size(); ++i)
                (*r.value)[i] = static_cast<T>(it->second[i]);
            tensors.erase(it);
        }
    };
    restore(out.net->params());
    restore(out.net->norm_stats());
    out.extra = std::move(tensors);
    return out;
}

// --- training ---

struct TrainPair {
    int movie = 0;
    int t = 0;  // predicts frame t + stride from frame t
};

template <class T>
struct TrainResult {
    std::unique_ptr<UNet<T>> net;
    std::vector<double> train_losses;
    std::vector<double> val_losses;
};

namespace detail {

template <class T>
Tensor<T> batch_from(const std::vector<Grid<double>>& frames, const std::vector<size_t>& idx) {
    Tensor<T> x(static_cast<int>(idx.size()), 1, frames[idx[0]].rows, frames[idx[0]].cols);
    for (size_t b = 0; b < idx.size(); ++b)
        for (size_t i = 0; i < frames[idx[b]].size(); ++i)
            x.v[b * frames[idx[b]].size() + i] = static_cast<T>(frames[idx[b]].v[i]);
    return x;
}

}  // namespace detail

// Trains on consecutive (x_t -> x_{t+stride}) pairs from each movie's train
// partition, with per-epoch validation loss from the val partition. Writes a
// CSV log `epoch,train_loss,val_loss,lr` when log_path is non-empty.
template <class T>
TrainResult<T> train(const std::vector<ManifestEntry>& manifest, const NetConfig& net_cfg,
                     const TrainConfig& cfg, const LossSpec& loss_spec,
                     const std::string& log_path = "", const std::string& checkpoint_path = "") {
    net_cfg.validate();
    cfg.validate();
    loss_spec.validate();

    // Cache normalized frames; record pair indices per split.
    std::vector<std::vector<Grid<double>>> movies;  // normalized log-space frames
    std::vector<TrainPair> train_pairs, val_pairs;
    for (size_t mi = 0; mi < manifest.size(); ++mi) {
        Movie mv = read_movie(manifest[mi].path);
        std::vector<Grid<double>> nf;
        nf.reserve(mv.frames.size());
        for (const Frame& f : mv.frames) nf.push_back(normalize(f, cfg.floor_eps).pixels);
        const int n_train = manifest[mi].n_train, n_val = manifest[mi].n_val;
        for (int t = 0; t + cfg.pair_stride < n_train; ++t)
            train_pairs.push_back({static_cast<int>(mi), t});
        for (int t = n_train; t + cfg.pair_stride < n_train + n_val; ++t)
            val_pairs.push_back({static_cast<int>(mi), t});
        movies.push_back(std::move(nf));
    }
    if (train_pairs.empty()) throw DataError("train: empty train split");

    auto result = TrainResult<T>{};
    result.net = std::make_unique<UNet<T>>(net_cfg);
    result.net->init(cfg.seed);
    auto params = result.net->params();
    AdamW<T> opt(params, cfg.weight_decay);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw IoError("cannot open training log: " + log_path);
        log << "epoch,train_loss,val_loss,lr\n";
    }

    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5bd1e995ULL);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);
        deterministic_shuffle(train_pairs, shuffle_rng);
        double epoch_loss = 0.0;
        size_t n_samples = 0;
        for (size_t start = 0; start < train_pairs.size(); start += static_cast<size_t>(cfg.batch_size)) {
            size_t end = std::min(train_pairs.size(), start + static_cast<size_t>(cfg.batch_size));
            size_t bs = end - start;
            if (bs < 2 && train_pairs.size() > 1) continue;  // batch-norm needs sane statistics
            // assemble batch
            const Grid<double>& proto = movies[static_cast<size_t>(train_pairs[start].movie)][0];
            Tensor<T> x(static_cast<int>(bs), 1, proto.rows, proto.cols);
            std::vector<const Grid<double>*> targets(bs);
            for (size_t b = 0; b < bs; ++b) {
                const TrainPair& p = train_pairs[start + b];
                const auto& frames = movies[static_cast<size_t>(p.movie)];
                const Grid<double>& src = frames[static_cast<size_t>(p.t)];
                for (size_t i = 0; i < src.size(); ++i) x.v[b * src.size() + i] = static_cast<T>(src.v[i]);
                targets[b] = &frames[static_cast<size_t>(p.t + cfg.pair_stride)];
            }
            Tensor<T> pred = result.net->forward(x, true);
            Tensor<T> dy(pred.n, pred.c, pred.h, pred.w);
            double batch_loss = 0.0;
            Grid<double> pred_grid(pred.h, pred.w);
            for (size_t b = 0; b < bs; ++b) {
                for (size_t i = 0; i < pred_grid.size(); ++i)
                    pred_grid.v[i] = static_cast<double>(pred.v[b * pred_grid.size() + i]);
                LossResult lr_res = multiscale_loss(pred_grid, *targets[b], loss_spec);
                batch_loss += lr_res.loss;
                for (size_t i = 0; i < pred_grid.size(); ++i)
                    dy.v[b * pred_grid.size() + i] =
                        static_cast<T>(lr_res.grad.v[i] / static_cast<double>(bs));
            }
            batch_loss /= static_cast<double>(bs);
            result.net->zero_grad();
            result.net->backward(dy);
            opt.step(params, lr);
            epoch_loss += batch_loss * static_cast<double>(bs);
            n_samples += bs;
        }
        epoch_loss /= std::max<size_t>(1, n_samples);

        // validation (eval mode, running statistics)
        double val_loss = 0.0;
        if (!val_pairs.empty()) {
            for (const TrainPair& p : val_pairs) {
                const auto& frames = movies[static_cast<size_t>(p.movie)];
                const Grid<double>& src = frames[static_cast<size_t>(p.t)];
                Tensor<T> x(1, 1, src.rows, src.cols);
                for (size_t i = 0; i < src.size(); ++i) x.v[i] = static_cast<T>(src.v[i]);
                Tensor<T> pred = result.net->forward(x, false);
                Grid<double> pg(pred.h, pred.w);
                for (size_t i = 0; i < pg.size(); ++i) pg.v[i] = static_cast<double>(pred.v[i]);
                val_loss +=
                    multiscale_loss(pg, frames[static_cast<size_t>(p.t + cfg.pair_stride)], loss_spec).loss;
            }
            val_loss /= static_cast<double>(val_pairs.size());
        }
        result.train_losses.push_back(epoch_loss);
        result.val_losses.push_back(val_loss);
        if (log) {
            log.precision(10);
            log << epoch << ',' << epoch_loss << ',' << val_loss << ',' << lr << '\n';
        }
    }

    // Soft stability warning: 10-epoch moving average should not increase.
    if (result.train_losses.size() >= 20) {
        auto avg = [&](size_t lo, size_t hi) {
            double s = 0;
            for (size_t i = lo; i < hi; ++i) s += result.train_losses[i];
            return s / static_cast<double>(hi - lo);
        };
        size_t n = result.train_losses.size();
        if (avg(n - 10, n) > avg(n - 20, n - 10) * 1.05)
            std::cerr << "warning: training loss moving average increased near the end of training\n";
    }

    if (!checkpoint_path.empty()) {
        CheckpointMeta meta{net_cfg, cfg, loss_spec, opt.step_count};
        save_checkpoint(*result.net, meta, &opt, checkpoint_path);
    }
    return result;
}

// Autoregressive forecast in normalized (log) space; denormalizes each step.
// If flux_gate_frac > 0, a step whose linear-space mean flux drifts outside
// (1 +/- flux_gate_frac) times the input's raises DivergenceError.
template <class T>
Movie rollout(UNet<T>& net, const Frame& x0, int n_steps, double floor_eps = kDefaultFloorEps,
              double flux_gate_frac = 0.0) {
    if (n_steps < 1) throw ArgumentError("rollout: n_steps must be >= 1");
    NormalizedFrame nf = normalize(x0, floor_eps);
    double input_flux = grid_mean(x0.pixels);
    Tensor<T> cur(1, 1, nf.pixels.rows, nf.pixels.cols);
    for (size_t i = 0; i < nf.pixels.size(); ++i) cur.v[i] = static_cast<T>(nf.pixels.v[i]);
    Movie out;
    out.dt_M = kDefaultDtM;
    for (int step = 0; step < n_steps; ++step) {
        cur = net.forward(cur, false);
        NormalizedFrame step_nf;
        step_nf.floor_eps = floor_eps;
        step_nf.pixels = Grid<double>(cur.h, cur.w);
        for (size_t i = 0; i < step_nf.pixels.size(); ++i) {
            double v = static_cast<double>(cur.v[i]);
            if (!std::isfinite(v)) throw DivergenceError("rollout: non-finite value", step);
            step_nf.pixels.v[i] = v;
        }
        Frame f = denormalize(step_nf, x0.pixel_scale_uas);
        if (!f.pixels.all_finite()) throw DivergenceError("rollout: non-finite frame", step);
        if (flux_gate_frac > 0) {
            double flux = grid_mean(f.pixels);
            if (flux < input_flux * (1.0 - flux_gate_frac) ||
                flux > input_flux * (1.0 + flux_gate_frac))
                throw DivergenceError("rollout: mean flux outside gate", step);
        }
        out.frames.push_back(std::move(f));
    }
    return out;
}

}  // namespace bhflow

// bhc: black-hole accretion movie pipeline driver.
//
// Subcommands: generate, train, rollout, features, infer, evaluate,
//              calibrate-oracle, oracle-rollout.
//
// Exit codes: 0 ok, 2 bad arguments, 3 bad file format, 4 truncated file,
//             5 bad data, 6 I/O failure, 7 rollout divergence (also reports
//             the failing step), 8 degenerate input.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bhflow/errors.hpp"
#include "bhflow/gbt.hpp"
#include "bhflow/oracle.hpp"
#include "bhflow/plasma.hpp"
#include "bhflow/pngplot.hpp"
#include "bhflow/synthgen.hpp"
#include "bhflow/train.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("BHC_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

// FNV-1a over file bytes; cheap content fingerprint for run.json.
std::string file_hash(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return "missing";
    uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i)
            h = (h ^ static_cast<unsigned char>(buf[i])) * 1099511628211ULL;
        if (!is) break;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

void write_run_json(const std::string& path, const std::string& subcommand, const json& config,
                    const std::vector<std::string>& artifacts) {
    json j;
    j["subcommand"] = subcommand;
    j["config"] = config;
    json hashes = json::object();
    for (const auto& a : artifacts) hashes[a] = file_hash(a);
    j["artifacts"] = hashes;
    std::ofstream os(path);
    if (!os) throw bhflow::IoError("cannot write run record: " + path);
    os << j.dump(2) << "\n";
}

bhflow::Frame load_start_frame(const std::string& movie_path, int frame_index) {
    bhflow::Movie m = bhflow::read_movie(movie_path);
    if (frame_index < 0 || frame_index >= static_cast<int>(m.frames.size()))
        throw bhflow::ArgumentError("frame index out of range for " + movie_path);
    return m.frames[static_cast<size_t>(frame_index)];
}

std::string features_csv_header() {
    return "path,pattern_speed,pitch_angle,asym,slope,flag_omega,flag_pitch,flag_asym,flag_slope,"
           "spin_class,incl_class";
}

struct FeatureRow {
    std::string path;
    bhflow::PlasmaFeatures f;
    std::string spin_class;  // empty when unlabeled
    std::string incl_class;
};

void write_features_csv(const std::string& path, const std::vector<FeatureRow>& rows) {
    std::ofstream os(path);
    if (!os) throw bhflow::IoError("cannot write features: " + path);
    os << features_csv_header() << "\n";
    os.precision(17);
    for (const auto& r : rows) {
        os << r.path << "," << r.f.pattern_speed << "," << r.f.pitch_angle << "," << r.f.asymmetry
           << "," << r.f.rotation_slope << "," << r.f.flag_omega << "," << r.f.flag_pitch << ","
           << r.f.flag_asym << "," << r.f.flag_slope << "," << r.spin_class << "," << r.incl_class
           << "\n";
    }
}

std::vector<FeatureRow> read_features_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw bhflow::IoError("cannot open features: " + path);
    std::string line;
    if (!std::getline(is, line)) throw bhflow::DataError("empty features file: " + path);
    if (line != features_csv_header())
        throw bhflow::FormatError("bad features header in " + path);
    std::vector<FeatureRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        while (cells.size() < 11) cells.emplace_back();
        if (cells.size() != 11) throw bhflow::FormatError("bad features row in " + path);
        FeatureRow r;
        r.path = cells[0];
        try {
            r.f.pattern_speed = std::stod(cells[1]);
            r.f.pitch_angle = std::stod(cells[2]);
            r.f.asymmetry = std::stod(cells[3]);
            r.f.rotation_slope = std::stod(cells[4]);
            r.f.flag_omega = cells[5] == "1";
            r.f.flag_pitch = cells[6] == "1";
            r.f.flag_asym = cells[7] == "1";
            r.f.flag_slope = cells[8] == "1";
        } catch (const std::exception&) {
            throw bhflow::FormatError("unparseable features row in " + path);
        }
        r.spin_class = cells[9];
        r.incl_class = cells[10];
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw bhflow::DataError("no feature rows in " + path);
    return rows;
}

// Assemble the 8-column imputed table (4 features + 4 indicator columns).
bhflow::FeatureTable rows_to_table(const std::vector<FeatureRow>& rows,
                                   const bhflow::Imputer& imp) {
    bhflow::FeatureTable values(static_cast<int>(rows.size()), 4);
    std::vector<std::vector<bool>> valid(rows.size(), std::vector<bool>(4));
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& f = rows[i].f;
        values.at(static_cast<int>(i), 0) = f.pattern_speed;
        values.at(static_cast<int>(i), 1) = f.pitch_angle;
        values.at(static_cast<int>(i), 2) = f.asymmetry;
        values.at(static_cast<int>(i), 3) = f.rotation_slope;
        valid[i] = {f.flag_omega, f.flag_pitch, f.flag_asym, f.flag_slope};
    }
    return imp.transform(values, valid);
}

bhflow::Imputer fit_imputer(const std::vector<FeatureRow>& rows) {
    bhflow::FeatureTable values(static_cast<int>(rows.size()), 4);
    std::vector<std::vector<bool>> valid(rows.size(), std::vector<bool>(4));
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& f = rows[i].f;
        values.at(static_cast<int>(i), 0) = f.pattern_speed;
        values.at(static_cast<int>(i), 1) = f.pitch_angle;
        values.at(static_cast<int>(i), 2) = f.asymmetry;
        values.at(static_cast<int>(i), 3) = f.rotation_slope;
        valid[i] = {f.flag_omega, f.flag_pitch, f.flag_asym, f.flag_slope};
    }
    bhflow::Imputer imp;
    imp.fit(values, valid);
    return imp;
}

std::vector<std::string> class_names_for(const std::string& label_col) {
    if (label_col == "spin_class") return {"prograde", "retrograde"};
    if (label_col == "incl_class")
        return {"neg_face_on", "neg_edge_on", "pos_edge_on", "pos_face_on"};
    throw bhflow::ArgumentError("label column must be spin_class or incl_class");
}

std::vector<int> labels_from_rows(const std::vector<FeatureRow>& rows, const std::string& label_col,
                                  const std::vector<std::string>& names) {
    std::vector<int> labels;
    for (const auto& r : rows) {
        const std::string& s = label_col == "spin_class" ? r.spin_class : r.incl_class;
        auto it = std::find(names.begin(), names.end(), s);
        if (it == names.end())
            throw bhflow::DataError("row " + r.path + " lacks a valid " + label_col + " label");
        labels.push_back(static_cast<int>(it - names.begin()));
    }
    return labels;
}

double psnr_from_mse(double mse, double peak) {
    if (mse <= 0) return 99.0;
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{
        "bhc: accretion-movie forecasting pipeline.\n"
        "Exit codes: 0 ok, 2 arguments, 3 format, 4 truncation, 5 data, 6 io,\n"
        "7 divergence, 8 degenerate input."};
    app.require_subcommand(1);

    int threads = 0;
    bool deterministic = false;
    std::string run_json_path = "run.json";
    app.add_option("--threads", threads, "worker thread cap (default: BHC_THREADS or 1)");
    app.add_flag("--deterministic", deterministic, "force single-threaded deterministic execution");
    app.add_option("--run-json", run_json_path, "path for the run record (default run.json)");

    // --- generate ---
    auto* cmd_gen = app.add_subcommand("generate", "write a synthetic labeled dataset");
    bhflow::DatasetConfig gen_cfg;
    std::string gen_out = "dataset";
    int gen_size = 64;
    cmd_gen->add_option("--out", gen_out, "output directory");
    cmd_gen->add_option("--movies", gen_cfg.n_movies, "number of movies (default 32)");
    cmd_gen->add_option("--frames", gen_cfg.n_frames, "frames per movie (default 100)");
    cmd_gen->add_option("--size", gen_size, "square frame size in pixels (default 64)");
    cmd_gen->add_option("--noise", gen_cfg.noise_level, "multiplicative noise level (default 0.05)");
    cmd_gen->add_option("--seed", gen_cfg.seed, "master seed");

    // --- train ---
    auto* cmd_train = app.add_subcommand("train", "train the next-frame surrogate");
    std::string train_manifest, train_out = "model.bhck", train_log, train_loss_cfg,
                train_loss_preset = "full";
    bhflow::TrainConfig train_cfg;
    bhflow::NetConfig net_cfg;
    cmd_train->add_option("--manifest", train_manifest, "dataset manifest CSV")->required();
    cmd_train->add_option("--out", train_out, "checkpoint path (default model.bhck)");
    cmd_train->add_option("--log", train_log, "training-curve CSV path");
    cmd_train->add_option("--epochs", train_cfg.epochs, "epochs (default 100)");
    cmd_train->add_option("--batch-size", train_cfg.batch_size, "batch size (default 16)");
    cmd_train->add_option("--lr", train_cfg.lr, "base learning rate (default 1e-3)");
    cmd_train->add_option("--weight-decay", train_cfg.weight_decay, "AdamW weight decay");
    cmd_train->add_option("--pair-stride", train_cfg.pair_stride, "frames between input and target");
    cmd_train->add_option("--seed", train_cfg.seed, "training seed");
    cmd_train->add_option("--depth", net_cfg.depth, "U-Net depth (default 2)");
    cmd_train->add_option("--base-channels", net_cfg.base_channels, "base channel count (default 8)");
    cmd_train->add_option("--loss", train_loss_preset, "loss preset: full | l2")
        ->check(CLI::IsMember({"full", "l2"}));
    cmd_train->add_option("--loss-config", train_loss_cfg, "loss config file (overrides --loss)");

    // --- rollout ---
    auto* cmd_roll = app.add_subcommand("rollout", "autoregressive forecast from one frame");
    std::string roll_ckpt, roll_movie, roll_out = "forecast.bhmv";
    int roll_frame = 0, roll_steps = 60;
    double roll_blur = 0.0, roll_sp = 0.0, roll_translate = 0.0, roll_flux_gate = 0.0;
    uint64_t roll_seed = 0;
    cmd_roll->add_option("--checkpoint", roll_ckpt, "trained checkpoint")->required();
    cmd_roll->add_option("--movie", roll_movie, "input movie (BHMV)")->required();
    cmd_roll->add_option("--frame-index", roll_frame, "start frame index (default 0)");
    cmd_roll->add_option("--steps", roll_steps, "forecast length (default 60)");
    cmd_roll->add_option("--blur-fwhm-uas", roll_blur, "blur the start frame to this beam width");
    cmd_roll->add_option("--salt-pepper-rate", roll_sp, "salt-and-pepper degradation rate");
    cmd_roll->add_option("--translate-frac", roll_translate, "horizontal shift fraction");
    cmd_roll->add_option("--flux-gate", roll_flux_gate, "divergence gate on mean-flux drift");
    cmd_roll->add_option("--seed", roll_seed, "degradation seed");
    cmd_roll->add_option("--out", roll_out, "forecast movie path");

    // --- features ---
    auto* cmd_feat = app.add_subcommand("features", "extract plasma features");
    std::string feat_manifest, feat_movie, feat_out = "features.csv";
    bhflow::FeatureOptions feat_opts;
    double feat_ring = 16.0;
    bool feat_ring_set = false;
    cmd_feat->add_option("--manifest", feat_manifest, "dataset manifest (labeled rows)");
    cmd_feat->add_option("--movie", feat_movie, "single movie (unlabeled row)");
    cmd_feat
        ->add_option("--ring-radius-px", feat_ring,
                     "sampling ring radius (default: manifest value or 16)")
        ->each([&](const std::string&) { feat_ring_set = true; });
    cmd_feat->add_option("--delta-r-frac", feat_opts.delta_r_frac,
                         "radial offset fraction for pitch angle (default 0.1)");
    cmd_feat->add_option("--n-theta", feat_opts.n_theta, "angular bins (default 180)");
    cmd_feat->add_option("--out", feat_out, "output CSV");

    // --- infer ---
    auto* cmd_infer = app.add_subcommand("infer", "classify feature rows; optionally fit first");
    std::string infer_features, infer_train_features, infer_model, infer_save_model,
        infer_label = "incl_class", infer_out;
    bhflow::BoostConfig boost_cfg;
    int infer_n_models = 1;
    cmd_infer->add_option("--features", infer_features, "features CSV to classify")->required();
    cmd_infer->add_option("--train-features", infer_train_features,
                          "labeled features CSV; fit a model before classifying");
    cmd_infer->add_option("--model", infer_model, "existing BHGB model file");
    cmd_infer->add_option("--save-model", infer_save_model, "write the fitted model here");
    cmd_infer->add_option("--label-col", infer_label, "spin_class | incl_class")
        ->check(CLI::IsMember({"spin_class", "incl_class"}));
    cmd_infer->add_option("--rounds", boost_cfg.n_rounds, "boosting rounds (default 1000)");
    cmd_infer->add_option("--max-depth", boost_cfg.max_depth, "tree depth (default 6)");
    cmd_infer->add_option("--learning-rate", boost_cfg.learning_rate, "shrinkage (default 0.05)");
    cmd_infer->add_option("--subsample", boost_cfg.subsample, "row subsample rate (default 0.8)");
    cmd_infer->add_option("--colsample", boost_cfg.colsample, "column subsample rate (default 0.8)");
    cmd_infer->add_option("--ensemble", infer_n_models, "bootstrap ensemble size (default 1)");
    cmd_infer->add_option("--seed", boost_cfg.seed, "boosting seed");
    cmd_infer->add_option("--out", infer_out, "JSON-lines output path (default stdout)");

    // --- evaluate ---
    auto* cmd_eval = app.add_subcommand("evaluate", "compare a forecast against ground truth");
    std::string eval_forecast, eval_truth, eval_dir = "eval";
    double eval_ring = 0.0;
    cmd_eval->add_option("--forecast", eval_forecast, "forecast movie")->required();
    cmd_eval->add_option("--truth", eval_truth, "ground-truth movie")->required();
    cmd_eval->add_option("--out-dir", eval_dir, "metrics/plot output directory");
    cmd_eval->add_option("--ring-radius-px", eval_ring, "also report feature errors at this ring");

    // --- calibrate-oracle ---
    auto* cmd_cal = app.add_subcommand("calibrate-oracle", "fit the deconvolution+flow baseline");
    std::string cal_movie, cal_out = "oracle.bhoc";
    double cal_blur = 20.0;
    int cal_samples = 50;
    cmd_cal->add_option("--movie", cal_movie, "unblurred training movie")->required();
    cmd_cal->add_option("--blur-fwhm-uas", cal_blur, "beam width to calibrate against (default 20)");
    cmd_cal->add_option("--samples", cal_samples, "frames sampled for PSF search (default 50)");
    cmd_cal->add_option("--out", cal_out, "calibration path");

    // --- oracle-rollout ---
    auto* cmd_oroll = app.add_subcommand("oracle-rollout", "deconvolve + warp-forecast");
    std::string oroll_calib, oroll_movie, oroll_out = "oracle_forecast.bhmv";
    int oroll_frame = 0, oroll_steps = 60;
    double oroll_blur = 0.0;
    cmd_oroll->add_option("--calib", oroll_calib, "calibration file")->required();
    cmd_oroll->add_option("--movie", oroll_movie, "input movie")->required();
    cmd_oroll->add_option("--frame-index", oroll_frame, "start frame index (default 0)");
    cmd_oroll->add_option("--blur-fwhm-uas", oroll_blur, "blur the start frame first");
    cmd_oroll->add_option("--steps", oroll_steps, "forecast length (default 60)");
    cmd_oroll->add_option("--out", oroll_out, "forecast movie path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    threads = resolve_threads(threads);
    if (deterministic) threads = 1;
    (void)threads;  // modules are sequential; the cap exists for interface stability

    json cfg = json::object();
    cfg["deterministic"] = deterministic;
    std::vector<std::string> artifacts;
    std::string sub;

    if (cmd_gen->parsed()) {
        sub = "generate";
        gen_cfg.height = gen_cfg.width = gen_size;
        std::string manifest = bhflow::make_dataset(gen_cfg, gen_out);
        std::cout << manifest << "\n";
        cfg["out"] = gen_out;
        cfg["movies"] = gen_cfg.n_movies;
        cfg["frames"] = gen_cfg.n_frames;
        cfg["size"] = gen_size;
        cfg["noise"] = gen_cfg.noise_level;
        cfg["seed"] = gen_cfg.seed;
        artifacts.push_back(manifest);
    } else if (cmd_train->parsed()) {
        sub = "train";
        bhflow::LossSpec loss = train_loss_preset == "l2" ? bhflow::LossSpec::l2_only()
                                                          : bhflow::LossSpec{};
        if (!train_loss_cfg.empty()) loss = bhflow::LossSpec::load(train_loss_cfg);
        auto manifest = bhflow::read_manifest(train_manifest);
        auto result = bhflow::train<float>(manifest, net_cfg, train_cfg, loss, train_log, train_out);
        std::cout << train_out << " final_val_loss="
                  << (result.val_losses.empty() ? 0.0 : result.val_losses.back()) << "\n";
        cfg["manifest"] = train_manifest;
        cfg["epochs"] = train_cfg.epochs;
        cfg["batch_size"] = train_cfg.batch_size;
        cfg["lr"] = train_cfg.lr;
        cfg["weight_decay"] = train_cfg.weight_decay;
        cfg["pair_stride"] = train_cfg.pair_stride;
        cfg["seed"] = train_cfg.seed;
        cfg["depth"] = net_cfg.depth;
        cfg["base_channels"] = net_cfg.base_channels;
        cfg["loss"] = train_loss_cfg.empty() ? train_loss_preset : train_loss_cfg;
        artifacts.push_back(train_out);
        if (!train_log.empty()) artifacts.push_back(train_log);
    } else if (cmd_roll->parsed()) {
        sub = "rollout";
        auto loaded = bhflow::load_checkpoint<float>(roll_ckpt);
        bhflow::Frame x0 = load_start_frame(roll_movie, roll_frame);
        if (roll_blur > 0) x0 = bhflow::blur_gaussian(x0, roll_blur);
        if (roll_sp > 0)
            x0 = bhflow::degrade(x0, bhflow::DegradeSpec::salt_pepper(roll_sp, roll_seed));
        if (roll_translate != 0)
            x0 = bhflow::degrade(x0, bhflow::DegradeSpec::translate_x(roll_translate));
        bhflow::Movie fc = bhflow::rollout(*loaded.net, x0, roll_steps,
                                           loaded.meta.train.floor_eps, roll_flux_gate);
        bhflow::write_movie(fc, roll_out);
        std::cout << roll_out << "\n";
        cfg["checkpoint"] = roll_ckpt;
        cfg["movie"] = roll_movie;
        cfg["frame_index"] = roll_frame;
        cfg["steps"] = roll_steps;
        cfg["blur_fwhm_uas"] = roll_blur;
        cfg["salt_pepper_rate"] = roll_sp;
        cfg["translate_frac"] = roll_translate;
        cfg["flux_gate"] = roll_flux_gate;
        cfg["seed"] = roll_seed;
        artifacts.push_back(roll_out);
    } else if (cmd_feat->parsed()) {
        sub = "features";
        std::vector<FeatureRow> rows;
        if (!feat_manifest.empty()) {
            for (const auto& e : bhflow::read_manifest(feat_manifest)) {
                bhflow::Movie m = bhflow::read_movie(e.path);
                double ring = feat_ring_set ? feat_ring : e.params.ring_radius_px;
                FeatureRow r;
                r.path = e.path;
                r.f = bhflow::extract_features(m, ring, feat_opts);
                r.spin_class = bhflow::to_string(e.labels.spin_class);
                r.incl_class = bhflow::to_string(e.labels.incl_class);
                rows.push_back(std::move(r));
            }
        }
        if (!feat_movie.empty()) {
            bhflow::Movie m = bhflow::read_movie(feat_movie);
            FeatureRow r;
            r.path = feat_movie;
            r.f = bhflow::extract_features(m, feat_ring, feat_opts);
            rows.push_back(std::move(r));
        }
        if (rows.empty())
            throw bhflow::ArgumentError("features: provide --manifest and/or --movie");
        write_features_csv(feat_out, rows);
        std::cout << feat_out << "\n";
        cfg["manifest"] = feat_manifest;
        cfg["movie"] = feat_movie;
        cfg["ring_radius_px"] = feat_ring_set ? feat_ring : -1.0;
        cfg["delta_r_frac"] = feat_opts.delta_r_frac;
        cfg["n_theta"] = feat_opts.n_theta;
        artifacts.push_back(feat_out);
    } else if (cmd_infer->parsed()) {
        sub = "infer";
        auto names = class_names_for(infer_label);
        std::vector<bhflow::Booster> models;
        bhflow::Imputer imp;
        if (!infer_train_features.empty()) {
            auto train_rows = read_features_csv(infer_train_features);
            imp = fit_imputer(train_rows);
            auto table = rows_to_table(train_rows, imp);
            auto labels = labels_from_rows(train_rows, infer_label, names);
            if (infer_n_models > 1) {
                auto ens = bhflow::bootstrap_ensemble(table, labels, names, boost_cfg,
                                                      infer_n_models, 0.8);
                models = std::move(ens.models);
            } else {
                models.push_back(bhflow::fit(table, labels, names, boost_cfg));
            }
            if (!infer_save_model.empty()) {
                bhflow::save_ensemble(models, infer_save_model);
                artifacts.push_back(infer_save_model);
            }
        } else if (!infer_model.empty()) {
            models = bhflow::load_ensemble(infer_model);
            // medians travel with the features file in this pipeline: refit on
            // the rows being classified (flags are carried per row)
            imp = fit_imputer(read_features_csv(infer_features));
        } else {
            throw bhflow::ArgumentError("infer: provide --train-features or --model");
        }

        auto rows = read_features_csv(infer_features);
        if (imp.medians.empty()) imp = fit_imputer(rows);
        auto table = rows_to_table(rows, imp);

        std::ostringstream report;
        int correct = 0, labeled = 0;
        const int K = static_cast<int>(names.size());
        for (int r = 0; r < table.n_rows; ++r) {
            std::vector<double> mean_p(static_cast<size_t>(K), 0.0);
            for (const auto& b : models) {
                auto p = bhflow::predict_proba(b, table.row(r));
                for (int k = 0; k < K; ++k)
                    mean_p[static_cast<size_t>(k)] += p[static_cast<size_t>(k)] / models.size();
            }
            int arg = static_cast<int>(
                std::max_element(mean_p.begin(), mean_p.end()) - mean_p.begin());
            json jr;
            jr["path"] = rows[static_cast<size_t>(r)].path;
            jr["predicted"] = names[static_cast<size_t>(arg)];
            json probs = json::object();
            for (int k = 0; k < K; ++k)
                probs[names[static_cast<size_t>(k)]] = mean_p[static_cast<size_t>(k)];
            jr["probabilities"] = probs;
            const std::string truth = infer_label == "spin_class"
                                          ? rows[static_cast<size_t>(r)].spin_class
                                          : rows[static_cast<size_t>(r)].incl_class;
            if (!truth.empty()) {
                jr["label"] = truth;
                ++labeled;
                if (truth == names[static_cast<size_t>(arg)]) ++correct;
            }
            report << jr.dump() << "\n";
        }
        json summary;
        summary["n_rows"] = table.n_rows;
        summary["n_models"] = models.size();
        if (labeled > 0) summary["accuracy"] = static_cast<double>(correct) / labeled;
        if (models.size() > 1 && labeled == table.n_rows) {
            bhflow::BoostedEnsemble ens;
            ens.models = models;
            ens.class_names = names;
            auto rep = bhflow::uncertainty(ens, table, labels_from_rows(rows, infer_label, names));
            summary["aleatoric"] = rep.aleatoric;
            summary["epistemic"] = rep.epistemic;
            summary["mean_confidence"] = rep.mean_confidence;
            summary["confidence_std"] = rep.confidence_std;
        }
        report << summary.dump() << "\n";
        if (infer_out.empty()) {
            std::cout << report.str();
        } else {
            std::ofstream os(infer_out);
            if (!os) throw bhflow::IoError("cannot write report: " + infer_out);
            os << report.str();
            artifacts.push_back(infer_out);
        }
        cfg["features"] = infer_features;
        cfg["train_features"] = infer_train_features;
        cfg["model"] = infer_model;
        cfg["label_col"] = infer_label;
        cfg["rounds"] = boost_cfg.n_rounds;
        cfg["ensemble"] = infer_n_models;
        cfg["seed"] = boost_cfg.seed;
    } else if (cmd_eval->parsed()) {
        sub = "evaluate";
        bhflow::Movie fc = bhflow::read_movie(eval_forecast);
        bhflow::Movie gt = bhflow::read_movie(eval_truth);
        if (fc.frames.size() != gt.frames.size())
            throw bhflow::ArgumentError("evaluate: movie lengths differ");
        if (fc.frames.empty()) throw bhflow::ArgumentError("evaluate: empty movies");
        fs::create_directories(eval_dir);

        std::string metrics_path = (fs::path(eval_dir) / "metrics.csv").string();
        std::ofstream metrics(metrics_path);
        if (!metrics) throw bhflow::IoError("cannot write metrics: " + metrics_path);
        metrics << "step,mse,psnr,psd_log_distance_upper\n";
        metrics.precision(17);

        double peak = 0.0;
        for (const auto& f : gt.frames) peak = std::max(peak, static_cast<double>(f.pixels.max_value()));
        bhflow::Series mse_series, psd_series;
        std::vector<bhflow::Series> psd_curves;
        for (size_t t = 0; t < fc.frames.size(); ++t) {
            const auto& a = fc.frames[t].pixels;
            const auto& b = gt.frames[t].pixels;
            if (!a.same_shape(b)) throw bhflow::ArgumentError("evaluate: frame shapes differ");
            double mse = 0.0;
            for (size_t i = 0; i < a.size(); ++i) {
                double d = static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]);
                mse += d * d;
            }
            mse /= static_cast<double>(a.size());
            auto psd_fc = bhflow::radial_psd(fc.frames[t]);
            auto psd_gt = bhflow::radial_psd(gt.frames[t]);
            double pd = bhflow::psd_log_distance_upper(psd_fc, psd_gt);
            metrics << t << "," << mse << "," << psnr_from_mse(mse, peak) << "," << pd << "\n";
            mse_series.x.push_back(static_cast<double>(t));
            mse_series.y.push_back(mse);
            psd_series.x.push_back(static_cast<double>(t));
            psd_series.y.push_back(pd);
            if (t == 0 || t + 1 == fc.frames.size()) {
                bhflow::Series s;
                s.color = t == 0 ? bhflow::Rgb{31, 119, 180} : bhflow::Rgb{214, 39, 40};
                for (size_t k = 0; k < psd_fc.size(); ++k) {
                    s.x.push_back(static_cast<double>(k + 1));
                    s.y.push_back(psd_fc[k]);
                }
                psd_curves.push_back(std::move(s));
                bhflow::Series g;
                g.color = bhflow::Rgb{44, 160, 44};
                for (size_t k = 0; k < psd_gt.size(); ++k) {
                    g.x.push_back(static_cast<double>(k + 1));
                    g.y.push_back(psd_gt[k]);
                }
                psd_curves.push_back(std::move(g));
            }
        }
        std::string err_png = (fs::path(eval_dir) / "error_vs_step.png").string();
        std::string psd_png = (fs::path(eval_dir) / "psd.png").string();
        bhflow::write_line_chart(err_png, {mse_series, psd_series});
        bhflow::write_line_chart(psd_png, psd_curves, 640, 480, true);
        artifacts = {metrics_path, err_png, psd_png};

        if (eval_ring > 0) {
            auto ffc = bhflow::extract_features(fc, eval_ring);
            auto fgt = bhflow::extract_features(gt, eval_ring);
            std::string fpath = (fs::path(eval_dir) / "feature_errors.csv").string();
            std::ofstream fo(fpath);
            if (!fo) throw bhflow::IoError("cannot write feature errors: " + fpath);
            fo.precision(17);
            fo << "feature,forecast,truth,abs_error\n";
            fo << "pattern_speed," << ffc.pattern_speed << "," << fgt.pattern_speed << ","
               << std::abs(ffc.pattern_speed - fgt.pattern_speed) << "\n";
            fo << "pitch_angle," << ffc.pitch_angle << "," << fgt.pitch_angle << ","
               << std::abs(ffc.pitch_angle - fgt.pitch_angle) << "\n";
            fo << "asym," << ffc.asymmetry << "," << fgt.asymmetry << ","
               << std::abs(ffc.asymmetry - fgt.asymmetry) << "\n";
            fo << "slope," << ffc.rotation_slope << "," << fgt.rotation_slope << ","
               << std::abs(ffc.rotation_slope - fgt.rotation_slope) << "\n";
            artifacts.push_back(fpath);
        }
        std::cout << metrics_path << "\n";
        cfg["forecast"] = eval_forecast;
        cfg["truth"] = eval_truth;
        cfg["out_dir"] = eval_dir;
        cfg["ring_radius_px"] = eval_ring;
    } else if (cmd_cal->parsed()) {
        sub = "calibrate-oracle";
        bhflow::Movie clean = bhflow::read_movie(cal_movie);
        bhflow::Movie blurred = bhflow::blur_movie(clean, cal_blur);
        bhflow::CalibOptions copts;
        copts.num_samples = cal_samples;
        auto calib = bhflow::calibrate(clean, blurred, bhflow::default_sigma_grid(), copts);
        bhflow::save_calib(calib, cal_out);
        std::cout << cal_out << " sigma=" << calib.psf_sigma_px << " nsr=" << calib.nsr << "\n";
        cfg["movie"] = cal_movie;
        cfg["blur_fwhm_uas"] = cal_blur;
        cfg["samples"] = cal_samples;
        artifacts.push_back(cal_out);
    } else if (cmd_oroll->parsed()) {
        sub = "oracle-rollout";
        auto calib = bhflow::load_calib(oroll_calib);
        bhflow::Frame x0 = load_start_frame(oroll_movie, oroll_frame);
        if (oroll_blur > 0) x0 = bhflow::blur_gaussian(x0, oroll_blur);
        bhflow::Movie fc = bhflow::flow_warp_rollout(x0, calib, oroll_steps);
        bhflow::write_movie(fc, oroll_out);
        std::cout << oroll_out << "\n";
        cfg["calib"] = oroll_calib;
        cfg["movie"] = oroll_movie;
        cfg["frame_index"] = oroll_frame;
        cfg["blur_fwhm_uas"] = oroll_blur;
        cfg["steps"] = oroll_steps;
        artifacts.push_back(oroll_out);
    }

    write_run_json(run_json_path, sub, cfg, artifacts);
    return 0;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const bhflow::DivergenceError& e) {
        std::cerr << "error: " << e.what() << " (step " << e.failing_step << ")\n";
        return bhflow::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bhflow::exit_code_for(e);
    }
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bhflow/errors.hpp"
#include "bhflow/rng.hpp"
#include "bhflow/tensorio.hpp"

namespace bhflow {

struct BoostConfig {
    int n_rounds = 1000;
    int max_depth = 6;
    double learning_rate = 0.05;
    double subsample = 0.8;
    double colsample = 0.8;
    double min_child_weight = 1.0;
    double gamma = 0.0;
    double l2_reg = 1.0;
    uint64_t seed = 0;

    void validate() const {
        if (n_rounds < 0) throw ArgumentError("BoostConfig: n_rounds must be >= 0");
        if (max_depth < 1) throw ArgumentError("BoostConfig: max_depth must be >= 1");
        if (!(learning_rate > 0)) throw ArgumentError("BoostConfig: learning_rate must be > 0");
        if (!(subsample > 0 && subsample <= 1) || !(colsample > 0 && colsample <= 1))
            throw ArgumentError("BoostConfig: sampling rates must be in (0,1]");
        if (min_child_weight < 0 || gamma < 0 || l2_reg < 0)
            throw ArgumentError("BoostConfig: regularizers must be >= 0");
    }
};

// Row-major feature table, n_rows x n_cols.
struct FeatureTable {
    std::vector<double> data;
    int n_rows = 0;
    int n_cols = 0;

    FeatureTable() = default;
    FeatureTable(int rows, int cols) : data(static_cast<size_t>(rows) * cols, 0.0), n_rows(rows), n_cols(cols) {}
    double& at(int r, int c) { return data[static_cast<size_t>(r) * n_cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * n_cols + c]; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * n_cols; }
};

// Training-set medians for invalid entries plus companion indicator columns:
// input (values, valid flags) with 4 columns becomes an 8-column table where
// column 4+j is 1 when column j was imputed.
struct Imputer {
    std::vector<double> medians;

    void fit(const FeatureTable& values, const std::vector<std::vector<bool>>& valid) {
        medians.assign(static_cast<size_t>(values.n_cols), 0.0);
        for (int c = 0; c < values.n_cols; ++c) {
            std::vector<double> col;
            for (int r = 0; r < values.n_rows; ++r)
                if (valid[static_cast<size_t>(r)][static_cast<size_t>(c)]) col.push_back(values.at(r, c));
            if (!col.empty()) {
                std::sort(col.begin(), col.end());
                size_t m = col.size() / 2;
                medians[static_cast<size_t>(c)] =
                    col.size() % 2 ? col[m] : 0.5 * (col[m - 1] + col[m]);
            }
        }
    }

    FeatureTable transform(const FeatureTable& values, const std::vector<std::vector<bool>>& valid) const {
        if (static_cast<size_t>(values.n_cols) != medians.size())
            throw ArgumentError("Imputer: column count mismatch");
        FeatureTable out(values.n_rows, values.n_cols * 2);
        for (int r = 0; r < values.n_rows; ++r)
            for (int c = 0; c < values.n_cols; ++c) {
                bool ok = valid[static_cast<size_t>(r)][static_cast<size_t>(c)];
                out.at(r, c) = ok ? values.at(r, c) : medians[static_cast<size_t>(c)];
                out.at(r, values.n_cols + c) = ok ? 0.0 : 1.0;
            }
        return out;
    }
};

struct TreeNode {
    int feature = -1;         // -1 marks a leaf
    double threshold = 0.0;   // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0;       // leaf weight (already shrunk)
    double gain = 0.0;        // split gain, for importance
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(const double* x) const {
        int i = 0;
        while (nodes[static_cast<size_t>(i)].feature >= 0) {
            const TreeNode& nd = nodes[static_cast<size_t>(i)];
            i = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<size_t>(i)].value;
    }
};

struct Booster {
    BoostConfig cfg;
    int n_classes = 0;
    int n_features = 0;
    std::vector<std::string> class_names;
    std::vector<std::vector<Tree>> rounds;  // rounds[r][k] = tree for class k

    std::vector<double> margins(const double* x) const {
        std::vector<double> m(static_cast<size_t>(n_classes), 0.0);
        for (const auto& round : rounds)
            for (int k = 0; k < n_classes; ++k) m[static_cast<size_t>(k)] += round[static_cast<size_t>(k)].predict(x);
        return m;
    }
};

inline std::vector<double> softmax(const std::vector<double>& m) {
    double mx = *std::max_element(m.begin(), m.end());
    std::vector<double> p(m.size());
    double sum = 0.0;
    for (size_t i = 0; i < m.size(); ++i) sum += (p[i] = std::exp(m[i] - mx));
    for (double& x : p) x /= sum;
    return p;
}

inline std::vector<double> predict_proba(const Booster& b, const double* x) {
    if (b.rounds.empty())
        return std::vector<double>(static_cast<size_t>(b.n_classes), 1.0 / b.n_classes);
    return softmax(b.margins(x));
}

inline int predict_class(const Booster& b, const double* x) {
    auto p = predict_proba(b, x);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

namespace detail {

struct SplitResult {
    double gain = -1.0;
    int feature = -1;
    double threshold = 0.0;
};

// Exact greedy split over sorted unique values of each candidate feature.
// Ties break toward the lowest feature index, then the lowest threshold.
inline SplitResult best_split(const FeatureTable& X, const std::vector<double>& grad,
                              const std::vector<double>& hess, const std::vector<int>& rows,
                              const std::vector<int>& cols, const BoostConfig& cfg) {
    double g_tot = 0.0, h_tot = 0.0;
    for (int r : rows) {
        g_tot += grad[static_cast<size_t>(r)];
        h_tot += hess[static_cast<size_t>(r)];
    }
    double base = g_tot * g_tot / (h_tot + cfg.l2_reg);
    SplitResult best;

    std::vector<std::pair<double, int>> order(rows.size());
    for (int c : cols) {
        for (size_t i = 0; i < rows.size(); ++i) order[i] = {X.at(rows[i], c), rows[i]};
        std::sort(order.begin(), order.end());
        double g_left = 0.0, h_left = 0.0;
        for (size_t i = 0; i + 1 < order.size(); ++i) {
            g_left += grad[static_cast<size_t>(order[i].second)];
            h_left += hess[static_cast<size_t>(order[i].second)];
            if (order[i].first == order[i + 1].first) continue;  // not a valid boundary
            double h_right = h_tot - h_left;
            if (h_left < cfg.min_child_weight || h_right < cfg.min_child_weight) continue;
            double g_right = g_tot - g_left;
            double gain = 0.5 * (g_left * g_left / (h_left + cfg.l2_reg) +
                                 g_right * g_right / (h_right + cfg.l2_reg) - base) -
                          cfg.gamma;
            double thr = 0.5 * (order[i].first + order[i + 1].first);
            bool better = gain > best.gain + 1e-15;
            bool tie = std::abs(gain - best.gain) <= 1e-15 &&
                       (c < best.feature || (c == best.feature && thr < best.threshold));
            if (better || tie) {
                best.gain = gain;
                best.feature = c;
                best.threshold = thr;
            }
        }
    }
    return best;
}

inline int grow_node(Tree& tree, const FeatureTable& X, const std::vector<double>& grad,
                     const std::vector<double>& hess, std::vector<int>& rows,
                     const std::vector<int>& cols, const BoostConfig& cfg, int depth) {
    int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    SplitResult split;
    if (depth < cfg.max_depth && rows.size() >= 2)
        split = best_split(X, grad, hess, rows, cols, cfg);

    if (split.feature < 0 || split.gain <= 0.0) {
        double g = 0.0, h = 0.0;
        for (int r : rows) {
            g += grad[static_cast<size_t>(r)];
            h += hess[static_cast<size_t>(r)];
        }
        tree.nodes[static_cast<size_t>(idx)].value = -g / (h + cfg.l2_reg) * cfg.learning_rate;
        return idx;
    }

    std::vector<int> left_rows, right_rows;
    for (int r : rows)
        (X.at(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    int left = grow_node(tree, X, grad, hess, left_rows, cols, cfg, depth + 1);
    int right = grow_node(tree, X, grad, hess, right_rows, cols, cfg, depth + 1);
    TreeNode& nd = tree.nodes[static_cast<size_t>(idx)];
    nd.feature = split.feature;
    nd.threshold = split.threshold;
    nd.gain = split.gain;
    nd.left = left;
    nd.right = right;
    return idx;
}

}  // namespace detail

inline Booster fit(const FeatureTable& X, const std::vector<int>& labels,
                   const std::vector<std::string>& class_names, const BoostConfig& cfg) {
    cfg.validate();
    if (X.n_rows != static_cast<int>(labels.size()))
        throw ArgumentError("fit: label count must match row count");
    if (X.n_rows < 1) throw ArgumentError("fit: empty feature table");
    const int K = static_cast<int>(class_names.size());
    if (K < 2) throw DataError("fit: need at least 2 classes");
    {
        std::vector<bool> seen(static_cast<size_t>(K), false);
        for (int y : labels) {
            if (y < 0 || y >= K) throw DataError("fit: label out of range");
            seen[static_cast<size_t>(y)] = true;
        }
        if (std::count(seen.begin(), seen.end(), true) < 2)
            throw DataError("fit: labels contain a single class");
    }

    Booster b;
    b.cfg = cfg;
    b.n_classes = K;
    b.n_features = X.n_cols;
    b.class_names = class_names;

    const int N = X.n_rows;
    std::vector<double> margins(static_cast<size_t>(N) * K, 0.0);
    std::vector<double> grad(static_cast<size_t>(N)), hess(static_cast<size_t>(N));
    std::mt19937_64 rng(cfg.seed);

    for (int round = 0; round < cfg.n_rounds; ++round) {
        // row subsample without replacement, shared by all class trees in the round
        std::vector<int> row_ids(static_cast<size_t>(N));
        std::iota(row_ids.begin(), row_ids.end(), 0);
        if (cfg.subsample < 1.0) {
            deterministic_shuffle(row_ids, rng);
            row_ids.resize(std::max<size_t>(1, static_cast<size_t>(std::llround(cfg.subsample * N))));
            std::sort(row_ids.begin(), row_ids.end());
        }
        std::vector<int> col_ids(static_cast<size_t>(X.n_cols));
        std::iota(col_ids.begin(), col_ids.end(), 0);
        if (cfg.colsample < 1.0) {
            deterministic_shuffle(col_ids, rng);
            col_ids.resize(
                std::max<size_t>(1, static_cast<size_t>(std::llround(cfg.colsample * X.n_cols))));
            std::sort(col_ids.begin(), col_ids.end());
        }

        std::vector<Tree> round_trees(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k) {
            for (int r : row_ids) {
                const double* m = &margins[static_cast<size_t>(r) * K];
                double mx = *std::max_element(m, m + K);
                double sum = 0.0;
                for (int j = 0; j < K; ++j) sum += std::exp(m[j] - mx);
                double p = std::exp(m[k] - mx) / sum;
                grad[static_cast<size_t>(r)] = p - (labels[static_cast<size_t>(r)] == k ? 1.0 : 0.0);
                hess[static_cast<size_t>(r)] = std::max(p * (1.0 - p), 1e-16);
            }
            std::vector<int> rows_copy = row_ids;
            detail::grow_node(round_trees[static_cast<size_t>(k)], X, grad, hess, rows_copy, col_ids,
                              cfg, 0);
        }
        // update margins only after the whole round so class trees share gradients
        for (int r = 0; r < N; ++r)
            for (int k = 0; k < K; ++k)
                margins[static_cast<size_t>(r) * K + k] +=
                    round_trees[static_cast<size_t>(k)].predict(X.row(r));
        b.rounds.push_back(std::move(round_trees));
    }
    return b;
}

inline double log_loss(const Booster& b, const FeatureTable& X, const std::vector<int>& labels) {
    double total = 0.0;
    for (int r = 0; r < X.n_rows; ++r) {
        auto p = predict_proba(b, X.row(r));
        total -= std::log(std::max(p[static_cast<size_t>(labels[static_cast<size_t>(r)])], 1e-300));
    }
    return total / X.n_rows;
}

inline std::vector<double> importance(const Booster& b) {
    std::vector<double> gains(static_cast<size_t>(b.n_features), 0.0);
    double total = 0.0;
    for (const auto& round : b.rounds)
        for (const Tree& t : round)
            for (const TreeNode& nd : t.nodes)
                if (nd.feature >= 0) {
                    gains[static_cast<size_t>(nd.feature)] += nd.gain;
                    total += nd.gain;
                }
    if (total > 0)
        for (double& g : gains) g /= total;
    return gains;
}

struct BoostedEnsemble {
    std::vector<Booster> models;
    std::vector<std::string> class_names;
    std::vector<double> importances;  // normalized gain averaged over models
};

inline BoostedEnsemble bootstrap_ensemble(const FeatureTable& X, const std::vector<int>& labels,
                                          const std::vector<std::string>& class_names,
                                          const BoostConfig& cfg, int n_models = 100,
                                          double frac = 0.8) {
    if (X.n_rows < 10) throw ArgumentError("bootstrap_ensemble: need at least 10 rows");
    if (n_models < 1) throw ArgumentError("bootstrap_ensemble: n_models must be >= 1");
    if (!(frac > 0 && frac <= 1)) throw ArgumentError("bootstrap_ensemble: frac must be in (0,1]");

    BoostedEnsemble ens;
    ens.class_names = class_names;
    std::mt19937_64 master(cfg.seed);
    for (int m = 0; m < n_models; ++m) {
        uint64_t model_seed = master();
        std::vector<int> ids(static_cast<size_t>(X.n_rows));
        std::iota(ids.begin(), ids.end(), 0);
        if (frac < 1.0) {
            std::mt19937_64 rs(model_seed ^ 0x9e3779b97f4a7c15ULL);
            deterministic_shuffle(ids, rs);
            ids.resize(std::max<size_t>(2, static_cast<size_t>(std::llround(frac * X.n_rows))));
            std::sort(ids.begin(), ids.end());
        }
        FeatureTable sub(static_cast<int>(ids.size()), X.n_cols);
        std::vector<int> sub_labels(ids.size());
        for (size_t i = 0; i < ids.size(); ++i) {
            std::memcpy(&sub.at(static_cast<int>(i), 0), X.row(ids[i]),
                        static_cast<size_t>(X.n_cols) * sizeof(double));
            sub_labels[i] = labels[static_cast<size_t>(ids[i])];
        }
        BoostConfig mcfg = cfg;
        mcfg.seed = model_seed;
        ens.models.push_back(fit(sub, sub_labels, class_names, mcfg));
    }
    ens.importances.assign(static_cast<size_t>(X.n_cols), 0.0);
    for (const Booster& b : ens.models) {
        auto imp = importance(b);
        for (size_t i = 0; i < imp.size(); ++i) ens.importances[i] += imp[i] / ens.models.size();
    }
    return ens;
}

struct UncertaintyReport {
    double accuracy = 0.0;
    double aleatoric = 0.0;        // mean entropy of ensemble-mean probabilities
    double epistemic = 0.0;        // mean across-model probability variance
    double mean_confidence = 0.0;  // max class prob of ensemble mean
    double confidence_std = 0.0;
};

inline UncertaintyReport uncertainty(const BoostedEnsemble& ens, const FeatureTable& X,
                                     const std::vector<int>& labels) {
    if (ens.models.empty()) throw ArgumentError("uncertainty: empty ensemble");
    const int K = ens.models.front().n_classes;
    const int M = static_cast<int>(ens.models.size());
    UncertaintyReport rep;
    std::vector<double> confs;
    confs.reserve(static_cast<size_t>(X.n_rows));
    int correct = 0;
    std::vector<std::vector<double>> probs(static_cast<size_t>(M));
    for (int r = 0; r < X.n_rows; ++r) {
        for (int m = 0; m < M; ++m)
            probs[static_cast<size_t>(m)] = predict_proba(ens.models[static_cast<size_t>(m)], X.row(r));
        std::vector<double> mean_p(static_cast<size_t>(K), 0.0);
        for (int k = 0; k < K; ++k) {
            double s = 0.0;
            for (int m = 0; m < M; ++m) s += probs[static_cast<size_t>(m)][static_cast<size_t>(k)];
            mean_p[static_cast<size_t>(k)] = s / M;
        }
        double entropy = 0.0, var = 0.0;
        for (int k = 0; k < K; ++k) {
            double p = mean_p[static_cast<size_t>(k)];
            if (p > 0) entropy -= p * std::log(p);
            // two-pass variance with an exact zero when the models agree
            // bit-for-bit (an all-identical ensemble must report epistemic 0)
            double lo = probs[0][static_cast<size_t>(k)], hi = lo;
            for (int m = 1; m < M; ++m) {
                lo = std::min(lo, probs[static_cast<size_t>(m)][static_cast<size_t>(k)]);
                hi = std::max(hi, probs[static_cast<size_t>(m)][static_cast<size_t>(k)]);
            }
            if (lo != hi) {
                double v = 0.0;
                for (int m = 0; m < M; ++m) {
                    double d = probs[static_cast<size_t>(m)][static_cast<size_t>(k)] - p;
                    v += d * d;
                }
                var += v / (static_cast<double>(M) * K);
            }
        }
        rep.aleatoric += entropy / X.n_rows;
        rep.epistemic += var / X.n_rows;
        int arg = static_cast<int>(std::max_element(mean_p.begin(), mean_p.end()) - mean_p.begin());
        confs.push_back(mean_p[static_cast<size_t>(arg)]);
        if (arg == labels[static_cast<size_t>(r)]) ++correct;
    }
    rep.accuracy = X.n_rows > 0 ? static_cast<double>(correct) / X.n_rows : 0.0;
    if (!confs.empty()) {
        for (double c : confs) rep.mean_confidence += c / confs.size();
        for (double c : confs)
            rep.confidence_std += (c - rep.mean_confidence) * (c - rep.mean_confidence) / confs.size();
        rep.confidence_std = std::sqrt(rep.confidence_std);
    }
    return rep;
}

// --- BHGB model file ---

namespace detail {

inline void write_string(std::ostream& os, const std::string& s) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const char* what) {
    uint32_t len = read_pod<uint32_t>(is, what);
    if (len > (1u << 20)) throw FormatError(std::string("unreasonable string length for ") + what);
    std::string s(len, '\0');
    is.read(s.data(), len);
    if (!is) throw TruncationError(std::string("truncated string: ") + what);
    return s;
}

}  // namespace detail

namespace detail {

inline void write_booster_body(std::ostream& os, const Booster& b) {
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(b.cfg.n_rounds));
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(b.cfg.max_depth));
    detail::write_pod<double>(os, b.cfg.learning_rate);
    detail::write_pod<double>(os, b.cfg.subsample);
    detail::write_pod<double>(os, b.cfg.colsample);
    detail::write_pod<double>(os, b.cfg.min_child_weight);
    detail::write_pod<double>(os, b.cfg.gamma);
    detail::write_pod<double>(os, b.cfg.l2_reg);
    detail::write_pod<uint64_t>(os, b.cfg.seed);
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(b.n_classes));
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(b.n_features));
    for (const auto& name : b.class_names) detail::write_string(os, name);
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(b.rounds.size()));
    for (const auto& round : b.rounds)
        for (const Tree& t : round) {
            detail::write_pod<uint32_t>(os, static_cast<uint32_t>(t.nodes.size()));
            for (const TreeNode& nd : t.nodes) {
                detail::write_pod<int32_t>(os, nd.feature);
                detail::write_pod<double>(os, nd.threshold);
                detail::write_pod<int32_t>(os, nd.left);
                detail::write_pod<int32_t>(os, nd.right);
                detail::write_pod<double>(os, nd.value);
                detail::write_pod<double>(os, nd.gain);
            }
        }
}

inline Booster read_booster_body(std::istream& is, const std::string& path) {
    Booster b;
    b.cfg.n_rounds = static_cast<int>(detail::read_pod<uint32_t>(is, "n_rounds"));
    b.cfg.max_depth = static_cast<int>(detail::read_pod<uint32_t>(is, "max_depth"));
    b.cfg.learning_rate = detail::read_pod<double>(is, "learning_rate");
    b.cfg.subsample = detail::read_pod<double>(is, "subsample");
    b.cfg.colsample = detail::read_pod<double>(is, "colsample");
    b.cfg.min_child_weight = detail::read_pod<double>(is, "min_child_weight");
    b.cfg.gamma = detail::read_pod<double>(is, "gamma");
    b.cfg.l2_reg = detail::read_pod<double>(is, "l2_reg");
    b.cfg.seed = detail::read_pod<uint64_t>(is, "seed");
    b.n_classes = static_cast<int>(detail::read_pod<uint32_t>(is, "n_classes"));
    b.n_features = static_cast<int>(detail::read_pod<uint32_t>(is, "n_features"));
    if (b.n_classes < 2 || b.n_classes > 1024) throw FormatError("implausible class count");
    for (int k = 0; k < b.n_classes; ++k)
        b.class_names.push_back(detail::read_string(is, "class name"));
    uint32_t n_rounds = detail::read_pod<uint32_t>(is, "round count");
    for (uint32_t r = 0; r < n_rounds; ++r) {
        std::vector<Tree> round(static_cast<size_t>(b.n_classes));
        for (Tree& t : round) {
            uint32_t n_nodes = detail::read_pod<uint32_t>(is, "node count");
            t.nodes.resize(n_nodes);
            for (TreeNode& nd : t.nodes) {
                nd.feature = detail::read_pod<int32_t>(is, "feature");
                nd.threshold = detail::read_pod<double>(is, "threshold");
                nd.left = detail::read_pod<int32_t>(is, "left");
                nd.right = detail::read_pod<int32_t>(is, "right");
                nd.value = detail::read_pod<double>(is, "value");
                nd.gain = detail::read_pod<double>(is, "gain");
                if (nd.feature >= b.n_features ||
                    (nd.feature >= 0 &&
                     (nd.left < 0 || nd.right < 0 || nd.left >= static_cast<int>(n_nodes) ||
                      nd.right >= static_cast<int>(n_nodes))))
                    throw FormatError("corrupt tree node in " + path);
            }
        }
        b.rounds.push_back(std::move(round));
    }
    return b;
}

}  // namespace detail

// Model file: "BHGB" magic, version, model count, then each booster's config,
// class names, and flattened tree node records. A point model is a count of 1.
inline void save_ensemble(const std::vector<Booster>& models, const std::string& path) {
    if (models.empty()) throw ArgumentError("save_ensemble: no models");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open model for writing: " + path);
    os.write("BHGB", 4);
    detail::write_pod<uint32_t>(os, 1);
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(models.size()));
    for (const Booster& b : models) detail::write_booster_body(os, b);
    if (!os) throw IoError("model write failed: " + path);
}

inline std::vector<Booster> load_ensemble(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open model: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "BHGB", 4) != 0) throw FormatError("bad model magic in " + path);
    uint32_t version = detail::read_pod<uint32_t>(is, "version");
    if (version != 1) throw FormatError("unsupported model version");
    uint32_t n = detail::read_pod<uint32_t>(is, "model count");
    if (n == 0 || n > 100000) throw FormatError("implausible model count in " + path);
    std::vector<Booster> models;
    for (uint32_t i = 0; i < n; ++i) models.push_back(detail::read_booster_body(is, path));
    return models;
}

inline void save_booster(const Booster& b, const std::string& path) { save_ensemble({b}, path); }

inline Booster load_booster(const std::string& path) { return load_ensemble(path).front(); }

}  // namespace bhflow

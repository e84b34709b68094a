#include "pairtrees/extra_trees.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "pairtrees/parallel.hpp"
#include "pairtrees/tree_growth.hpp"

namespace pairtrees {

double gini_impurity_from_counts(std::span<const int64_t> pos, int64_t n) {
    double g = 0.0;
    for (int64_t c : pos) {
        double q = static_cast<double>(c) / static_cast<double>(n);
        g += 2.0 * q * (1.0 - q);
    }
    return g;
}

double gini_reduction_from_counts(int64_t n, std::span<const int64_t> pos,
                                  int64_t n_left, std::span<const int64_t> left_pos) {
    const int64_t n_right = n - n_left;
    double g_parent = 0.0, g_left = 0.0, g_right = 0.0;
    for (size_t o = 0; o < pos.size(); ++o) {
        double q = static_cast<double>(pos[o]) / static_cast<double>(n);
        g_parent += 2.0 * q * (1.0 - q);
        double ql = static_cast<double>(left_pos[o]) / static_cast<double>(n_left);
        g_left += 2.0 * ql * (1.0 - ql);
        double qr = static_cast<double>(pos[o] - left_pos[o]) / static_cast<double>(n_right);
        g_right += 2.0 * qr * (1.0 - qr);
    }
    double red = g_parent -
                 (static_cast<double>(n_left) / static_cast<double>(n)) * g_left -
                 (static_cast<double>(n_right) / static_cast<double>(n)) * g_right;
    // Mathematically red >= 0; rounding can leave a negative of a few ulps
    // when the true value is 0. Snap those so zero-gain splits tie exactly.
    if (red < 0.0 && red > -1e-9) red = 0.0;
    return red;
}

double gini_reduction(double parent_impurity, int64_t n,
                      double left_impurity, int64_t n_left,
                      double right_impurity, int64_t n_right) {
    return parent_impurity -
           (static_cast<double>(n_left) / static_cast<double>(n)) * left_impurity -
           (static_cast<double>(n_right) / static_cast<double>(n)) * right_impurity;
}

namespace {

struct MatrixXAcc {
    const DataMatrix* X;
    double operator()(int i, int f) const { return X->at(i, f); }
};

struct MatrixYAcc {
    const LabelMatrix* Y;
    int operator()(int i, int o) const { return Y->at(i, o); }
};

void validate_training_data(const DataMatrix& X, const LabelMatrix& Y) {
    if (X.n < 1) throw ValidationError("fit: empty training set");
    if (X.p < 1) throw ValidationError("fit: feature matrix has no columns");
    if (Y.n != X.n) {
        throw ValidationError(strprintf("fit: %d feature rows but %d label rows", X.n, Y.n));
    }
    if (Y.m < 1) throw ValidationError("fit: label matrix has no outputs");
    for (uint8_t l : Y.v) {
        if (l > 1) throw ValidationError("fit: labels must be 0 or 1");
    }
    for (double x : X.v) {
        if (!std::isfinite(x)) throw ValidationError("fit: non-finite feature value");
    }
}

Tree fit_tree_on_indices(const DataMatrix& X, const LabelMatrix& Y, int k_splits, int n_min,
                         Rng& rng, std::vector<int> indices) {
    MatrixXAcc xa{&X};
    MatrixYAcc ya{&Y};
    Tree tree;
    tree.n_outputs = Y.m;
    GrowParams gp;
    gp.k_candidates = effective_k(k_splits, X.p);
    gp.min_split = 2 * static_cast<int64_t>(n_min);
    auto root = SampleSetNodeData<MatrixXAcc, MatrixYAcc>::root(xa, ya, X.p, Y.m,
                                                                std::move(indices));
    grow_node(std::move(root), tree, gp, rng);
    return tree;
}

}  // namespace

Tree fit_tree(const DataMatrix& X, const LabelMatrix& Y, int k_splits, int n_min, Rng& rng) {
    validate_training_data(X, Y);
    if (n_min < 1) throw ValidationError("fit: n_min must be >= 1");
    std::vector<int> all(X.n);
    std::iota(all.begin(), all.end(), 0);
    return fit_tree_on_indices(X, Y, k_splits, n_min, rng, std::move(all));
}

EnsembleModel fit_ensemble(const DataMatrix& X, const LabelMatrix& Y, const TreesConfig& config) {
    validate_training_data(X, Y);
    if (config.n_trees < 1) throw ValidationError("fit: n_trees must be >= 1");
    if (config.n_min < 1) throw ValidationError("fit: n_min must be >= 1");

    EnsembleModel model;
    model.config = config;
    model.p = X.p;
    model.n_outputs = Y.m;
    model.trees.resize(config.n_trees);

    parallel_for(config.n_trees, config.n_threads, [&](int t) {
        Rng rng(Rng::derive(config.seed, kTreeStreamTag, static_cast<uint64_t>(t)));
        std::vector<int> indices;
        if (config.bootstrap) {
            Rng boot(Rng::derive(config.seed, kBootstrapStreamTag, static_cast<uint64_t>(t)));
            indices.resize(X.n);
            for (int i = 0; i < X.n; ++i) {
                indices[i] = static_cast<int>(boot.index(static_cast<size_t>(X.n)));
            }
        } else {
            indices.resize(X.n);
            std::iota(indices.begin(), indices.end(), 0);
        }
        model.trees[t] = fit_tree_on_indices(X, Y, config.k_splits, config.n_min, rng,
                                             std::move(indices));
    });
    return model;
}

void EnsembleModel::predict_proba(std::span<const double> x, std::span<double> out) const {
    if (static_cast<int>(x.size()) != p) {
        throw ValidationError(strprintf("predict: expected %d features, got %zu", p, x.size()));
    }
    if (static_cast<int>(out.size()) != n_outputs) {
        throw ValidationError("predict: output buffer size mismatch");
    }
    predict_with([&](int f) { return x[f]; }, out);
}

std::vector<double> EnsembleModel::predict_proba(std::span<const double> x) const {
    std::vector<double> out(n_outputs, 0.0);
    predict_proba(x, out);
    return out;
}

std::vector<double> feature_importances(const EnsembleModel& model) {
    std::vector<double> imp(model.p, 0.0);
    for (const Tree& t : model.trees) {
        const double root_n = static_cast<double>(t.nodes[0].n_samples);
        for (const TreeNode& nd : t.nodes) {
            if (nd.feature >= 0) {
                imp[nd.feature] += (static_cast<double>(nd.n_samples) / root_n) * nd.split_gain;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(model.trees.size());
    for (double& v : imp) v *= inv;
    return imp;
}

ImportanceRanking make_importance_ranking(const EnsembleModel& model) {
    ImportanceRanking r;
    r.scores = feature_importances(model);
    r.order.resize(r.scores.size());
    std::iota(r.order.begin(), r.order.end(), 0);
    std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
        if (r.scores[a] != r.scores[b]) return r.scores[a] > r.scores[b];
        return a < b;
    });
    return r;
}

namespace {

bool bits_equal(double a, double b) {
    return std::bit_cast<uint64_t>(a) == std::bit_cast<uint64_t>(b);
}

}  // namespace

bool ensembles_identical(const EnsembleModel& a, const EnsembleModel& b) {
    if (a.p != b.p || a.n_outputs != b.n_outputs) return false;
    if (a.trees.size() != b.trees.size()) return false;
    for (size_t t = 0; t < a.trees.size(); ++t) {
        const Tree& ta = a.trees[t];
        const Tree& tb = b.trees[t];
        if (ta.n_outputs != tb.n_outputs) return false;
        if (ta.nodes.size() != tb.nodes.size()) return false;
        if (ta.leaf_freq.size() != tb.leaf_freq.size()) return false;
        for (size_t i = 0; i < ta.nodes.size(); ++i) {
            const TreeNode& na = ta.nodes[i];
            const TreeNode& nb = tb.nodes[i];
            if (na.feature != nb.feature || na.left != nb.left || na.right != nb.right ||
                na.n_samples != nb.n_samples || na.freq_offset != nb.freq_offset ||
                !bits_equal(na.threshold, nb.threshold) ||
                !bits_equal(na.split_gain, nb.split_gain)) {
                return false;
            }
        }
        for (size_t i = 0; i < ta.leaf_freq.size(); ++i) {
            if (!bits_equal(ta.leaf_freq[i], tb.leaf_freq[i])) return false;
        }
    }
    return true;
}

}  // namespace pairtrees

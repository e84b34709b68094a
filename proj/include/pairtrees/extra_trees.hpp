#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pairtrees/common.hpp"
#include "pairtrees/rng.hpp"

namespace pairtrees {

// Dense row-major numeric matrix (n samples x p features).
struct DataMatrix {
    int n = 0;
    int p = 0;
    std::vector<double> v;

    DataMatrix() = default;
    DataMatrix(int n_, int p_) : n(n_), p(p_), v(static_cast<size_t>(n_) * p_, 0.0) {}
    double at(int i, int j) const { return v[static_cast<size_t>(i) * p + j]; }
    double& at(int i, int j) { return v[static_cast<size_t>(i) * p + j]; }
};

// Dense row-major binary label matrix (n samples x m outputs).
struct LabelMatrix {
    int n = 0;
    int m = 0;
    std::vector<uint8_t> v;

    LabelMatrix() = default;
    LabelMatrix(int n_, int m_) : n(n_), m(m_), v(static_cast<size_t>(n_) * m_, 0) {}
    uint8_t at(int i, int j) const { return v[static_cast<size_t>(i) * m + j]; }
    uint8_t& at(int i, int j) { return v[static_cast<size_t>(i) * m + j]; }
};

struct TreesConfig {
    int n_trees = 100;
    int k_splits = 0;  // 0 -> max(1, round(sqrt(p)))
    int n_min = 1;     // a node with fewer than 2*n_min samples becomes a leaf
    bool bootstrap = false;
    uint64_t seed = 0;
    int n_threads = 0;  // 0 -> PAIRTREES_THREADS env or hardware concurrency
};

// One tree node. Internal nodes route x[feature] < threshold to `left`,
// otherwise to `right`. Leaves have feature == -1 and store their per-output
// positive frequencies at leaf_freq[freq_offset .. freq_offset+n_outputs).
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int64_t n_samples = 0;
    double split_gain = 0.0;  // Gini reduction of the chosen split
    int freq_offset = -1;
};

struct Tree {
    int n_outputs = 1;
    std::vector<TreeNode> nodes;     // preorder; nodes[0] is the root
    std::vector<double> leaf_freq;   // pooled leaf frequency vectors

    // Routes a sample to its leaf. `x` is any callable int -> double giving
    // the sample's value for a feature index.
    template <class FeatureAt>
    const double* leaf_for(FeatureAt&& x) const {
        int at = 0;
        while (nodes[at].feature >= 0) {
            const TreeNode& nd = nodes[at];
            at = (x(nd.feature) < nd.threshold) ? nd.left : nd.right;
        }
        return leaf_freq.data() + nodes[at].freq_offset;
    }
};

struct EnsembleModel {
    TreesConfig config;
    int p = 0;          // feature-space dimension seen at fit time
    int n_outputs = 1;
    std::vector<Tree> trees;

    // Mean of per-tree leaf frequencies; `out` must hold n_outputs values.
    template <class FeatureAt>
    void predict_with(FeatureAt&& x, std::span<double> out) const {
        for (double& o : out) o = 0.0;
        for (const Tree& t : trees) {
            const double* f = t.leaf_for(x);
            for (size_t o = 0; o < out.size(); ++o) out[o] += f[o];
        }
        double inv = 1.0 / static_cast<double>(trees.size());
        for (double& o : out) o *= inv;
    }

    void predict_proba(std::span<const double> x, std::span<double> out) const;
    std::vector<double> predict_proba(std::span<const double> x) const;
};

// Binary Gini impurity summed over outputs: sum_o 2*q_o*(1-q_o) where
// q_o = pos[o]/n.
double gini_impurity_from_counts(std::span<const int64_t> pos, int64_t n);

// Gini reduction of a split given integer counts for the parent and the left
// child (right child follows by subtraction). Every scorer in this library
// funnels through this one function so that equal count patterns always yield
// bitwise-equal scores.
double gini_reduction_from_counts(int64_t n, std::span<const int64_t> pos,
                                  int64_t n_left, std::span<const int64_t> left_pos);

// Convenience form over impurities, matching the textbook shape
// G(S) - |L|/|S| G(L) - |R|/|S| G(R).
double gini_reduction(double parent_impurity, int64_t n,
                      double left_impurity, int64_t n_left,
                      double right_impurity, int64_t n_right);

// Effective number of candidate splits per node for a p-dimensional space.
inline int effective_k(int k_splits, int p) {
    if (k_splits > 0) return k_splits < p ? k_splits : p;
    int k = static_cast<int>(std::llround(std::sqrt(static_cast<double>(p))));
    return k < 1 ? 1 : k;
}

// Grows one tree on (X, Y) with K candidate splits per node, consuming `rng`.
Tree fit_tree(const DataMatrix& X, const LabelMatrix& Y, int k_splits, int n_min, Rng& rng);

// Fits config.n_trees trees on (X, Y); tree t uses the random stream
// Rng::derive(config.seed, kTreeStreamTag, t) so results do not depend on the
// number of worker threads.
EnsembleModel fit_ensemble(const DataMatrix& X, const LabelMatrix& Y, const TreesConfig& config);

inline constexpr uint64_t kTreeStreamTag = 0x74726565;       // per-tree streams
inline constexpr uint64_t kBootstrapStreamTag = 0x626f6f74;  // per-tree bootstrap draws

// Mean over trees of sum over internal nodes of
// (node size / root size) * split gain, per feature.
std::vector<double> feature_importances(const EnsembleModel& model);

struct ImportanceRanking {
    std::vector<double> scores;  // indexed by feature
    std::vector<int> order;      // features sorted by descending score, ties by index
};

ImportanceRanking make_importance_ranking(const EnsembleModel& model);

// Structural equality with bitwise double comparison (serialization oracle).
bool ensembles_identical(const EnsembleModel& a, const EnsembleModel& b);

}  // namespace pairtrees

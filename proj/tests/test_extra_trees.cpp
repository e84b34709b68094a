#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pairtrees/extra_trees.hpp"

using namespace pairtrees;

namespace {

DataMatrix matrix(int n, int p, std::initializer_list<double> vals) {
    DataMatrix X(n, p);
    std::copy(vals.begin(), vals.end(), X.v.begin());
    return X;
}

LabelMatrix labels(int n, int m, std::initializer_list<int> vals) {
    LabelMatrix Y(n, m);
    auto it = vals.begin();
    for (auto& cell : Y.v) cell = static_cast<uint8_t>(*it++);
    return Y;
}

DataMatrix random_matrix(int n, int p, uint64_t seed) {
    DataMatrix X(n, p);
    Rng rng(seed);
    for (double& v : X.v) v = rng.normal();
    return X;
}

LabelMatrix random_labels(int n, int m, uint64_t seed) {
    LabelMatrix Y(n, m);
    Rng rng(seed);
    for (auto& v : Y.v) v = static_cast<uint8_t>(rng.index(2));
    return Y;
}

int count_leaves(const Tree& t) {
    int leaves = 0;
    for (const TreeNode& nd : t.nodes) leaves += nd.feature < 0;
    return leaves;
}

}  // namespace

TEST_CASE("gini impurity matches hand-computed values") {
    // [DERIVED] binary Gini 2q(1-q), summed over outputs.
    int64_t one[] = {3};
    CHECK(gini_impurity_from_counts(std::span<const int64_t>(one, 1), 10) ==
          doctest::Approx(0.42).epsilon(1e-15));
    int64_t two[] = {3, 5};
    CHECK(gini_impurity_from_counts(std::span<const int64_t>(two, 2), 10) ==
          doctest::Approx(0.92).epsilon(1e-15));
    int64_t pure[] = {10};
    CHECK(gini_impurity_from_counts(std::span<const int64_t>(pure, 1), 10) == 0.0);
    int64_t none[] = {0};
    CHECK(gini_impurity_from_counts(std::span<const int64_t>(none, 1), 10) == 0.0);
}

TEST_CASE("gini reduction matches hand-computed values") {
    // Parent n=10 pos=5, split 5/5 with 1 and 4 positives:
    // 0.5 - 0.5*0.32 - 0.5*0.32 = 0.18
    int64_t pos[] = {5};
    int64_t left_pos[] = {1};
    CHECK(gini_reduction_from_counts(10, std::span<const int64_t>(pos, 1), 5,
                                     std::span<const int64_t>(left_pos, 1)) ==
          doctest::Approx(0.18).epsilon(1e-15));
    // Perfect separation: 0.48 - 0 - 0 = 0.48
    int64_t pos2[] = {4};
    int64_t lp2[] = {4};
    CHECK(gini_reduction_from_counts(10, std::span<const int64_t>(pos2, 1), 4,
                                     std::span<const int64_t>(lp2, 1)) ==
          doctest::Approx(0.48).epsilon(1e-15));
    // A proportional split (left class fraction == parent's) has zero gain
    // mathematically; the computed value must never dip below zero and can
    // carry at most rounding-level fuzz above it.
    int64_t pos3[] = {3};
    int64_t lp3[] = {1};
    double same = gini_reduction_from_counts(9, std::span<const int64_t>(pos3, 1), 3,
                                             std::span<const int64_t>(lp3, 1));
    CHECK(same >= 0.0);
    CHECK(same <= 1e-14);
}

TEST_CASE("effective_k defaults to round(sqrt(p)) capped at p") {
    CHECK(effective_k(0, 1) == 1);
    CHECK(effective_k(0, 4) == 2);
    CHECK(effective_k(0, 10) == 3);
    CHECK(effective_k(0, 100) == 10);
    CHECK(effective_k(5, 3) == 3);
    CHECK(effective_k(2, 100) == 2);
}

TEST_CASE("two separable samples give one split and two pure leaves") {
    DataMatrix X = matrix(2, 1, {0.0, 1.0});
    LabelMatrix Y = labels(2, 1, {0, 1});
    Rng rng(1);
    Tree t = fit_tree(X, Y, 1, 1, rng);
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold > 0.0);
    CHECK(t.nodes[0].threshold < 1.0);
    CHECK(t.nodes[0].split_gain == doctest::Approx(0.5).epsilon(1e-15));
    const double* left = t.leaf_freq.data() + t.nodes[t.nodes[0].left].freq_offset;
    const double* right = t.leaf_freq.data() + t.nodes[t.nodes[0].right].freq_offset;
    CHECK(left[0] == 0.0);
    CHECK(right[0] == 1.0);
}

TEST_CASE("pure or constant-feature nodes become leaves") {
    Rng rng(1);
    DataMatrix X = matrix(3, 1, {0.0, 1.0, 2.0});
    LabelMatrix Ypure = labels(3, 1, {1, 1, 1});
    Tree t = fit_tree(X, Ypure, 1, 1, rng);
    CHECK(t.nodes.size() == 1);
    CHECK(t.nodes[0].feature == -1);
    CHECK(t.leaf_freq[t.nodes[0].freq_offset] == 1.0);

    DataMatrix Xconst = matrix(3, 2, {5.0, 5.0, 5.0, 5.0, 5.0, 5.0});
    LabelMatrix Ymixed = labels(3, 1, {0, 1, 0});
    Tree t2 = fit_tree(Xconst, Ymixed, 2, 1, rng);
    CHECK(t2.nodes.size() == 1);
    CHECK(t2.leaf_freq[t2.nodes[0].freq_offset] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("unpruned trees memorize distinct samples exactly") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        DataMatrix X = random_matrix(40, 3, 100 + seed);
        LabelMatrix Y = random_labels(40, 1, 200 + seed);
        TreesConfig cfg;
        cfg.n_trees = 7;
        cfg.seed = seed;
        cfg.n_threads = 1;
        EnsembleModel model = fit_ensemble(X, Y, cfg);
        for (int i = 0; i < X.n; ++i) {
            std::vector<double> x(X.v.begin() + i * X.p, X.v.begin() + (i + 1) * X.p);
            CHECK(model.predict_proba(x)[0] == static_cast<double>(Y.at(i, 0)));
        }
    }
}

TEST_CASE("multi-output trees memorize and share structure across outputs") {
    DataMatrix X = random_matrix(30, 4, 7);
    LabelMatrix Y = random_labels(30, 3, 8);
    TreesConfig cfg;
    cfg.n_trees = 5;
    cfg.seed = 3;
    EnsembleModel model = fit_ensemble(X, Y, cfg);
    CHECK(model.n_outputs == 3);
    for (int i = 0; i < X.n; ++i) {
        std::vector<double> x(X.v.begin() + i * X.p, X.v.begin() + (i + 1) * X.p);
        std::vector<double> out = model.predict_proba(x);
        for (int o = 0; o < 3; ++o) CHECK(out[o] == static_cast<double>(Y.at(i, o)));
    }
}

TEST_CASE("same seed reproduces the ensemble bit for bit; thread count is irrelevant") {
    DataMatrix X = random_matrix(60, 5, 21);
    LabelMatrix Y = random_labels(60, 2, 22);
    TreesConfig cfg;
    cfg.n_trees = 12;
    cfg.seed = 9;
    cfg.n_threads = 1;
    EnsembleModel a = fit_ensemble(X, Y, cfg);
    cfg.n_threads = 4;
    EnsembleModel b = fit_ensemble(X, Y, cfg);
    CHECK(ensembles_identical(a, b));
    cfg.seed = 10;
    EnsembleModel c = fit_ensemble(X, Y, cfg);
    CHECK(!ensembles_identical(a, c));
}

TEST_CASE("bootstrap draws change the trees but keep the root sample count") {
    DataMatrix X = random_matrix(50, 3, 31);
    LabelMatrix Y = random_labels(50, 1, 32);
    TreesConfig cfg;
    cfg.n_trees = 6;
    cfg.seed = 4;
    EnsembleModel plain = fit_ensemble(X, Y, cfg);
    cfg.bootstrap = true;
    EnsembleModel boot = fit_ensemble(X, Y, cfg);
    CHECK(!ensembles_identical(plain, boot));
    for (const Tree& t : boot.trees) CHECK(t.nodes[0].n_samples == 50);
    // Bootstrap resampling must not disturb the split stream pairing:
    // refitting reproduces the same ensemble.
    EnsembleModel boot2 = fit_ensemble(X, Y, cfg);
    CHECK(ensembles_identical(boot, boot2));
}

TEST_CASE("trees split on the informative feature when one exists") {
    // Feature 0 is the label; features 1..3 are noise.
    const int n = 80;
    DataMatrix X = random_matrix(n, 4, 41);
    LabelMatrix Y(n, 1);
    for (int i = 0; i < n; ++i) {
        Y.at(i, 0) = i % 2;
        X.at(i, 0) = static_cast<double>(i % 2);
    }
    TreesConfig cfg;
    cfg.n_trees = 30;
    cfg.seed = 5;
    cfg.k_splits = 4;
    EnsembleModel model = fit_ensemble(X, Y, cfg);
    std::vector<double> imp = feature_importances(model);
    CHECK(imp[0] > 5.0 * std::max({imp[1], imp[2], imp[3]}));
    ImportanceRanking rank = make_importance_ranking(model);
    CHECK(rank.order[0] == 0);
    // With K == p the root's very first split can already separate the
    // classes perfectly; every tree is then a single split.
    for (const Tree& t : model.trees) CHECK(count_leaves(t) == 2);
}

TEST_CASE("leaf sample counts are conserved down the tree") {
    DataMatrix X = random_matrix(64, 3, 55);
    LabelMatrix Y = random_labels(64, 1, 56);
    Rng rng(2);
    Tree t = fit_tree(X, Y, 2, 1, rng);
    for (const TreeNode& nd : t.nodes) {
        if (nd.feature < 0) continue;
        CHECK(t.nodes[nd.left].n_samples + t.nodes[nd.right].n_samples == nd.n_samples);
        CHECK(t.nodes[nd.left].n_samples >= 1);
        CHECK(t.nodes[nd.right].n_samples >= 1);
        CHECK(nd.split_gain >= 0.0);
    }
    CHECK(t.nodes[0].n_samples == 64);
}

TEST_CASE("n_min stops splitting small nodes") {
    DataMatrix X = random_matrix(64, 3, 65);
    LabelMatrix Y = random_labels(64, 1, 66);
    Rng rng(2);
    Tree t = fit_tree(X, Y, 2, 8, rng);  // nodes with < 16 samples become leaves
    for (const TreeNode& nd : t.nodes) {
        if (nd.feature >= 0) CHECK(nd.n_samples >= 16);
    }
}

TEST_CASE("training input is validated") {
    TreesConfig cfg;
    cfg.n_trees = 1;
    DataMatrix X = matrix(2, 1, {0.0, 1.0});
    CHECK_THROWS_AS(fit_ensemble(X, labels(1, 1, {0}), cfg), ValidationError);
    CHECK_THROWS_AS(fit_ensemble(DataMatrix(), labels(0, 1, {}), cfg), ValidationError);
    LabelMatrix bad = labels(2, 1, {0, 1});
    bad.at(1, 0) = 2;
    CHECK_THROWS_AS(fit_ensemble(X, bad, cfg), ValidationError);
    DataMatrix nanX = matrix(2, 1, {0.0, std::nan("")});
    CHECK_THROWS_AS(fit_ensemble(nanX, labels(2, 1, {0, 1}), cfg), ValidationError);
}

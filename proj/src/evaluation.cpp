#include "pairtrees/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pairtrees {

const char* scheme_name(CvScheme s) {
    return s == CvScheme::PairsCV ? "pairs-cv" : "nodes-cv";
}

const char* method_name(Method m) {
    switch (m) {
        case Method::Global: return "global";
        case Method::LocalSO: return "local-so";
        case Method::LocalMO: return "local-mo";
    }
    return "?";
}

const char* block_mode_name(BlockMode m) {
    return m == BlockMode::Paired ? "paired" : "all-pairs";
}

namespace {

std::vector<int> deal_folds(int n, int k, Rng& rng) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(rng.index(static_cast<size_t>(i) + 1));
        std::swap(order[i], order[j]);
    }
    std::vector<int> fold(n);
    for (int i = 0; i < n; ++i) fold[order[i]] = i % k;
    return fold;
}

}  // namespace

FoldPlan make_folds(CvScheme scheme, const PairSample& sample, int k, int repeats,
                    uint64_t seed, BlockMode block_mode) {
    if (k < 2) throw ValidationError("folds: k must be at least 2");
    if (repeats < 1) throw ValidationError("folds: repeats must be at least 1");

    FoldPlan plan;
    plan.scheme = scheme;
    plan.k = k;
    plan.repeats = repeats;
    plan.block_mode = block_mode;
    plan.seed = seed;
    plan.homogeneous = sample.homogeneous;

    if (scheme == CvScheme::PairsCV) {
        const int n = static_cast<int>(sample.triples.size());
        if (k > n) throw ValidationError(strprintf("folds: %d folds over %d pairs would leave empty folds", k, n));
        plan.pair_fold.resize(repeats);
        for (int r = 0; r < repeats; ++r) {
            Rng rng(Rng::derive(seed, kPairFoldTag, static_cast<uint64_t>(r)));
            plan.pair_fold[r] = deal_folds(n, k, rng);
        }
        return plan;
    }

    if (block_mode == BlockMode::AllPairs && sample.homogeneous) {
        throw ValidationError("folds: all-pairs blocks need a bipartite graph");
    }
    const int nr = sample.rows->size();
    if (k > nr) throw ValidationError(strprintf("folds: %d folds over %d row nodes would leave empty folds", k, nr));
    plan.row_fold.resize(repeats);
    for (int r = 0; r < repeats; ++r) {
        Rng rng(Rng::derive(seed, kRowFoldTag, static_cast<uint64_t>(r)));
        plan.row_fold[r] = deal_folds(nr, k, rng);
    }
    if (sample.homogeneous) {
        plan.col_fold = plan.row_fold;
        return plan;
    }
    const int nc = sample.cols->size();
    if (k > nc) throw ValidationError(strprintf("folds: %d folds over %d col nodes would leave empty folds", k, nc));
    plan.col_fold.resize(repeats);
    for (int r = 0; r < repeats; ++r) {
        Rng rng(Rng::derive(seed, kColFoldTag, static_cast<uint64_t>(r)));
        plan.col_fold[r] = deal_folds(nc, k, rng);
    }
    return plan;
}

namespace {

struct TieWalk {
    std::vector<int> order;  // indices sorted by score
    explicit TieWalk(std::span<const double> s, bool descending) : order(s.size()) {
        std::iota(order.begin(), order.end(), 0);
        if (descending) {
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return s[a] > s[b]; });
        } else {
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return s[a] < s[b]; });
        }
    }
};

void validate_metric_input(std::span<const double> scores, std::span<const uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw ValidationError("metrics: scores and labels differ in length");
    }
    if (scores.empty()) throw ValidationError("metrics: empty input");
    for (double s : scores) {
        if (!std::isfinite(s)) throw ValidationError("metrics: non-finite score");
    }
    for (uint8_t l : labels) {
        if (l > 1) throw ValidationError("metrics: labels must be 0 or 1");
    }
}

}  // namespace

std::optional<double> roc_auc(std::span<const double> scores, std::span<const uint8_t> labels) {
    validate_metric_input(scores, labels);
    const size_t n = scores.size();
    int64_t pos = 0;
    for (uint8_t l : labels) pos += l;
    const int64_t neg = static_cast<int64_t>(n) - pos;
    if (pos == 0 || neg == 0) return std::nullopt;

    TieWalk w(scores, /*descending=*/false);
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[w.order[j]] == scores[w.order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (size_t t = i; t < j; ++t) {
            if (labels[w.order[t]]) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double p = static_cast<double>(pos);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::optional<double> pr_auc(std::span<const double> scores, std::span<const uint8_t> labels) {
    validate_metric_input(scores, labels);
    const size_t n = scores.size();
    int64_t pos = 0;
    for (uint8_t l : labels) pos += l;
    if (pos == 0) return std::nullopt;

    TieWalk w(scores, /*descending=*/true);
    int64_t tp = 0, fp = 0;
    double prev_recall = 0.0;
    double ap = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[w.order[j]] == scores[w.order[i]]) ++j;
        for (size_t t = i; t < j; ++t) {
            if (labels[w.order[t]]) ++tp;
            else ++fp;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

std::optional<Curve> roc_curve(std::span<const double> scores, std::span<const uint8_t> labels) {
    std::optional<double> auc = roc_auc(scores, labels);
    if (!auc) return std::nullopt;
    const size_t n = scores.size();
    int64_t pos = 0;
    for (uint8_t l : labels) pos += l;
    const int64_t neg = static_cast<int64_t>(n) - pos;

    Curve c;
    c.area = *auc;
    c.points.push_back({0.0, 0.0});
    TieWalk w(scores, /*descending=*/true);
    int64_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[w.order[j]] == scores[w.order[i]]) ++j;
        for (size_t t = i; t < j; ++t) {
            if (labels[w.order[t]]) ++tp;
            else ++fp;
        }
        c.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
        i = j;
    }
    return c;
}

std::optional<Curve> pr_curve(std::span<const double> scores, std::span<const uint8_t> labels) {
    std::optional<double> ap = pr_auc(scores, labels);
    if (!ap) return std::nullopt;
    const size_t n = scores.size();
    int64_t pos = 0;
    for (uint8_t l : labels) pos += l;

    Curve c;
    c.area = *ap;
    TieWalk w(scores, /*descending=*/true);
    int64_t tp = 0, fp = 0;
    size_t i = 0;
    bool first = true;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[w.order[j]] == scores[w.order[i]]) ++j;
        for (size_t t = i; t < j; ++t) {
            if (labels[w.order[t]]) ++tp;
            else ++fp;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        if (first) {
            // Anchor the curve at recall 0 with the first group's precision.
            c.points.push_back({0.0, precision});
            first = false;
        }
        c.points.push_back({recall, precision});
        i = j;
    }
    return c;
}

DegreeBaseline degree_baseline(const PairSample& train) {
    DegreeBaseline b;
    b.homogeneous = train.homogeneous;
    b.deg_r.assign(train.rows->size(), 0.0);
    b.deg_c.assign(train.cols->size(), 0.0);
    for (const Triple& t : train.triples) {
        if (!t.label) continue;
        if (train.homogeneous) {
            b.deg_r[t.row] += 1.0;
            b.deg_r[t.col] += 1.0;
        } else {
            b.deg_r[t.row] += 1.0;
            b.deg_c[t.col] += 1.0;
        }
    }
    if (train.homogeneous) b.deg_c = b.deg_r;
    return b;
}

double baseline_score(const DegreeBaseline& b, const FamilyPartition& part, int r, int c) {
    const bool lr = part.homogeneous ? static_cast<bool>(part.in_ls_c[r])
                                     : static_cast<bool>(part.in_ls_r[r]);
    const bool lc = part.in_ls_c[c];
    if (lr && lc) return b.deg_r[r] + b.deg_c[c];
    if (lr) return b.deg_r[r];
    if (lc) return b.deg_c[c];
    return 0.5;  // TSxTS: no degree information, constant score
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

namespace {

struct BlockSpec {
    int repeat;
    int fold_row;
    int fold_col;
    std::vector<Triple> train;
    std::vector<Triple> test;
};

// Scores one block's test pairs with a freshly fitted model and folds them
// into the report.
void evaluate_block(const BlockSpec& spec, const PairSample& sample, const FeatureTable& fr,
                    const FeatureTable& fc, Method method, const RunSettings& settings,
                    EvalReport& report) {
    if (spec.train.empty()) {
        throw ValidationError(strprintf(
            "cv: repeat %d block (%d,%d) has an empty training set", spec.repeat,
            spec.fold_row, spec.fold_col));
    }
    if (spec.test.empty()) return;

    PairSample train = make_pair_sample(sample.rows, sample.cols, sample.homogeneous, spec.train);
    FamilyPartition part = partition_families(train);
    DegreeBaseline base = degree_baseline(train);

    GlobalModel gm;
    LocalModel lm;
    if (method == Method::Global) {
        gm = fit_global(train, fr, fc, settings.trees, settings.global_mode);
    } else {
        LocalVariant variant = method == Method::LocalSO ? LocalVariant::SingleOutput
                                                         : LocalVariant::MultiOutput;
        lm = fit_local(train, fr, fc, variant, settings.trees);
        if (report.scheme == CvScheme::NodesCV) {
            fit_second_step(lm, fr, fc, settings.trees);
            if (!lm.ts_r.empty() && (!lm.second_row_models.empty() || !lm.second_row_side.trees.empty())) {
                report.calibrations.push_back(
                    {spec.repeat, spec.fold_row, spec.fold_col, 'r', lm.calib_row});
            }
            if (!lm.ts_c.empty() && (!lm.second_col_models.empty() || !lm.second_col_side.trees.empty())) {
                report.calibrations.push_back(
                    {spec.repeat, spec.fold_row, spec.fold_col, 'c', lm.calib_col});
            }
        }
    }

    struct FamilyBuffer {
        std::vector<double> scores, baselines;
        std::vector<uint8_t> labels;
    };
    FamilyBuffer buf[kNumFamilies];
    BlockScores kept;
    kept.repeat = spec.repeat;
    kept.fold_row = spec.fold_row;
    kept.fold_col = spec.fold_col;

    for (const Triple& t : spec.test) {
        PairFamily fam = part.family_of(t.row, t.col);
        if (report.scheme == CvScheme::PairsCV && fam != PairFamily::LSLS) {
            ++report.dropped_non_lsls;
            continue;
        }
        double score;
        if (method == Method::Global) {
            score = predict_global(gm, fr, fc, t.row, t.col);
        } else {
            score = predict_local(lm, fr, fc, t.row, t.col, settings.merge);
        }
        const double bscore = baseline_score(base, part, t.row, t.col);
        FamilyBuffer& fb = buf[static_cast<int>(fam)];
        fb.scores.push_back(score);
        fb.baselines.push_back(bscore);
        fb.labels.push_back(t.label);
        if (settings.keep_scores) {
            kept.pairs.push_back({t.row, t.col, fam, t.label, score, bscore});
        }
    }

    for (int f = 0; f < kNumFamilies; ++f) {
        FamilyBuffer& fb = buf[f];
        if (fb.scores.empty()) continue;
        FamilyStats& st = report.families[f];
        st.present = true;
        st.n_pairs += static_cast<int64_t>(fb.scores.size());
        for (uint8_t l : fb.labels) st.n_positives += l;
        if (auto v = roc_auc(fb.scores, fb.labels)) {
            st.auroc.push_back(*v);
            st.base_auroc.push_back(*roc_auc(fb.baselines, fb.labels));
        } else {
            ++st.undefined_auroc;
        }
        if (auto v = pr_auc(fb.scores, fb.labels)) {
            st.aupr.push_back(*v);
            st.base_aupr.push_back(*pr_auc(fb.baselines, fb.labels));
        } else {
            ++st.undefined_aupr;
        }
        st.pooled_scores.insert(st.pooled_scores.end(), fb.scores.begin(), fb.scores.end());
        st.pooled_labels.insert(st.pooled_labels.end(), fb.labels.begin(), fb.labels.end());
    }
    if (settings.keep_scores) report.blocks.push_back(std::move(kept));
}

}  // namespace

EvalReport run_experiment(const PairSample& sample, const FeatureTable& row_features,
                          const FeatureTable& col_features, Method method,
                          const FoldPlan& plan, const RunSettings& settings) {
    if (method == Method::LocalMO && plan.scheme == CvScheme::PairsCV) {
        throw ValidationError(
            "cv: pairs-cv holds out individual pairs, leaving an incomplete training rectangle; "
            "multi-output local models need every LSxLS label");
    }
    if (sample.triples.empty()) throw ValidationError("cv: empty pair sample");

    EvalReport report;
    report.method = method;
    report.scheme = plan.scheme;
    report.block_mode = plan.block_mode;
    report.k = plan.k;
    report.repeats = plan.repeats;
    report.seed = plan.seed;
    report.homogeneous = sample.homogeneous;

    for (int rep = 0; rep < plan.repeats; ++rep) {
        if (plan.scheme == CvScheme::PairsCV) {
            const std::vector<int>& fold = plan.pair_fold[rep];
            for (int b = 0; b < plan.k; ++b) {
                BlockSpec spec;
                spec.repeat = rep;
                spec.fold_row = b;
                spec.fold_col = b;
                for (size_t i = 0; i < sample.triples.size(); ++i) {
                    (fold[i] == b ? spec.test : spec.train).push_back(sample.triples[i]);
                }
                evaluate_block(spec, sample, row_features, col_features, method, settings,
                               report);
            }
            continue;
        }
        const std::vector<int>& rf = plan.row_fold[rep];
        const std::vector<int>& cf = plan.col_fold[rep];
        if (plan.block_mode == BlockMode::Paired) {
            for (int b = 0; b < plan.k; ++b) {
                BlockSpec spec;
                spec.repeat = rep;
                spec.fold_row = b;
                spec.fold_col = b;
                for (const Triple& t : sample.triples) {
                    const bool rb = rf[t.row] == b;
                    const bool cb = cf[t.col] == b;
                    if (!rb && !cb) spec.train.push_back(t);
                    else spec.test.push_back(t);
                }
                evaluate_block(spec, sample, row_features, col_features, method, settings,
                               report);
            }
        } else {
            for (int bi = 0; bi < plan.k; ++bi) {
                for (int bj = 0; bj < plan.k; ++bj) {
                    BlockSpec spec;
                    spec.repeat = rep;
                    spec.fold_row = bi;
                    spec.fold_col = bj;
                    for (const Triple& t : sample.triples) {
                        const bool rb = rf[t.row] == bi;
                        const bool cb = cf[t.col] == bj;
                        if (!rb && !cb) spec.train.push_back(t);
                        else if (rb && cb) spec.test.push_back(t);
                        // Pairs with exactly one held-out side are neither
                        // trained on nor tested in this block.
                    }
                    evaluate_block(spec, sample, row_features, col_features, method, settings,
                                   report);
                }
            }
        }
    }
    return report;
}

}  // namespace pairtrees

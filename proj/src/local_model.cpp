#include "pairtrees/local_model.hpp"

#include <algorithm>
#include <cmath>

namespace pairtrees {

const char* variant_name(LocalVariant v) {
    return v == LocalVariant::SingleOutput ? "single-output" : "multi-output";
}

const char* merge_name(MergeRule r) {
    switch (r) {
        case MergeRule::Mean: return "mean";
        case MergeRule::Min: return "min";
        case MergeRule::Max: return "max";
        case MergeRule::Product: return "product";
    }
    return "?";
}

double merge_pair(MergeRule rule, double a, double b) {
    switch (rule) {
        case MergeRule::Mean: return 0.5 * (a + b);
        case MergeRule::Min: return a < b ? a : b;
        case MergeRule::Max: return a > b ? a : b;
        case MergeRule::Product: return a * b;
    }
    return 0.0;
}

CalibrationResult calibrate_threshold(std::vector<double> scores, double target) {
    if (scores.empty()) throw ValidationError("calibrate_threshold: no scores to calibrate on");
    if (!(target > 0.0 && target < 1.0)) {
        throw ValidationError("calibrate_threshold: target fraction must lie in (0, 1)");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) throw ValidationError("calibrate_threshold: non-finite score");
    }
    std::sort(scores.begin(), scores.end(), std::greater<double>());
    const size_t n = scores.size();

    CalibrationResult res;
    res.target = target;
    res.degenerate = scores.front() == scores.back();

    bool found = false;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[j] == scores[i]) ++j;
        // Elements [0, j) are >= scores[i]; fractions grow as the value drops.
        double frac = static_cast<double>(j) / static_cast<double>(n);
        if (frac > target) break;
        res.p_th = scores[i];
        res.achieved = frac;
        found = true;
        i = j;
    }
    if (!found) {
        // Even the top tie group exceeds the target; use the top value.
        size_t j = 0;
        while (j < n && scores[j] == scores[0]) ++j;
        res.p_th = scores[0];
        res.achieved = static_cast<double>(j) / static_cast<double>(n);
    }
    return res;
}

int LocalModel::n_first_step_models() const {
    if (variant == LocalVariant::SingleOutput) {
        return static_cast<int>(col_models.size() + row_models.size());
    }
    return (col_side.trees.empty() ? 0 : 1) + (row_side.trees.empty() ? 0 : 1);
}

int LocalModel::n_second_step_models() const {
    if (variant == LocalVariant::SingleOutput) {
        return static_cast<int>(second_col_models.size() + second_row_models.size());
    }
    return (second_col_side.trees.empty() ? 0 : 1) + (second_row_side.trees.empty() ? 0 : 1);
}

namespace {

void validate_tables(const PairSample& sample, const FeatureTable& fr, const FeatureTable& fc) {
    if (fr.universe != sample.rows || fc.universe != sample.cols) {
        throw ValidationError("fit: feature tables and sample use different node universes");
    }
    if (fr.p < 1 || fc.p < 1) throw ValidationError("fit: feature table has no columns");
    for (double v : fr.values) {
        if (!std::isfinite(v)) throw ValidationError("fit: non-finite feature value");
    }
    for (double v : fc.values) {
        if (!std::isfinite(v)) throw ValidationError("fit: non-finite feature value");
    }
}

DataMatrix features_of(const FeatureTable& table, const std::vector<int>& nodes) {
    DataMatrix X(static_cast<int>(nodes.size()), table.p);
    for (size_t i = 0; i < nodes.size(); ++i) {
        std::span<const double> row = table.row(nodes[i]);
        std::copy(row.begin(), row.end(), X.v.begin() + static_cast<ptrdiff_t>(i) * table.p);
    }
    return X;
}

TreesConfig with_seed(const TreesConfig& base, uint64_t tag, uint64_t index) {
    TreesConfig c = base;
    c.seed = Rng::derive(base.seed, tag, index);
    return c;
}

std::vector<int> slots_of(int universe_size, const std::vector<int>& nodes) {
    std::vector<int> slot(universe_size, -1);
    for (size_t i = 0; i < nodes.size(); ++i) slot[nodes[i]] = static_cast<int>(i);
    return slot;
}

double predict_single(const EnsembleModel& m, std::span<const double> x) {
    double out = 0.0;
    m.predict_proba(x, std::span<double>(&out, 1));
    return out;
}

double predict_output(const EnsembleModel& m, std::span<const double> x, int output) {
    if (static_cast<int>(x.size()) != m.p) {
        throw ValidationError("predict: feature dimension mismatch");
    }
    double s = 0.0;
    for (const Tree& t : m.trees) {
        s += t.leaf_for([&](int f) { return x[f]; })[output];
    }
    return s / static_cast<double>(m.trees.size());
}

}  // namespace

LocalModel fit_local(const PairSample& sample, const FeatureTable& row_features,
                     const FeatureTable& col_features, LocalVariant variant,
                     const TreesConfig& config) {
    validate_tables(sample, row_features, col_features);
    if (sample.triples.empty()) throw ValidationError("fit: empty pair sample");
    if (config.n_trees < 1) throw ValidationError("fit: n_trees must be >= 1");
    if (config.n_min < 1) throw ValidationError("fit: n_min must be >= 1");

    FamilyPartition part = partition_families(sample);

    LocalModel model;
    model.variant = variant;
    model.homogeneous = sample.homogeneous;
    model.rows = sample.rows;
    model.cols = sample.cols;
    model.config = config;
    model.train_triples = sample.triples;
    model.in_ls_r = part.in_ls_r;
    model.in_ls_c = part.in_ls_c;
    model.ls_r = part.ls_r;
    model.ls_c = part.ls_c;
    model.ls_r_slot = slots_of(sample.rows->size(), model.ls_r);
    model.ls_c_slot = slots_of(sample.cols->size(), model.ls_c);
    model.train_positive_fraction = static_cast<double>(sample.n_positives()) /
                                    static_cast<double>(sample.triples.size());

    if (variant == LocalVariant::SingleOutput) {
        // Training rows are sorted by universe index so a fitted model does
        // not depend on the order pairs were listed in, and so the one-column
        // case lines up exactly with the multi-output layout.
        auto sorted_entries = [](std::vector<std::pair<int, uint8_t>>& v) {
            std::sort(v.begin(), v.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
        };
        auto fit_node_models = [&](const std::vector<int>& ls_nodes,
                                   std::vector<std::vector<std::pair<int, uint8_t>>>& buckets,
                                   const FeatureTable& partner_features, uint64_t tag) {
            std::vector<EnsembleModel> models(ls_nodes.size());
            for (size_t j = 0; j < ls_nodes.size(); ++j) {
                auto& entries = buckets[ls_nodes[j]];
                sorted_entries(entries);
                std::vector<int> nodes(entries.size());
                LabelMatrix Y(static_cast<int>(entries.size()), 1);
                for (size_t i = 0; i < entries.size(); ++i) {
                    nodes[i] = entries[i].first;
                    Y.at(static_cast<int>(i), 0) = entries[i].second;
                }
                DataMatrix X = features_of(partner_features, nodes);
                models[j] = fit_ensemble(X, Y, with_seed(config, tag, static_cast<uint64_t>(j)));
            }
            return models;
        };
        if (sample.homogeneous) {
            // One model per LS node, trained on that node's labeled partners.
            std::vector<std::vector<std::pair<int, uint8_t>>> by_node(sample.rows->size());
            for (const Triple& t : sample.triples) {
                by_node[t.row].push_back({t.col, t.label});
                by_node[t.col].push_back({t.row, t.label});
            }
            model.col_models = fit_node_models(model.ls_c, by_node, row_features, kColFirstTag);
        } else {
            std::vector<std::vector<std::pair<int, uint8_t>>> by_col(sample.cols->size());
            std::vector<std::vector<std::pair<int, uint8_t>>> by_row(sample.rows->size());
            for (const Triple& t : sample.triples) {
                by_col[t.col].push_back({t.row, t.label});
                by_row[t.row].push_back({t.col, t.label});
            }
            model.col_models = fit_node_models(model.ls_c, by_col, row_features, kColFirstTag);
            model.row_models = fit_node_models(model.ls_r, by_row, col_features, kRowFirstTag);
        }
        return model;
    }

    // Multi-output variant: needs a hole-free training rectangle.
    if (sample.homogeneous) {
        const int k = static_cast<int>(model.ls_c.size());
        const int64_t expected = static_cast<int64_t>(k) * (k - 1) / 2;
        if (static_cast<int64_t>(sample.triples.size()) != expected) {
            throw ValidationError(
                "fit: multi-output training requires a complete adjacency submatrix");
        }
        // Dense symmetric label matrix over the LS nodes; self-pairs carry no
        // label in a homogeneous graph, so the diagonal is fixed to 0.
        LabelMatrix Y(k, k);
        for (const Triple& t : sample.triples) {
            int i = model.ls_c_slot[t.row];
            int j = model.ls_c_slot[t.col];
            Y.at(i, j) = t.label;
            Y.at(j, i) = t.label;
        }
        DataMatrix X = features_of(row_features, model.ls_c);
        model.col_side = fit_ensemble(X, Y, with_seed(config, kColFirstTag, 0));
        return model;
    }

    std::optional<AdjacencySubmatrix> sub = as_complete_submatrix(sample);
    if (!sub) {
        throw ValidationError(
            "fit: multi-output training requires a complete adjacency submatrix");
    }
    const int nr = sub->n_rows();
    const int nc = sub->n_cols();
    {
        LabelMatrix Y(nr, nc);
        for (int i = 0; i < nr; ++i) {
            for (int j = 0; j < nc; ++j) Y.at(i, j) = sub->label(i, j);
        }
        DataMatrix X = features_of(row_features, sub->row_nodes);
        model.col_side = fit_ensemble(X, Y, with_seed(config, kColFirstTag, 0));
    }
    {
        LabelMatrix Y(nc, nr);
        for (int j = 0; j < nc; ++j) {
            for (int i = 0; i < nr; ++i) Y.at(j, i) = sub->label(i, j);
        }
        DataMatrix X = features_of(col_features, sub->col_nodes);
        model.row_side = fit_ensemble(X, Y, with_seed(config, kRowFirstTag, 0));
    }
    return model;
}

namespace {

// First-step score profile of an out-of-sample node against the LS nodes of
// the other side: profile[j] = predicted probability for the pair formed
// with LS node j.
std::vector<double> first_step_profile_over_ls_c(const LocalModel& model,
                                                 std::span<const double> x_row) {
    std::vector<double> prof(model.ls_c.size(), 0.0);
    if (model.variant == LocalVariant::SingleOutput) {
        for (size_t j = 0; j < model.col_models.size(); ++j) {
            prof[j] = predict_single(model.col_models[j], x_row);
        }
    } else {
        model.col_side.predict_proba(x_row, prof);
    }
    return prof;
}

std::vector<double> first_step_profile_over_ls_r(const LocalModel& model,
                                                 std::span<const double> x_col) {
    std::vector<double> prof(model.ls_r.size(), 0.0);
    if (model.variant == LocalVariant::SingleOutput) {
        for (size_t j = 0; j < model.row_models.size(); ++j) {
            prof[j] = predict_single(model.row_models[j], x_col);
        }
    } else {
        model.row_side.predict_proba(x_col, prof);
    }
    return prof;
}

}  // namespace

void fit_second_step(LocalModel& model, const FeatureTable& row_features,
                     const FeatureTable& col_features, const TreesConfig& config,
                     const std::vector<int>* ts_rows, const std::vector<int>* ts_cols) {
    if (model.ls_c.empty() && model.ls_r.empty()) {
        throw ValidationError("second step: model has no first step");
    }
    if (row_features.universe != model.rows || col_features.universe != model.cols) {
        throw ValidationError("second step: feature tables use different node universes");
    }
    if (model.homogeneous && ts_cols != nullptr) {
        throw ValidationError("second step: homogeneous models take a single TS list");
    }

    auto complement = [](int universe_size, const std::vector<char>& in_ls) {
        std::vector<int> out;
        for (int i = 0; i < universe_size; ++i) {
            if (!in_ls[i]) out.push_back(i);
        }
        return out;
    };
    auto validate_ts = [](const std::vector<int>& ts, const std::vector<char>& in_ls,
                          int universe_size) {
        for (int n : ts) {
            if (n < 0 || n >= universe_size) {
                throw ValidationError("second step: TS node index out of range");
            }
            if (in_ls[n]) {
                throw ValidationError("second step: TS list contains a learning-set node");
            }
        }
    };

    if (model.homogeneous) {
        std::vector<int> ts = ts_rows ? *ts_rows : complement(model.cols->size(), model.in_ls_c);
        validate_ts(ts, model.in_ls_c, model.cols->size());
        model.ts_r = ts;
        model.ts_c = ts;
        model.ts_r_slot = slots_of(model.rows->size(), ts);
        model.ts_c_slot = model.ts_r_slot;
        model.has_second_step = true;
        if (ts.empty()) return;

        // Pool every TS node's first-step profile to calibrate one threshold.
        std::vector<std::vector<double>> profiles(ts.size());
        std::vector<double> pool;
        pool.reserve(ts.size() * model.ls_c.size());
        for (size_t u = 0; u < ts.size(); ++u) {
            profiles[u] = first_step_profile_over_ls_c(model, row_features.row(ts[u]));
            pool.insert(pool.end(), profiles[u].begin(), profiles[u].end());
        }
        model.calib_col = calibrate_threshold(std::move(pool), model.train_positive_fraction);

        DataMatrix X = features_of(row_features, model.ls_c);
        if (model.variant == LocalVariant::SingleOutput) {
            model.second_col_models.resize(ts.size());
            for (size_t u = 0; u < ts.size(); ++u) {
                LabelMatrix Y(static_cast<int>(model.ls_c.size()), 1);
                for (size_t j = 0; j < model.ls_c.size(); ++j) {
                    Y.at(static_cast<int>(j), 0) = profiles[u][j] >= model.calib_col.p_th;
                }
                model.second_col_models[u] = fit_ensemble(
                    X, Y, with_seed(config, kColSecondTag, static_cast<uint64_t>(u)));
            }
        } else {
            LabelMatrix Y(static_cast<int>(model.ls_c.size()), static_cast<int>(ts.size()));
            for (size_t u = 0; u < ts.size(); ++u) {
                for (size_t j = 0; j < model.ls_c.size(); ++j) {
                    Y.at(static_cast<int>(j), static_cast<int>(u)) =
                        profiles[u][j] >= model.calib_col.p_th;
                }
            }
            model.second_col_side = fit_ensemble(X, Y, with_seed(config, kColSecondTag, 0));
        }
        return;
    }

    std::vector<int> tsr = ts_rows ? *ts_rows : complement(model.rows->size(), model.in_ls_r);
    std::vector<int> tsc = ts_cols ? *ts_cols : complement(model.cols->size(), model.in_ls_c);
    validate_ts(tsr, model.in_ls_r, model.rows->size());
    validate_ts(tsc, model.in_ls_c, model.cols->size());
    model.ts_r = tsr;
    model.ts_c = tsc;
    model.ts_r_slot = slots_of(model.rows->size(), tsr);
    model.ts_c_slot = slots_of(model.cols->size(), tsc);
    model.has_second_step = true;

    if (!tsr.empty()) {
        // Models for TS row nodes: trained over the LS columns.
        std::vector<std::vector<double>> profiles(tsr.size());
        std::vector<double> pool;
        pool.reserve(tsr.size() * model.ls_c.size());
        for (size_t u = 0; u < tsr.size(); ++u) {
            profiles[u] = first_step_profile_over_ls_c(model, row_features.row(tsr[u]));
            pool.insert(pool.end(), profiles[u].begin(), profiles[u].end());
        }
        model.calib_row = calibrate_threshold(std::move(pool), model.train_positive_fraction);

        DataMatrix X = features_of(col_features, model.ls_c);
        if (model.variant == LocalVariant::SingleOutput) {
            model.second_row_models.resize(tsr.size());
            for (size_t u = 0; u < tsr.size(); ++u) {
                LabelMatrix Y(static_cast<int>(model.ls_c.size()), 1);
                for (size_t j = 0; j < model.ls_c.size(); ++j) {
                    Y.at(static_cast<int>(j), 0) = profiles[u][j] >= model.calib_row.p_th;
                }
                model.second_row_models[u] = fit_ensemble(
                    X, Y, with_seed(config, kRowSecondTag, static_cast<uint64_t>(u)));
            }
        } else {
            LabelMatrix Y(static_cast<int>(model.ls_c.size()), static_cast<int>(tsr.size()));
            for (size_t u = 0; u < tsr.size(); ++u) {
                for (size_t j = 0; j < model.ls_c.size(); ++j) {
                    Y.at(static_cast<int>(j), static_cast<int>(u)) =
                        profiles[u][j] >= model.calib_row.p_th;
                }
            }
            model.second_row_side = fit_ensemble(X, Y, with_seed(config, kRowSecondTag, 0));
        }
    }

    if (!tsc.empty()) {
        std::vector<std::vector<double>> profiles(tsc.size());
        std::vector<double> pool;
        pool.reserve(tsc.size() * model.ls_r.size());
        for (size_t u = 0; u < tsc.size(); ++u) {
            profiles[u] = first_step_profile_over_ls_r(model, col_features.row(tsc[u]));
            pool.insert(pool.end(), profiles[u].begin(), profiles[u].end());
        }
        model.calib_col = calibrate_threshold(std::move(pool), model.train_positive_fraction);

        DataMatrix X = features_of(row_features, model.ls_r);
        if (model.variant == LocalVariant::SingleOutput) {
            model.second_col_models.resize(tsc.size());
            for (size_t u = 0; u < tsc.size(); ++u) {
                LabelMatrix Y(static_cast<int>(model.ls_r.size()), 1);
                for (size_t j = 0; j < model.ls_r.size(); ++j) {
                    Y.at(static_cast<int>(j), 0) = profiles[u][j] >= model.calib_col.p_th;
                }
                model.second_col_models[u] = fit_ensemble(
                    X, Y, with_seed(config, kColSecondTag, static_cast<uint64_t>(u)));
            }
        } else {
            LabelMatrix Y(static_cast<int>(model.ls_r.size()), static_cast<int>(tsc.size()));
            for (size_t u = 0; u < tsc.size(); ++u) {
                for (size_t j = 0; j < model.ls_r.size(); ++j) {
                    Y.at(static_cast<int>(j), static_cast<int>(u)) =
                        profiles[u][j] >= model.calib_col.p_th;
                }
            }
            model.second_col_side = fit_ensemble(X, Y, with_seed(config, kColSecondTag, 0));
        }
    }
}

namespace {

bool is_ls_row(const LocalModel& m, int r) {
    const std::vector<char>& in = m.homogeneous ? m.in_ls_c : m.in_ls_r;
    if (r < 0 || r >= static_cast<int>(in.size())) {
        throw ValidationError("predict: node index out of range");
    }
    return in[r];
}

bool is_ls_col(const LocalModel& m, int c) {
    if (c < 0 || c >= static_cast<int>(m.in_ls_c.size())) {
        throw ValidationError("predict: node index out of range");
    }
    return m.in_ls_c[c];
}

}  // namespace

double predict_lsls(const LocalModel& model, const FeatureTable& row_features,
                    const FeatureTable& col_features, int r_node, int c_node, MergeRule rule) {
    if (!is_ls_row(model, r_node) || !is_ls_col(model, c_node)) {
        throw ValidationError("predict: pair is not LSxLS");
    }
    const bool so = model.variant == LocalVariant::SingleOutput;
    if (model.homogeneous) {
        const int sr = model.ls_c_slot[r_node];
        const int sc = model.ls_c_slot[c_node];
        double a = so ? predict_single(model.col_models[sr], row_features.row(c_node))
                      : predict_output(model.col_side, row_features.row(c_node), sr);
        double b = so ? predict_single(model.col_models[sc], row_features.row(r_node))
                      : predict_output(model.col_side, row_features.row(r_node), sc);
        return merge_pair(rule, a, b);
    }
    const int sc = model.ls_c_slot[c_node];
    const int sr = model.ls_r_slot[r_node];
    double a = so ? predict_single(model.col_models[sc], row_features.row(r_node))
                  : predict_output(model.col_side, row_features.row(r_node), sc);
    double b = so ? predict_single(model.row_models[sr], col_features.row(c_node))
                  : predict_output(model.row_side, col_features.row(c_node), sr);
    return merge_pair(rule, a, b);
}

double predict_lsts(const LocalModel& model, const FeatureTable& row_features,
                    const FeatureTable& col_features, int r_node, int c_node) {
    const bool lr = is_ls_row(model, r_node);
    const bool lc = is_ls_col(model, c_node);
    if (lr == lc) throw ValidationError("predict: pair is not LSxTS");
    if (model.homogeneous) {
        const int ls_node = lr ? r_node : c_node;
        const int ts_node = lr ? c_node : r_node;
        const int slot = model.ls_c_slot[ls_node];
        if (model.variant == LocalVariant::SingleOutput) {
            return predict_single(model.col_models[slot], row_features.row(ts_node));
        }
        return predict_output(model.col_side, row_features.row(ts_node), slot);
    }
    if (lc) {
        // TS row x LS col: the column node's model scores the new row.
        const int slot = model.ls_c_slot[c_node];
        if (model.variant == LocalVariant::SingleOutput) {
            return predict_single(model.col_models[slot], row_features.row(r_node));
        }
        return predict_output(model.col_side, row_features.row(r_node), slot);
    }
    const int slot = model.ls_r_slot[r_node];
    if (model.variant == LocalVariant::SingleOutput) {
        return predict_single(model.row_models[slot], col_features.row(c_node));
    }
    return predict_output(model.row_side, col_features.row(c_node), slot);
}

double predict_tsts(const LocalModel& model, const FeatureTable& row_features,
                    const FeatureTable& col_features, int r_node, int c_node, MergeRule rule) {
    if (is_ls_row(model, r_node) || is_ls_col(model, c_node)) {
        throw ValidationError("predict: pair is not TSxTS");
    }
    if (!model.has_second_step) {
        throw ValidationError("predict: TSxTS pairs need a fitted second step");
    }
    if (model.homogeneous) {
        const int sr = model.ts_c_slot[r_node];
        const int sc = model.ts_c_slot[c_node];
        if (sr < 0 || sc < 0) {
            throw ValidationError("predict: node not covered by the second step");
        }
        double a, b;
        if (model.variant == LocalVariant::SingleOutput) {
            a = predict_single(model.second_col_models[sr], row_features.row(c_node));
            b = predict_single(model.second_col_models[sc], row_features.row(r_node));
        } else {
            a = predict_output(model.second_col_side, row_features.row(c_node), sr);
            b = predict_output(model.second_col_side, row_features.row(r_node), sc);
        }
        return merge_pair(rule, a, b);
    }
    const int sr = model.ts_r_slot[r_node];
    const int sc = model.ts_c_slot[c_node];
    if (sr < 0 || sc < 0) {
        throw ValidationError("predict: node not covered by the second step");
    }
    double a, b;
    if (model.variant == LocalVariant::SingleOutput) {
        a = predict_single(model.second_row_models[sr], col_features.row(c_node));
        b = predict_single(model.second_col_models[sc], row_features.row(r_node));
    } else {
        a = predict_output(model.second_row_side, col_features.row(c_node), sr);
        b = predict_output(model.second_col_side, row_features.row(r_node), sc);
    }
    return merge_pair(rule, a, b);
}

double predict_local(const LocalModel& model, const FeatureTable& row_features,
                     const FeatureTable& col_features, int r_node, int c_node, MergeRule rule) {
    const bool lr = is_ls_row(model, r_node);
    const bool lc = is_ls_col(model, c_node);
    if (lr && lc) return predict_lsls(model, row_features, col_features, r_node, c_node, rule);
    if (lr != lc) return predict_lsts(model, row_features, col_features, r_node, c_node);
    return predict_tsts(model, row_features, col_features, r_node, c_node, rule);
}

}  // namespace pairtrees

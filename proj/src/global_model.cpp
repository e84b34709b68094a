#include "pairtrees/global_model.hpp"

#include <atomic>
#include <memory>
#include <numeric>
#include <utility>

#include "pairtrees/parallel.hpp"
#include "pairtrees/tree_growth.hpp"

namespace pairtrees {

void PairFeatureView::concat(int r_node, int c_node, std::vector<double>& out) const {
    out.resize(static_cast<size_t>(p()));
    std::span<const double> xr = row_table->row(r_node);
    std::span<const double> xc = col_table->row(c_node);
    std::copy(xr.begin(), xr.end(), out.begin());
    std::copy(xc.begin(), xc.end(), out.begin() + row_table->p);
}

std::string PairFeatureView::feature_name(int f) const {
    if (f < row_table->p) return "row:" + row_table->feature_names[f];
    return "col:" + col_table->feature_names[f - row_table->p];
}

namespace {

StorageGauge g_gauge;
std::atomic<int64_t> g_scan{0};

// A charged, shareable id list. Children produced by a split that does not
// touch a dimension share their parent's list for it, so the storage gauge
// counts every stored id exactly once however deep the recursion goes.
struct IdList {
    std::vector<int> ids;
    GaugeCharge charge;
    IdList(std::vector<int> v, StorageGauge* g)
        : ids(std::move(v)), charge(g, static_cast<int64_t>(ids.size())) {}
};
using IdListPtr = std::shared_ptr<const IdList>;

struct RectCtx {
    const AdjacencySubmatrix* sub;
    const FeatureTable* fr;
    const FeatureTable* fc;
    int p_r;
    int p_c;
};

// Lazy training state: a rectangle of the complete training submatrix,
// represented by its row/col id lists plus per-row and per-col positive
// counts. Split scores over pair sets reduce to sums over these counts, so
// no pair record is ever stored.
struct RectangleNodeData {
    const RectCtx* ctx = nullptr;
    IdListPtr rows;  // positions within ctx->sub
    IdListPtr cols;
    std::vector<int64_t> row_pos;  // positives of each row across this node's cols
    std::vector<int64_t> col_pos;
    std::vector<int64_t> pos;  // single-output total

    static RectangleNodeData root(const RectCtx& ctx) {
        RectangleNodeData d;
        d.ctx = &ctx;
        const int nr = ctx.sub->n_rows();
        const int nc = ctx.sub->n_cols();
        std::vector<int> ri(nr), ci(nc);
        std::iota(ri.begin(), ri.end(), 0);
        std::iota(ci.begin(), ci.end(), 0);
        d.rows = std::make_shared<IdList>(std::move(ri), &g_gauge);
        d.cols = std::make_shared<IdList>(std::move(ci), &g_gauge);
        d.row_pos.assign(nr, 0);
        d.col_pos.assign(nc, 0);
        int64_t total = 0;
        for (int i = 0; i < nr; ++i) {
            for (int j = 0; j < nc; ++j) {
                if (ctx.sub->label(i, j)) {
                    ++d.row_pos[i];
                    ++d.col_pos[j];
                    ++total;
                }
            }
        }
        g_scan.fetch_add(static_cast<int64_t>(nr) * nc, std::memory_order_relaxed);
        d.pos.assign(1, total);
        return d;
    }

    int64_t size() const {
        return static_cast<int64_t>(rows->ids.size()) * static_cast<int64_t>(cols->ids.size());
    }
    const std::vector<int64_t>& positive_counts() const { return pos; }
    int n_features() const { return ctx->p_r + ctx->p_c; }

    double row_value(int slot, int f) const {
        return ctx->fr->row(ctx->sub->row_nodes[rows->ids[slot]])[f];
    }
    double col_value(int slot, int f) const {
        return ctx->fc->row(ctx->sub->col_nodes[cols->ids[slot]])[f - ctx->p_r];
    }

    bool feature_range(int f, double& lo, double& hi) const {
        if (f < ctx->p_r) {
            lo = hi = row_value(0, f);
            for (size_t s = 1; s < rows->ids.size(); ++s) {
                double v = row_value(static_cast<int>(s), f);
                if (v < lo) lo = v;
                if (v > hi) hi = v;
            }
            g_scan.fetch_add(static_cast<int64_t>(rows->ids.size()), std::memory_order_relaxed);
        } else {
            lo = hi = col_value(0, f);
            for (size_t s = 1; s < cols->ids.size(); ++s) {
                double v = col_value(static_cast<int>(s), f);
                if (v < lo) lo = v;
                if (v > hi) hi = v;
            }
            g_scan.fetch_add(static_cast<int64_t>(cols->ids.size()), std::memory_order_relaxed);
        }
        return hi > lo;
    }

    void score_split(int f, double thr, int64_t& n_left, std::vector<int64_t>& left_pos) const {
        if (f < ctx->p_r) {
            int64_t rows_left = 0;
            for (size_t s = 0; s < rows->ids.size(); ++s) {
                if (row_value(static_cast<int>(s), f) < thr) {
                    ++rows_left;
                    left_pos[0] += row_pos[s];
                }
            }
            n_left = rows_left * static_cast<int64_t>(cols->ids.size());
            g_scan.fetch_add(static_cast<int64_t>(rows->ids.size()), std::memory_order_relaxed);
        } else {
            int64_t cols_left = 0;
            for (size_t s = 0; s < cols->ids.size(); ++s) {
                if (col_value(static_cast<int>(s), f) < thr) {
                    ++cols_left;
                    left_pos[0] += col_pos[s];
                }
            }
            n_left = cols_left * static_cast<int64_t>(rows->ids.size());
            g_scan.fetch_add(static_cast<int64_t>(cols->ids.size()), std::memory_order_relaxed);
        }
    }

    std::pair<RectangleNodeData, RectangleNodeData> split(int f, double thr) && {
        RectangleNodeData l, r;
        l.ctx = r.ctx = ctx;
        const AdjacencySubmatrix& sub = *ctx->sub;
        if (f < ctx->p_r) {
            // Row split: column lists are untouched and shared.
            std::vector<int> lrow, rrow;
            std::vector<int64_t> lrp, rrp;
            for (size_t s = 0; s < rows->ids.size(); ++s) {
                if (row_value(static_cast<int>(s), f) < thr) {
                    lrow.push_back(rows->ids[s]);
                    lrp.push_back(row_pos[s]);
                } else {
                    rrow.push_back(rows->ids[s]);
                    rrp.push_back(row_pos[s]);
                }
            }
            l.rows = std::make_shared<IdList>(std::move(lrow), &g_gauge);
            r.rows = std::make_shared<IdList>(std::move(rrow), &g_gauge);
            l.cols = cols;
            r.cols = cols;
            l.row_pos = std::move(lrp);
            r.row_pos = std::move(rrp);
            // Per-column counts change on both sides: recount the smaller
            // side against the labels, derive the other by subtraction.
            const bool left_small = l.rows->ids.size() <= r.rows->ids.size();
            const std::vector<int>& small_rows = left_small ? l.rows->ids : r.rows->ids;
            std::vector<int64_t> small_cp(cols->ids.size(), 0);
            for (int row : small_rows) {
                for (size_t j = 0; j < cols->ids.size(); ++j) {
                    small_cp[j] += sub.label(row, cols->ids[j]);
                }
            }
            g_scan.fetch_add(static_cast<int64_t>(small_rows.size()) *
                                 static_cast<int64_t>(cols->ids.size()),
                             std::memory_order_relaxed);
            std::vector<int64_t> other_cp(cols->ids.size());
            for (size_t j = 0; j < cols->ids.size(); ++j) {
                other_cp[j] = col_pos[j] - small_cp[j];
            }
            if (left_small) {
                l.col_pos = std::move(small_cp);
                r.col_pos = std::move(other_cp);
            } else {
                r.col_pos = std::move(small_cp);
                l.col_pos = std::move(other_cp);
            }
            int64_t lp = 0;
            for (int64_t c : l.row_pos) lp += c;
            l.pos.assign(1, lp);
            r.pos.assign(1, pos[0] - lp);
        } else {
            // Column split, mirror image.
            std::vector<int> lcol, rcol;
            std::vector<int64_t> lcp, rcp;
            for (size_t s = 0; s < cols->ids.size(); ++s) {
                if (col_value(static_cast<int>(s), f) < thr) {
                    lcol.push_back(cols->ids[s]);
                    lcp.push_back(col_pos[s]);
                } else {
                    rcol.push_back(cols->ids[s]);
                    rcp.push_back(col_pos[s]);
                }
            }
            l.cols = std::make_shared<IdList>(std::move(lcol), &g_gauge);
            r.cols = std::make_shared<IdList>(std::move(rcol), &g_gauge);
            l.rows = rows;
            r.rows = rows;
            l.col_pos = std::move(lcp);
            r.col_pos = std::move(rcp);
            const bool left_small = l.cols->ids.size() <= r.cols->ids.size();
            const std::vector<int>& small_cols = left_small ? l.cols->ids : r.cols->ids;
            std::vector<int64_t> small_rp(rows->ids.size(), 0);
            for (size_t i = 0; i < rows->ids.size(); ++i) {
                for (int col : small_cols) {
                    small_rp[i] += sub.label(rows->ids[i], col);
                }
            }
            g_scan.fetch_add(static_cast<int64_t>(small_cols.size()) *
                                 static_cast<int64_t>(rows->ids.size()),
                             std::memory_order_relaxed);
            std::vector<int64_t> other_rp(rows->ids.size());
            for (size_t i = 0; i < rows->ids.size(); ++i) {
                other_rp[i] = row_pos[i] - small_rp[i];
            }
            if (left_small) {
                l.row_pos = std::move(small_rp);
                r.row_pos = std::move(other_rp);
            } else {
                r.row_pos = std::move(small_rp);
                l.row_pos = std::move(other_rp);
            }
            int64_t lp = 0;
            for (int64_t c : l.col_pos) lp += c;
            l.pos.assign(1, lp);
            r.pos.assign(1, pos[0] - lp);
        }
        rows.reset();
        cols.reset();
        row_pos.clear();
        col_pos.clear();
        return {std::move(l), std::move(r)};
    }
};

// Explicit-path accessors over a materialized triple list.
struct PairXAcc {
    const FeatureTable* fr;
    const FeatureTable* fc;
    const std::vector<Triple>* pairs;
    int p_r;
    double operator()(int i, int f) const {
        const Triple& t = (*pairs)[i];
        return f < p_r ? fr->row(t.row)[f] : fc->row(t.col)[f - p_r];
    }
};

struct PairYAcc {
    const std::vector<Triple>* pairs;
    int operator()(int i, int) const { return (*pairs)[i].label; }
};

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

}  // namespace

void reset_global_train_stats() {
    g_gauge.reset();
    g_scan.store(0);
}

GlobalTrainStats global_train_stats() {
    GlobalTrainStats s;
    s.current_units = g_gauge.current();
    s.peak_units = g_gauge.peak();
    s.scan_units = g_scan.load();
    return s;
}

GlobalModel fit_global(const PairSample& sample, const FeatureTable& row_features,
                       const FeatureTable& col_features, const TreesConfig& config,
                       GlobalTrainMode mode) {
    validate_tables(sample, row_features, col_features);
    if (sample.triples.empty()) throw ValidationError("fit: empty pair sample");
    if (config.n_trees < 1) throw ValidationError("fit: n_trees must be >= 1");
    if (config.n_min < 1) throw ValidationError("fit: n_min must be >= 1");

    GlobalModel model;
    model.homogeneous = sample.homogeneous;
    model.p_r = row_features.p;
    model.p_c = col_features.p;
    model.rows = sample.rows;
    model.cols = sample.cols;
    model.train_triples = sample.triples;

    const int p = model.p_r + model.p_c;
    model.ensemble.config = config;
    model.ensemble.p = p;
    model.ensemble.n_outputs = 1;
    model.ensemble.trees.resize(config.n_trees);

    GrowParams gp;
    gp.k_candidates = effective_k(config.k_splits, p);
    gp.min_split = 2 * static_cast<int64_t>(config.n_min);

    std::optional<AdjacencySubmatrix> sub;
    if (mode == GlobalTrainMode::Auto && !config.bootstrap && !sample.homogeneous) {
        sub = as_complete_submatrix(sample);
    }

    if (sub) {
        model.lazy_trained = true;
        RectCtx ctx{&*sub, &row_features, &col_features, model.p_r, model.p_c};
        parallel_for(config.n_trees, config.n_threads, [&](int t) {
            Rng rng(Rng::derive(config.seed, kTreeStreamTag, static_cast<uint64_t>(t)));
            Tree& tree = model.ensemble.trees[t];
            tree.n_outputs = 1;
            grow_node(RectangleNodeData::root(ctx), tree, gp, rng);
        });
        return model;
    }

    // Explicit path: materialize pair rows (homogeneous pairs mirrored first,
    // so a bootstrap draw can pick each orientation independently).
    std::vector<Triple> work;
    if (sample.homogeneous) {
        work.reserve(sample.triples.size() * 2);
        for (const Triple& t : sample.triples) {
            work.push_back(t);
            work.push_back({t.col, t.row, t.label});
        }
    } else {
        work = sample.triples;
    }

    PairXAcc xa{&row_features, &col_features, &work, model.p_r};
    PairYAcc ya{&work};
    const int n = static_cast<int>(work.size());
    parallel_for(config.n_trees, config.n_threads, [&](int t) {
        Rng rng(Rng::derive(config.seed, kTreeStreamTag, static_cast<uint64_t>(t)));
        std::vector<int> indices(n);
        if (config.bootstrap) {
            Rng boot(Rng::derive(config.seed, kBootstrapStreamTag, static_cast<uint64_t>(t)));
            for (int i = 0; i < n; ++i) {
                indices[i] = static_cast<int>(boot.index(static_cast<size_t>(n)));
            }
        } else {
            std::iota(indices.begin(), indices.end(), 0);
        }
        Tree& tree = model.ensemble.trees[t];
        tree.n_outputs = 1;
        auto root = SampleSetNodeData<PairXAcc, PairYAcc>::root(xa, ya, p, 1,
                                                                std::move(indices), &g_gauge);
        grow_node(std::move(root), tree, gp, rng);
    });
    return model;
}

double predict_global_raw(const GlobalModel& model, const FeatureTable& row_features,
                          const FeatureTable& col_features, int r_node, int c_node) {
    if (row_features.p != model.p_r || col_features.p != model.p_c) {
        throw ValidationError("predict: feature dimensions differ from the fitted model");
    }
    const int p_r = model.p_r;
    std::span<const double> xr = row_features.row(r_node);
    std::span<const double> xc = col_features.row(c_node);
    double out = 0.0;
    model.ensemble.predict_with(
        [&](int f) { return f < p_r ? xr[f] : xc[f - p_r]; }, std::span<double>(&out, 1));
    return out;
}

double predict_global(const GlobalModel& model, const FeatureTable& row_features,
                      const FeatureTable& col_features, int r_node, int c_node) {
    double a = predict_global_raw(model, row_features, col_features, r_node, c_node);
    if (!model.homogeneous) return a;
    double b = predict_global_raw(model, row_features, col_features, c_node, r_node);
    return 0.5 * (a + b);
}

}  // namespace pairtrees

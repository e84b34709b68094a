#pragma once

// Shared tree-growing core. Both the explicit sample-list trainer and the
// lazy rectangle trainer instantiate grow_node with their own NodeData type,
// so the two paths consume random numbers identically and score candidate
// splits through the same integer-count function. That makes their trees
// structurally identical by construction whenever the underlying data agree.
//
// NodeData concept:
//   int64_t size() const;                       // number of samples
//   const std::vector<int64_t>& positive_counts() const;  // per output
//   int n_features() const;
//   bool feature_range(int f, double& lo, double& hi) const;  // false if constant
//   void score_split(int f, double thr, int64_t& n_left,
//                    std::vector<int64_t>& left_pos) const;   // left_pos pre-zeroed
//   std::pair<NodeData, NodeData> split(int f, double thr) &&; // releases own storage

#include <atomic>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "pairtrees/extra_trees.hpp"
#include "pairtrees/rng.hpp"

namespace pairtrees {

// Tracks "pair record" storage units so tests can assert that lazy training
// never materializes anything close to the full pair matrix.
class StorageGauge {
  public:
    void add(int64_t u) {
        int64_t now = current_.fetch_add(u) + u;
        int64_t peak = peak_.load();
        while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
        }
    }
    void sub(int64_t u) { current_.fetch_sub(u); }
    void reset() {
        current_.store(0);
        peak_.store(0);
    }
    int64_t current() const { return current_.load(); }
    int64_t peak() const { return peak_.load(); }

  private:
    std::atomic<int64_t> current_{0};
    std::atomic<int64_t> peak_{0};
};

// RAII record of `units` charged against a gauge; movable, released once.
class GaugeCharge {
  public:
    GaugeCharge() = default;
    GaugeCharge(StorageGauge* g, int64_t units) : gauge_(g), units_(units) {
        if (gauge_) gauge_->add(units_);
    }
    GaugeCharge(const GaugeCharge&) = delete;
    GaugeCharge& operator=(const GaugeCharge&) = delete;
    GaugeCharge(GaugeCharge&& o) noexcept : gauge_(o.gauge_), units_(o.units_) {
        o.gauge_ = nullptr;
        o.units_ = 0;
    }
    GaugeCharge& operator=(GaugeCharge&& o) noexcept {
        release();
        gauge_ = o.gauge_;
        units_ = o.units_;
        o.gauge_ = nullptr;
        o.units_ = 0;
        return *this;
    }
    ~GaugeCharge() { release(); }
    void release() {
        if (gauge_) {
            gauge_->sub(units_);
            gauge_ = nullptr;
            units_ = 0;
        }
    }

  private:
    StorageGauge* gauge_ = nullptr;
    int64_t units_ = 0;
};

struct GrowParams {
    int k_candidates = 1;
    int64_t min_split = 2;  // nodes with size < min_split become leaves
};

namespace detail {

inline void append_leaf(Tree& tree, int idx, int64_t n, const std::vector<int64_t>& pos) {
    TreeNode& nd = tree.nodes[idx];
    nd.n_samples = n;
    nd.freq_offset = static_cast<int>(tree.leaf_freq.size());
    for (int64_t c : pos) {
        tree.leaf_freq.push_back(static_cast<double>(c) / static_cast<double>(n));
    }
}

}  // namespace detail

// Grows the subtree rooted at `data`, appending nodes to `tree` in preorder.
// Returns the index of the subtree root.
template <class NodeData>
int grow_node(NodeData data, Tree& tree, const GrowParams& gp, Rng& rng) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    const int64_t n = data.size();
    const std::vector<int64_t>& pos = data.positive_counts();

    bool pure = true;
    for (int64_t c : pos) {
        if (c != 0 && c != n) {
            pure = false;
            break;
        }
    }
    if (n < gp.min_split || pure) {
        detail::append_leaf(tree, idx, n, pos);
        return idx;
    }

    // Candidate features are drawn one by one without replacement from the
    // full feature space; constant features are discarded until k_candidates
    // non-constant ones have been scored (or the pool runs out). The kept set
    // is a uniform random subset of the non-constant features.
    const int p = data.n_features();
    std::vector<int> pool(p);
    std::iota(pool.begin(), pool.end(), 0);

    struct Candidate {
        int feature;
        double threshold;
        int64_t n_left;
        double gain;
    };
    std::vector<Candidate> cands;
    cands.reserve(gp.k_candidates);
    std::vector<int64_t> left_pos(pos.size(), 0);

    while (static_cast<int>(cands.size()) < gp.k_candidates && !pool.empty()) {
        size_t j = rng.index(pool.size());
        int f = pool[j];
        pool[j] = pool.back();
        pool.pop_back();
        double lo = 0.0, hi = 0.0;
        if (!data.feature_range(f, lo, hi)) continue;
        double thr = rng.open_interval(lo, hi);
        int64_t n_left = 0;
        std::fill(left_pos.begin(), left_pos.end(), 0);
        data.score_split(f, thr, n_left, left_pos);
        double gain = gini_reduction_from_counts(n, pos, n_left, left_pos);
        cands.push_back({f, thr, n_left, gain});
    }
    if (cands.empty()) {
        // Every feature is constant on this node's samples.
        detail::append_leaf(tree, idx, n, pos);
        return idx;
    }

    double best_gain = cands[0].gain;
    for (const Candidate& c : cands) {
        if (c.gain > best_gain) best_gain = c.gain;
    }
    int chosen = -1;
    int n_tied = 0;
    std::vector<int> tied;
    for (size_t i = 0; i < cands.size(); ++i) {
        if (cands[i].gain == best_gain) {
            tied.push_back(static_cast<int>(i));
            ++n_tied;
        }
    }
    chosen = (n_tied > 1) ? tied[rng.index(tied.size())] : tied[0];

    const Candidate& best = cands[chosen];
    {
        TreeNode& nd = tree.nodes[idx];
        nd.feature = best.feature;
        nd.threshold = best.threshold;
        nd.n_samples = n;
        nd.split_gain = best.gain;
    }

    auto children = std::move(data).split(best.feature, best.threshold);
    int li = grow_node(std::move(children.first), tree, gp, rng);
    int ri = grow_node(std::move(children.second), tree, gp, rng);
    tree.nodes[idx].left = li;
    tree.nodes[idx].right = ri;
    return idx;
}

// NodeData over an explicit list of sample indices. XsAcc(i, f) -> double and
// YsAcc(i, o) -> 0/1 read the underlying data; both must outlive the node.
template <class XsAcc, class YsAcc>
struct SampleSetNodeData {
    const XsAcc* xs = nullptr;
    const YsAcc* ys = nullptr;
    int p = 0;
    StorageGauge* gauge = nullptr;
    std::vector<int> idx;
    std::vector<int64_t> pos;
    GaugeCharge charge;

    static SampleSetNodeData root(const XsAcc& x, const YsAcc& y, int p, int n_outputs,
                                  std::vector<int> indices, StorageGauge* gauge = nullptr) {
        SampleSetNodeData d;
        d.xs = &x;
        d.ys = &y;
        d.p = p;
        d.gauge = gauge;
        d.idx = std::move(indices);
        d.pos.assign(n_outputs, 0);
        for (int i : d.idx) {
            for (int o = 0; o < n_outputs; ++o) d.pos[o] += y(i, o);
        }
        d.charge = GaugeCharge(gauge, static_cast<int64_t>(d.idx.size()));
        return d;
    }

    int64_t size() const { return static_cast<int64_t>(idx.size()); }
    const std::vector<int64_t>& positive_counts() const { return pos; }
    int n_features() const { return p; }

    bool feature_range(int f, double& lo, double& hi) const {
        lo = hi = (*xs)(idx[0], f);
        for (size_t i = 1; i < idx.size(); ++i) {
            double v = (*xs)(idx[i], f);
            if (v < lo) lo = v;
            if (v > hi) hi = v;
        }
        return hi > lo;
    }

    void score_split(int f, double thr, int64_t& n_left, std::vector<int64_t>& left_pos) const {
        const int m = static_cast<int>(pos.size());
        for (int i : idx) {
            if ((*xs)(i, f) < thr) {
                ++n_left;
                for (int o = 0; o < m; ++o) left_pos[o] += (*ys)(i, o);
            }
        }
    }

    std::pair<SampleSetNodeData, SampleSetNodeData> split(int f, double thr) && {
        SampleSetNodeData l, r;
        l.xs = r.xs = xs;
        l.ys = r.ys = ys;
        l.p = r.p = p;
        l.gauge = r.gauge = gauge;
        const int m = static_cast<int>(pos.size());
        l.pos.assign(m, 0);
        for (int i : idx) {
            if ((*xs)(i, f) < thr) {
                l.idx.push_back(i);
                for (int o = 0; o < m; ++o) l.pos[o] += (*ys)(i, o);
            } else {
                r.idx.push_back(i);
            }
        }
        r.pos.resize(m);
        for (int o = 0; o < m; ++o) r.pos[o] = pos[o] - l.pos[o];
        idx.clear();
        idx.shrink_to_fit();
        charge.release();
        l.charge = GaugeCharge(gauge, static_cast<int64_t>(l.idx.size()));
        r.charge = GaugeCharge(gauge, static_cast<int64_t>(r.idx.size()));
        return {std::move(l), std::move(r)};
    }
};

}  // namespace pairtrees

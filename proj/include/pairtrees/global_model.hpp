#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairtrees/extra_trees.hpp"
#include "pairtrees/graph_data.hpp"

namespace pairtrees {

// Virtual concatenated feature space over a pair (r, c): indices
// [0, p_r) read the row node's features, [p_r, p_r + p_c) the column node's.
// No concatenated vector is materialized unless explicitly asked for.
struct PairFeatureView {
    const FeatureTable* row_table = nullptr;
    const FeatureTable* col_table = nullptr;

    int p_r() const { return row_table->p; }
    int p_c() const { return col_table->p; }
    int p() const { return row_table->p + col_table->p; }

    double value(int r_node, int c_node, int f) const {
        return f < row_table->p ? row_table->row(r_node)[f]
                                : col_table->row(c_node)[f - row_table->p];
    }

    // Explicit concatenation, for prediction buffers and oracle checks.
    void concat(int r_node, int c_node, std::vector<double>& out) const;

    std::string feature_name(int f) const;
};

enum class GlobalTrainMode {
    Auto,           // lazy rectangle training when eligible, else explicit
    ForceExplicit,  // always materialize the pair list (oracle path)
};

// Single ensemble over the virtual pair-feature space.
struct GlobalModel {
    EnsembleModel ensemble;  // ensemble.p == p_r + p_c, single output
    bool homogeneous = false;
    bool lazy_trained = false;
    int p_r = 0;
    int p_c = 0;
    UniversePtr rows;
    UniversePtr cols;
    std::vector<Triple> train_triples;  // as given (homogeneous: canonical, unmirrored)
};

// Trains on the sample's pairs. Homogeneous samples are mirrored (each
// unordered pair contributes both orderings) before any bootstrap draw.
// Lazy rectangle training applies when the sample is a complete bipartite
// rectangle, bootstrap is off, and mode is Auto; it grows trees identical to
// the explicit path without ever materializing the pair matrix.
GlobalModel fit_global(const PairSample& sample, const FeatureTable& row_features,
                       const FeatureTable& col_features, const TreesConfig& config,
                       GlobalTrainMode mode = GlobalTrainMode::Auto);

// Probability that pair (r_node, c_node) is connected. Homogeneous models
// average the two argument orders, making the score symmetric.
double predict_global(const GlobalModel& model, const FeatureTable& row_features,
                      const FeatureTable& col_features, int r_node, int c_node);

// One direction only, without the homogeneous symmetrization (for tests).
double predict_global_raw(const GlobalModel& model, const FeatureTable& row_features,
                          const FeatureTable& col_features, int r_node, int c_node);

// Training-storage instrumentation, in pair-record units: the lazy path
// charges |rows| + |cols| per alive tree node, the explicit path one unit per
// pair record it holds. `scan_units` counts label/feature cells touched while
// scoring and splitting (a proxy for training work).
struct GlobalTrainStats {
    int64_t current_units = 0;
    int64_t peak_units = 0;
    int64_t scan_units = 0;
};

void reset_global_train_stats();
GlobalTrainStats global_train_stats();

}  // namespace pairtrees

#pragma once

#include <cstdint>
#include <vector>

#include "pairtrees/extra_trees.hpp"
#include "pairtrees/graph_data.hpp"

namespace pairtrees {

enum class LocalVariant { SingleOutput, MultiOutput };

const char* variant_name(LocalVariant v);

// Combines the two per-side scores of a pair into one. All rules induce the
// mean rule's ordering when the two inputs agree.
enum class MergeRule { Mean, Min, Max, Product };

const char* merge_name(MergeRule r);
double merge_pair(MergeRule rule, double a, double b);

// Deterministic threshold choice for turning first-step scores into binary
// second-step training labels: the largest achievable fraction of scores at
// or above the threshold that does not exceed `target`, with the thresholds
// restricted to observed score values. When even the top tie group exceeds
// the target, the top value is used and `achieved` overshoots it.
struct CalibrationResult {
    double p_th = 0.0;
    double achieved = 0.0;  // fraction of scores >= p_th
    double target = 0.0;
    bool degenerate = false;  // all pooled scores were equal
};

CalibrationResult calibrate_threshold(std::vector<double> scores, double target);

// Local approach: per-node models on the learning-set nodes. The
// single-output variant trains one ensemble per LS node and side; the
// multi-output variant trains one ensemble per side whose outputs are that
// side's LS nodes in universe order (requires a complete training rectangle).
// An optional second step trains per-TS-node models on thresholded
// first-step predictions so that TSxTS pairs can be scored.
//
// Orientation: a "col model" predicts the labels of one column node and
// therefore consumes row features, and vice versa. Homogeneous graphs have a
// single side; their models live in the col-side fields, indexed by the node
// lists ls_c / ts_c (== ls_r / ts_r).
struct LocalModel {
    LocalVariant variant = LocalVariant::SingleOutput;
    bool homogeneous = false;
    UniversePtr rows;
    UniversePtr cols;
    TreesConfig config;
    std::vector<Triple> train_triples;

    std::vector<char> in_ls_r, in_ls_c;     // by universe node index
    std::vector<int> ls_r, ls_c;            // universe order
    std::vector<int> ls_r_slot, ls_c_slot;  // node index -> slot in ls list, -1

    std::vector<EnsembleModel> col_models;  // SO: slot-parallel to ls_c
    std::vector<EnsembleModel> row_models;  // SO: slot-parallel to ls_r
    EnsembleModel col_side;                 // MO: outputs ls_c
    EnsembleModel row_side;                 // MO: outputs ls_r
    double train_positive_fraction = 0.0;

    bool has_second_step = false;
    std::vector<int> ts_r, ts_c;
    std::vector<int> ts_r_slot, ts_c_slot;
    std::vector<EnsembleModel> second_row_models;  // SO: slot-parallel to ts_r
    std::vector<EnsembleModel> second_col_models;  // SO: slot-parallel to ts_c
    EnsembleModel second_row_side;                 // MO: outputs ts_r
    EnsembleModel second_col_side;                 // MO: outputs ts_c
    CalibrationResult calib_row, calib_col;        // homogeneous: col only

    int n_first_step_models() const;
    int n_second_step_models() const;
};

// Seed stream tags. The MO model of a side uses the stream of that side's
// slot-0 SO model, which is what makes MO on a one-column rectangle
// reproduce the corresponding SO model exactly.
inline constexpr uint64_t kColFirstTag = 0x6c633100;   // first-step col-node models
inline constexpr uint64_t kRowFirstTag = 0x6c723100;   // first-step row-node models
inline constexpr uint64_t kColSecondTag = 0x6c633200;  // second-step col-node models
inline constexpr uint64_t kRowSecondTag = 0x6c723200;  // second-step row-node models

LocalModel fit_local(const PairSample& sample, const FeatureTable& row_features,
                     const FeatureTable& col_features, LocalVariant variant,
                     const TreesConfig& config);

// Trains the second step for the given TS nodes (default: every universe
// node outside the LS of its side). Homogeneous models take the node list
// via ts_rows; ts_cols must then be null.
void fit_second_step(LocalModel& model, const FeatureTable& row_features,
                     const FeatureTable& col_features, const TreesConfig& config,
                     const std::vector<int>* ts_rows = nullptr,
                     const std::vector<int>* ts_cols = nullptr);

// Pair scorers. r_node / c_node are universe indices on their side (for
// homogeneous graphs both index the single universe). Family membership is
// checked; a mismatch raises ValidationError.
double predict_lsls(const LocalModel& model, const FeatureTable& row_features,
                    const FeatureTable& col_features, int r_node, int c_node,
                    MergeRule rule = MergeRule::Mean);
double predict_lsts(const LocalModel& model, const FeatureTable& row_features,
                    const FeatureTable& col_features, int r_node, int c_node);
double predict_tsts(const LocalModel& model, const FeatureTable& row_features,
                    const FeatureTable& col_features, int r_node, int c_node,
                    MergeRule rule = MergeRule::Mean);

// Dispatches on the pair's family.
double predict_local(const LocalModel& model, const FeatureTable& row_features,
                     const FeatureTable& col_features, int r_node, int c_node,
                     MergeRule rule = MergeRule::Mean);

}  // namespace pairtrees

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pairtrees/global_model.hpp"
#include "pairtrees/graph_data.hpp"
#include "pairtrees/local_model.hpp"

namespace pairtrees {

enum class CvScheme { PairsCV, NodesCV };
enum class Method { Global, LocalSO, LocalMO };

// How NodesCV turns node folds into evaluation blocks.
//   Paired:   k blocks; block b tests every pair touching a fold-b node, so
//             it yields LSxTS, TSxLS and TSxTS pairs at once.
//   AllPairs: k*k blocks; block (i, j) holds out fold-i rows and fold-j cols
//             and tests only their TSxTS rectangle (bipartite graphs only).
enum class BlockMode { Paired, AllPairs };

const char* scheme_name(CvScheme s);
const char* method_name(Method m);
const char* block_mode_name(BlockMode m);

// Precomputed fold assignments for every repeat.
struct FoldPlan {
    CvScheme scheme = CvScheme::NodesCV;
    int k = 10;
    int repeats = 10;
    BlockMode block_mode = BlockMode::Paired;
    uint64_t seed = 0;
    bool homogeneous = false;
    std::vector<std::vector<int>> pair_fold;  // PairsCV: [repeat][triple index]
    std::vector<std::vector<int>> row_fold;   // NodesCV: [repeat][row node index]
    std::vector<std::vector<int>> col_fold;   // NodesCV; equals row_fold when homogeneous
};

FoldPlan make_folds(CvScheme scheme, const PairSample& sample, int k, int repeats,
                    uint64_t seed, BlockMode block_mode = BlockMode::Paired);

inline constexpr uint64_t kPairFoldTag = 0x65767030;
inline constexpr uint64_t kRowFoldTag = 0x65767031;
inline constexpr uint64_t kColFoldTag = 0x65767032;

// Threshold-free ranking metrics. Ties are handled exactly: AUROC uses the
// average-rank statistic, AUPR is average precision with tied scores treated
// as one atomic group. Absent when undefined (AUROC needs both classes,
// AUPR needs at least one positive).
std::optional<double> roc_auc(std::span<const double> scores, std::span<const uint8_t> labels);
std::optional<double> pr_auc(std::span<const double> scores, std::span<const uint8_t> labels);

struct CurvePoint {
    double x = 0.0;  // ROC: false positive rate; PR: recall
    double y = 0.0;  // ROC: true positive rate; PR: precision
};

struct Curve {
    std::vector<CurvePoint> points;
    double area = 0.0;  // matches roc_auc / pr_auc exactly
};

std::optional<Curve> roc_curve(std::span<const double> scores, std::span<const uint8_t> labels);
std::optional<Curve> pr_curve(std::span<const double> scores, std::span<const uint8_t> labels);

// Positive-degree baseline computed on a training sample: LSxLS pairs score
// deg(r) + deg(c), one-sided pairs score the LS node's degree, and TSxTS
// pairs all score the same constant (no information).
struct DegreeBaseline {
    bool homogeneous = false;
    std::vector<double> deg_r;  // by universe node index
    std::vector<double> deg_c;
};

DegreeBaseline degree_baseline(const PairSample& train);
double baseline_score(const DegreeBaseline& b, const FamilyPartition& part, int r, int c);

struct ScoredPair {
    int row = 0;
    int col = 0;
    PairFamily family = PairFamily::LSLS;
    uint8_t label = 0;
    double score = 0.0;
    double baseline = 0.0;
};

struct BlockScores {
    int repeat = 0;
    int fold_row = 0;
    int fold_col = 0;  // PairsCV and paired NodesCV: equals fold_row
    std::vector<ScoredPair> pairs;
};

struct FamilyStats {
    bool present = false;  // some block scored this family
    int64_t n_pairs = 0;
    int64_t n_positives = 0;
    std::vector<double> auroc, aupr;            // one entry per block where defined
    std::vector<double> base_auroc, base_aupr;  // degree baseline, same blocks' pairs
    int undefined_auroc = 0;                    // blocks skipped (single class / no positives)
    int undefined_aupr = 0;
    std::vector<double> pooled_scores;  // across all repeats/blocks, for curves
    std::vector<uint8_t> pooled_labels;
};

struct CalibrationRecord {
    int repeat = 0;
    int fold_row = 0;
    int fold_col = 0;
    char side = 'c';  // 'r' = TS-row models, 'c' = TS-col models
    CalibrationResult result;
};

struct EvalReport {
    Method method = Method::Global;
    CvScheme scheme = CvScheme::NodesCV;
    BlockMode block_mode = BlockMode::Paired;
    int k = 0;
    int repeats = 0;
    uint64_t seed = 0;
    bool homogeneous = false;
    FamilyStats families[kNumFamilies];
    int64_t dropped_non_lsls = 0;  // PairsCV test pairs outside LSxLS
    std::vector<CalibrationRecord> calibrations;
    std::vector<BlockScores> blocks;  // only when settings.keep_scores
};

struct RunSettings {
    TreesConfig trees;
    MergeRule merge = MergeRule::Mean;
    GlobalTrainMode global_mode = GlobalTrainMode::Auto;
    bool keep_scores = false;
};

// Full cross-validated evaluation: per block, fits the chosen method on the
// block's training pairs, scores its test pairs, tags them with the family
// induced by that block's actual training sample, and accumulates per-family
// metrics next to the degree baseline.
EvalReport run_experiment(const PairSample& sample, const FeatureTable& row_features,
                          const FeatureTable& col_features, Method method,
                          const FoldPlan& plan, const RunSettings& settings);

double mean_of(const std::vector<double>& v);
double sd_of(const std::vector<double>& v);  // sample sd, 0 when fewer than 2

}  // namespace pairtrees

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pairtrees/common.hpp"

namespace pairtrees {

enum class Side { Row, Col };

inline const char* side_name(Side s) { return s == Side::Row ? "row" : "col"; }

// One family of network nodes. A homogeneous graph uses the same universe
// object on both sides of the adjacency matrix.
class NodeUniverse {
  public:
    static std::shared_ptr<const NodeUniverse> make(Side side, std::vector<std::string> ids);

    Side side() const { return side_; }
    int size() const { return static_cast<int>(ids_.size()); }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::string& id(int index) const { return ids_[index]; }
    // -1 when the id is unknown.
    int index_of(const std::string& id) const;

  private:
    NodeUniverse(Side side, std::vector<std::string> ids);
    Side side_;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, int> index_;
};

using UniversePtr = std::shared_ptr<const NodeUniverse>;

// Per-node feature vectors x(n), dense, no missing values.
struct FeatureTable {
    UniversePtr universe;
    int p = 0;
    std::vector<std::string> feature_names;
    std::vector<double> values;  // row-major, universe->size() * p

    std::span<const double> row(int node_index) const {
        return {values.data() + static_cast<size_t>(node_index) * p, static_cast<size_t>(p)};
    }
};

struct Triple {
    int row = 0;
    int col = 0;
    uint8_t label = 0;
};

// The learning sample of labeled pairs. Homogeneous samples store each
// unordered pair once, with row < col by universe index.
struct PairSample {
    UniversePtr rows;
    UniversePtr cols;
    bool homogeneous = false;
    std::vector<Triple> triples;

    long long n_positives() const;
    // Number of labeled pairs a node takes part in, restricted to positives.
    // For homogeneous samples both endpoints count and `side` is ignored.
};

enum class PairFamily { LSLS = 0, LSTS = 1, TSLS = 2, TSTS = 3 };

constexpr int kNumFamilies = 4;

const char* family_name(PairFamily f);

// LS/TS node split induced by a sample, with family lookup for pairs.
// family_of() classifies by LS membership alone and is total over all pairs;
// family_of_strict() additionally refuses pairs that belong to the sample.
// In homogeneous mode LSTS and TSLS collapse to LSTS.
struct FamilyPartition {
    UniversePtr rows;
    UniversePtr cols;
    bool homogeneous = false;
    std::vector<char> in_ls_r;  // indexed by row-universe node index
    std::vector<char> in_ls_c;
    std::vector<int> ls_r, ts_r, ls_c, ts_c;  // node indices in universe order
    std::unordered_set<int64_t> sample_pairs;

    PairFamily family_of(int r, int c) const;
    bool in_sample(int r, int c) const;
    std::optional<PairFamily> family_of_strict(int r, int c) const;

    int64_t pair_key(int r, int c) const;
};

FamilyPartition partition_families(const PairSample& sample);

// Positive-label degree of a node within the sample. The node must belong to
// the LS set of its side.
int degree(const PairSample& sample, int node_index, Side side);
int degree(const PairSample& sample, const std::string& node_id, Side side);

// Dense, hole-free label rectangle Y(rows, cols).
struct AdjacencySubmatrix {
    std::vector<int> row_nodes;  // universe indices
    std::vector<int> col_nodes;
    std::vector<uint8_t> labels;  // row-major |row_nodes| x |col_nodes|

    int n_rows() const { return static_cast<int>(row_nodes.size()); }
    int n_cols() const { return static_cast<int>(col_nodes.size()); }
    uint8_t label(int i, int j) const { return labels[static_cast<size_t>(i) * col_nodes.size() + j]; }
};

// Empty when the sample does not cover a full rectangle. Homogeneous samples
// never qualify (the diagonal is excluded by construction).
std::optional<AdjacencySubmatrix> as_complete_submatrix(const PairSample& sample);

// TSV loaders. Lines starting with '#' are skipped; fields are tab-separated.
FeatureTable load_feature_table(const std::string& path, Side side);
FeatureTable parse_feature_table(std::istream& in, Side side, const std::string& origin);
PairSample load_pair_sample(const std::string& path, UniversePtr rows, UniversePtr cols,
                            bool homogeneous);
PairSample parse_pair_sample(std::istream& in, UniversePtr rows, UniversePtr cols,
                             bool homogeneous, const std::string& origin);

// Assemble a sample directly from id triples (used by generators and tests).
PairSample make_pair_sample(UniversePtr rows, UniversePtr cols, bool homogeneous,
                            std::vector<Triple> triples);

// Synthetic bipartite network with planted block structure: nodes carry one
// jittered indicator coordinate per block plus pure-noise coordinates, and a
// pair is connected iff the two blocks match, with labels flipped at rate
// `noise`. Complete: all n_r * n_c pairs are labeled.
struct SynthBlockNetwork {
    FeatureTable row_features;
    FeatureTable col_features;
    PairSample sample;
    std::vector<int> row_block;
    std::vector<int> col_block;
};
SynthBlockNetwork synth_block_network(int n_r, int n_c, int blocks, double noise, uint64_t seed);

// Homogeneous preferential-attachment graph: every node past the first m
// attaches to m distinct earlier nodes with probability proportional to
// degree + 1. All unordered pairs are labeled.
PairSample synth_preferential_network(int n, int m, uint64_t seed);

}  // namespace pairtrees

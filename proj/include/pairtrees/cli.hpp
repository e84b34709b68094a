#pragma once

#include <cstdint>
#include <string>

#include "pairtrees/evaluation.hpp"

namespace pairtrees {

// Everything a run or fit needs, assembled from a flat key=value config file
// and/or command-line flags (flags win).
struct ExperimentConfig {
    // data
    std::string pairs_path;
    std::string row_features_path;
    std::string col_features_path;  // empty for homogeneous graphs
    bool homogeneous = false;
    // model
    Method method = Method::Global;
    TreesConfig trees;  // n_trees=100, k_splits=auto, n_min=1, bootstrap off
    MergeRule merge = MergeRule::Mean;
    GlobalTrainMode global_mode = GlobalTrainMode::Auto;
    // protocol
    CvScheme scheme = CvScheme::NodesCV;
    BlockMode block_mode = BlockMode::Paired;
    int folds = 10;
    int repeats = 10;
    // output
    std::string out_dir;
    std::string model_path;
};

// Applies one key=value setting; throws ValidationError on unknown keys or
// unparseable values.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                        const std::string& where);

// Parses a flat config file: one `key = value` per line, '#' comments.
ExperimentConfig load_config_file(const std::string& path);

// Canonical one-line echo of the experiment identity (data, model, protocol;
// output locations and thread counts excluded) and its FNV-1a hash. The hash
// is stamped into every output file so results can be traced to a config.
std::string config_echo(const ExperimentConfig& cfg);
uint64_t config_hash(const ExperimentConfig& cfg);

// Subcommand bodies. They throw ValidationError for user/input errors (CLI
// exit code 2) and other exceptions for internal failures (exit code 1).
void cmd_run(const ExperimentConfig& cfg);
void cmd_fit(const ExperimentConfig& cfg);
void cmd_predict(const std::string& model_path, const std::string& row_features_path,
                 const std::string& col_features_path, const std::string& pair_list_path,
                 const std::string& out_path);
void cmd_importance(const std::string& model_path, const std::string& out_dir);
void cmd_export_partition(const std::string& model_path, const std::string& row_features_path,
                          const std::string& col_features_path, const std::string& out_path,
                          int max_trees);

struct SynthSpec {
    std::string type = "block";  // "block" | "preferential"
    int rows = 40;
    int cols = 40;
    int blocks = 4;
    double noise = 0.05;
    int n = 200;
    int m = 3;
    uint64_t seed = 0;
    std::string out_dir;
};

void cmd_synth(const SynthSpec& spec);

}  // namespace pairtrees

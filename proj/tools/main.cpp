// Command-line front end: run / fit / predict / importance / export-partition / synth.
#include <array>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "pairtrees/cli.hpp"

namespace {

// One experiment option: a config-file key, its command-line spelling, and
// the parsed raw value. Values route through apply_config_entry so the
// command line and the config file share validation and precedence is
// simply "config file first, explicit flags override".
struct KeyOpt {
    const char* key;
    const char* flag;
    const char* help;
    std::string value;
    CLI::Option* opt = nullptr;
};

struct ExperimentArgs {
    std::string config_path;
    std::array<KeyOpt, 17> opts{{
        {"pairs", "--pairs", "labelled pair list (row_id<TAB>col_id<TAB>0|1)"},
        {"row_features", "--row-features", "feature table for row nodes"},
        {"col_features", "--col-features", "feature table for column nodes"},
        {"method", "--method", "global | local-so | local-mo"},
        {"scheme", "--scheme", "pairs-cv | nodes-cv"},
        {"block_mode", "--block-mode", "paired | all-pairs (nodes-cv on bipartite graphs)"},
        {"folds", "--folds", "cross-validation folds"},
        {"repeats", "--repeats", "cross-validation repeats"},
        {"trees", "--trees", "trees per ensemble"},
        {"k_splits", "--k-splits", "random split candidates per node (0 = sqrt(p))"},
        {"n_min", "--n-min", "minimum samples per leaf"},
        {"merge", "--merge", "mean | min | max | product (local two-score merge)"},
        {"global_mode", "--global-mode", "auto | explicit (pair-matrix training)"},
        {"seed", "--seed", "master random seed"},
        {"threads", "--threads", "worker threads (0 = auto)"},
        {"out_dir", "--out-dir", "directory for report files"},
        {"model_path", "--model", "model file path"},
    }};
};

void register_experiment_args(CLI::App* sub, ExperimentArgs& args, bool with_homogeneous_flags,
                              std::string* homogeneous, std::string* bootstrap) {
    sub->add_option("--config", args.config_path, "config file with key = value lines");
    for (KeyOpt& k : args.opts) {
        k.opt = sub->add_option(k.flag, k.value, k.help);
    }
    if (with_homogeneous_flags) {
        sub->add_flag("--homogeneous{1},--no-homogeneous{0}", *homogeneous,
                      "all nodes share one universe; pairs are unordered");
        sub->add_flag("--bootstrap{1},--no-bootstrap{0}", *bootstrap,
                      "bootstrap the training sample per tree");
    }
}

pairtrees::ExperimentConfig resolve_config(const ExperimentArgs& args,
                                           const std::string& homogeneous,
                                           const std::string& bootstrap) {
    pairtrees::ExperimentConfig cfg;
    if (!args.config_path.empty()) cfg = pairtrees::load_config_file(args.config_path);
    if (!homogeneous.empty()) {
        pairtrees::apply_config_entry(cfg, "homogeneous", homogeneous, "command line");
    }
    if (!bootstrap.empty()) {
        pairtrees::apply_config_entry(cfg, "bootstrap", bootstrap, "command line");
    }
    for (const KeyOpt& k : args.opts) {
        if (k.opt->count() > 0) {
            pairtrees::apply_config_entry(cfg, k.key, k.value, "command line");
        }
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Supervised network inference: classify node pairs with ensembles of "
                 "extremely randomized trees."};
    app.require_subcommand(1);

    ExperimentArgs run_args, fit_args;
    std::string run_homog, run_boot, fit_homog, fit_boot;

    CLI::App* run = app.add_subcommand("run", "cross-validate a method and write report files");
    register_experiment_args(run, run_args, true, &run_homog, &run_boot);
    run->callback([&] { pairtrees::cmd_run(resolve_config(run_args, run_homog, run_boot)); });

    CLI::App* fit = app.add_subcommand("fit", "train on the full pair sample and save the model");
    register_experiment_args(fit, fit_args, true, &fit_homog, &fit_boot);
    fit->callback([&] { pairtrees::cmd_fit(resolve_config(fit_args, fit_homog, fit_boot)); });

    std::string p_model, p_rowf, p_colf, p_pairs, p_out;
    CLI::App* predict = app.add_subcommand("predict", "score node pairs with a saved model");
    predict->add_option("--model", p_model, "model file")->required();
    predict->add_option("--row-features", p_rowf, "feature table for row nodes")->required();
    predict->add_option("--col-features", p_colf, "feature table for column nodes");
    predict->add_option("--pairs", p_pairs, "pair list to score (row_id<TAB>col_id)")->required();
    predict->add_option("--out", p_out, "output file")->required();
    predict->callback([&] { pairtrees::cmd_predict(p_model, p_rowf, p_colf, p_pairs, p_out); });

    std::string i_model, i_dir;
    CLI::App* importance = app.add_subcommand("importance", "rank features by impurity reduction");
    importance->add_option("--model", i_model, "model file")->required();
    importance->add_option("--out-dir", i_dir, "directory for ranking files")->required();
    importance->callback([&] { pairtrees::cmd_importance(i_model, i_dir); });

    std::string e_model, e_rowf, e_colf, e_out;
    int e_max_trees = 0;
    CLI::App* exportp = app.add_subcommand(
        "export-partition", "write the leaf rectangles a global model induces on its training matrix");
    exportp->add_option("--model", e_model, "model file (global)")->required();
    exportp->add_option("--row-features", e_rowf, "feature table for row nodes")->required();
    exportp->add_option("--col-features", e_colf, "feature table for column nodes")->required();
    exportp->add_option("--out", e_out, "output file")->required();
    exportp->add_option("--max-trees", e_max_trees, "limit to the first N trees (0 = all)");
    exportp->callback(
        [&] { pairtrees::cmd_export_partition(e_model, e_rowf, e_colf, e_out, e_max_trees); });

    pairtrees::SynthSpec synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic benchmark network");
    synth_cmd->add_option("--type", synth.type, "block | preferential");
    synth_cmd->add_option("--rows", synth.rows, "row nodes (block)");
    synth_cmd->add_option("--cols", synth.cols, "column nodes (block)");
    synth_cmd->add_option("--blocks", synth.blocks, "latent blocks (block)");
    synth_cmd->add_option("--noise", synth.noise, "label flip probability (block)");
    synth_cmd->add_option("--n", synth.n, "nodes (preferential)");
    synth_cmd->add_option("--m", synth.m, "attachments per new node (preferential)");
    synth_cmd->add_option("--seed", synth.seed, "random seed");
    synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();
    synth_cmd->callback([&] { pairtrees::cmd_synth(synth); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const pairtrees::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

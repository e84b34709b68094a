#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pairtrees/cli.hpp"
#include "pairtrees/model_io.hpp"

using namespace pairtrees;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("pairtrees_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const char* exe = std::getenv("PAIRTREES_CLI");
    if (!exe) return -1;
    std::string cmd = std::string(exe) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

// A tiny bipartite dataset on disk, produced through the synth command path.
struct DiskData {
    fs::path dir;
    ExperimentConfig cfg;
};

DiskData make_disk_data(const std::string& name, uint64_t seed) {
    DiskData d;
    d.dir = fresh_dir(name);
    SynthSpec spec;
    spec.type = "block";
    spec.rows = 10;
    spec.cols = 8;
    spec.blocks = 2;
    spec.noise = 0.0;
    spec.seed = seed;
    spec.out_dir = d.dir.string();
    cmd_synth(spec);
    d.cfg.pairs_path = (d.dir / "pairs.tsv").string();
    d.cfg.row_features_path = (d.dir / "row_features.tsv").string();
    d.cfg.col_features_path = (d.dir / "col_features.tsv").string();
    d.cfg.trees.n_trees = 8;
    d.cfg.trees.seed = 5;
    d.cfg.folds = 3;
    d.cfg.repeats = 1;
    return d;
}

}  // namespace

TEST_CASE("config files parse key = value lines with comments") {
    fs::path dir = fresh_dir("config");
    fs::path cfg_path = dir / "exp.cfg";
    std::ofstream(cfg_path) << "# experiment\n"
                               "pairs = data/pairs.tsv\n"
                               "method = local-so\n"
                               "folds=4\n"
                               "  trees =  25\n"
                               "bootstrap = true\n"
                               "merge = product\n"
                               "seed = 99\n";
    ExperimentConfig cfg = load_config_file(cfg_path.string());
    CHECK(cfg.pairs_path == "data/pairs.tsv");
    CHECK(cfg.method == Method::LocalSO);
    CHECK(cfg.folds == 4);
    CHECK(cfg.trees.n_trees == 25);
    CHECK(cfg.trees.bootstrap);
    CHECK(cfg.merge == MergeRule::Product);
    CHECK(cfg.trees.seed == 99);

    std::ofstream(cfg_path) << "unknown_key = 1\n";
    CHECK_THROWS_AS(load_config_file(cfg_path.string()), ValidationError);
    std::ofstream(cfg_path) << "method = nonsense\n";
    CHECK_THROWS_AS(load_config_file(cfg_path.string()), ValidationError);
    std::ofstream(cfg_path) << "just a line\n";
    CHECK_THROWS_AS(load_config_file(cfg_path.string()), ValidationError);
}

TEST_CASE("config echo and hash ignore output locations but track parameters") {
    ExperimentConfig a;
    a.pairs_path = "p.tsv";
    a.row_features_path = "r.tsv";
    a.col_features_path = "c.tsv";
    ExperimentConfig b = a;
    b.out_dir = "somewhere/else";
    b.model_path = "m.model";
    b.trees.n_threads = 7;
    CHECK(config_echo(a) == config_echo(b));
    CHECK(config_hash(a) == config_hash(b));
    b.trees.seed = 1;
    CHECK(config_hash(a) != config_hash(b));
    ExperimentConfig c = a;
    c.method = Method::LocalMO;
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("synthetic block files load back into a consistent dataset") {
    DiskData d = make_disk_data("synth", 11);
    FeatureTable fr = load_feature_table(d.cfg.row_features_path, Side::Row);
    FeatureTable fc = load_feature_table(d.cfg.col_features_path, Side::Col);
    PairSample s = load_pair_sample(d.cfg.pairs_path, fr.universe, fc.universe, false);
    CHECK(fr.universe->size() == 10);
    CHECK(fc.universe->size() == 8);
    CHECK(s.triples.size() == 80);
    CHECK(fr.p == 2 + 4);
    // Exact value round-trip through the %.17g text files.
    SynthBlockNetwork net = synth_block_network(10, 8, 2, 0.0, 11);
    CHECK(fr.values == net.row_features.values);
    CHECK(fc.values == net.col_features.values);
}

TEST_CASE("synthetic preferential files include pure-noise features") {
    fs::path dir = fresh_dir("synthpref");
    SynthSpec spec;
    spec.type = "preferential";
    spec.n = 25;
    spec.m = 2;
    spec.seed = 3;
    spec.out_dir = dir.string();
    cmd_synth(spec);
    FeatureTable f = load_feature_table((dir / "features.tsv").string(), Side::Row);
    PairSample s = load_pair_sample((dir / "pairs.tsv").string(), f.universe, f.universe, true);
    CHECK(f.universe->size() == 25);
    CHECK(f.p == 4);
    CHECK(s.homogeneous);
    CHECK(s.triples.size() == 25 * 24 / 2);
    CHECK(s.n_positives() == 46);
}

TEST_CASE("run writes a summary whose reruns are byte-identical") {
    DiskData d = make_disk_data("run", 13);
    d.cfg.method = Method::Global;
    d.cfg.scheme = CvScheme::NodesCV;
    fs::path out_a = fresh_dir("run_out_a");
    fs::path out_b = fresh_dir("run_out_b");
    d.cfg.out_dir = out_a.string();
    cmd_run(d.cfg);
    d.cfg.out_dir = out_b.string();
    d.cfg.trees.n_threads = 3;  // thread count must not matter
    cmd_run(d.cfg);
    for (const char* name : {"summary.tsv", "run_meta.tsv"}) {
        CHECK(slurp(out_a / name) == slurp(out_b / name));
    }
    // Every file in the two directories matches.
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(out_a)) {
        CHECK(slurp(entry.path()) == slurp(out_b / entry.path().filename()));
        ++compared;
    }
    CHECK(compared > 4);
    std::string summary = slurp(out_a / "summary.tsv");
    CHECK(summary.find("# config_hash") != std::string::npos);
    CHECK(summary.find("LSTS\tAUROC") != std::string::npos);
}

TEST_CASE("fit, predict, importance, and export-partition work from files") {
    DiskData d = make_disk_data("fitpredict", 17);
    d.cfg.method = Method::Global;
    fs::path model = d.dir / "g.model";
    d.cfg.model_path = model.string();
    cmd_fit(d.cfg);

    // Prediction uses id-keyed lookup: permuting feature rows must not
    // change anything.
    std::ifstream in(d.cfg.row_features_path);
    std::string header, line;
    std::getline(in, header);  // banner comment
    std::getline(in, header);
    std::vector<std::string> rows;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(line);
    in.close();
    std::reverse(rows.begin(), rows.end());
    fs::path permuted = d.dir / "row_features_permuted.tsv";
    {
        std::ofstream out(permuted);
        out << header << "\n";
        for (const std::string& r : rows) out << r << "\n";
    }
    fs::path pair_list = d.dir / "query.tsv";
    std::ofstream(pair_list) << "r0\tc0\nr3\tc5\nr9\tc7\n";
    fs::path pred_a = d.dir / "pred_a.tsv";
    fs::path pred_b = d.dir / "pred_b.tsv";
    cmd_predict(model.string(), d.cfg.row_features_path, d.cfg.col_features_path,
                pair_list.string(), pred_a.string());
    cmd_predict(model.string(), permuted.string(), d.cfg.col_features_path, pair_list.string(),
                pred_b.string());
    CHECK(slurp(pred_a) == slurp(pred_b));
    CHECK(slurp(pred_a).find("LSLS") != std::string::npos);

    // Unknown node id: fail without writing the output file.
    fs::path bad_list = d.dir / "bad.tsv";
    std::ofstream(bad_list) << "r0\tc0\nr0\tnope\n";
    fs::path pred_c = d.dir / "pred_c.tsv";
    CHECK_THROWS_AS(cmd_predict(model.string(), d.cfg.row_features_path,
                                d.cfg.col_features_path, bad_list.string(), pred_c.string()),
                    ValidationError);
    CHECK(!fs::exists(pred_c));

    fs::path imp_dir = d.dir / "imp";
    cmd_importance(model.string(), imp_dir.string());
    std::string imp = slurp(imp_dir / "importance.tsv");
    CHECK(imp.find("row:blk0") != std::string::npos);
    CHECK(imp.find("col:blk1") != std::string::npos);

    fs::path part = d.dir / "partition.tsv";
    cmd_export_partition(model.string(), d.cfg.row_features_path, d.cfg.col_features_path,
                         part.string(), 2);
    // Each tree's leaves partition the 10 x 8 rectangle.
    std::istringstream ps(slurp(part));
    std::string pline;
    long long pair_sum[2] = {0, 0};
    while (std::getline(ps, pline)) {
        if (pline.empty() || pline[0] == '#' || pline.rfind("tree\t", 0) == 0) continue;
        std::istringstream fields(pline);
        int tree, leaf, nr, nc;
        long long pairs, pos;
        double freq;
        fields >> tree >> leaf >> nr >> nc >> pairs >> pos >> freq;
        REQUIRE(tree < 2);
        CHECK(pairs == static_cast<long long>(nr) * nc);
        CHECK(pos <= pairs);
        // Fully grown trees on noiseless data leave only pure leaves.
        CHECK((freq == 0.0 || freq == 1.0));
        pair_sum[tree] += pairs;
    }
    CHECK(pair_sum[0] == 80);
    CHECK(pair_sum[1] == 80);
}

TEST_CASE("local models fitted through the command layer predict everywhere") {
    DiskData d = make_disk_data("fitlocal", 19);
    d.cfg.method = Method::LocalMO;
    fs::path model = d.dir / "mo.model";
    d.cfg.model_path = model.string();
    cmd_fit(d.cfg);
    ModelBundle bundle = read_model_bundle_file(model.string());
    CHECK(bundle.kind == "local-mo");
    CHECK(bundle.local.n_first_step_models() == 2);
    fs::path pair_list = d.dir / "query.tsv";
    std::ofstream(pair_list) << "r1\tc1\nr8\tc2\n";
    fs::path pred = d.dir / "pred.tsv";
    cmd_predict(model.string(), d.cfg.row_features_path, d.cfg.col_features_path,
                pair_list.string(), pred.string());
    CHECK(slurp(pred).find("r8") != std::string::npos);
}

TEST_CASE("the executable maps errors to exit codes") {
    if (!std::getenv("PAIRTREES_CLI")) return;  // only under the test harness
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("nonsense-subcommand") != 0);
    CHECK(run_cli("run --pairs /nonexistent.tsv --row-features /nonexistent.tsv "
                  "--col-features /nonexistent.tsv --out-dir /tmp/pairtrees_cli_err") == 2);
    DiskData d = make_disk_data("exe", 23);
    fs::path out = fresh_dir("exe_out");
    std::string args = "run --pairs " + d.cfg.pairs_path + " --row-features " +
                       d.cfg.row_features_path + " --col-features " + d.cfg.col_features_path +
                       " --trees 5 --folds 3 --repeats 1 --seed 2 --out-dir " + out.string();
    CHECK(run_cli(args) == 0);
    CHECK(fs::exists(out / "summary.tsv"));
}

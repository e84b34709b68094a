#include "pairtrees/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pairtrees/model_io.hpp"

namespace pairtrees {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& where, const std::string& key,
                            const std::string& value) {
    throw ValidationError(strprintf("%s: bad value '%s' for '%s'", where.c_str(), value.c_str(),
                                    key.c_str()));
}

bool parse_bool(const std::string& v, const std::string& where, const std::string& key) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    bad_value(where, key, v);
}

int64_t parse_int(const std::string& v, const std::string& where, const std::string& key) {
    int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(where, key, v);
    return out;
}

uint64_t parse_u64(const std::string& v, const std::string& where, const std::string& key) {
    uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(where, key, v);
    return out;
}

Method parse_method(const std::string& v, const std::string& where) {
    if (v == "global") return Method::Global;
    if (v == "local-so") return Method::LocalSO;
    if (v == "local-mo") return Method::LocalMO;
    bad_value(where, "method", v);
}

CvScheme parse_scheme(const std::string& v, const std::string& where) {
    if (v == "pairs-cv") return CvScheme::PairsCV;
    if (v == "nodes-cv") return CvScheme::NodesCV;
    bad_value(where, "scheme", v);
}

BlockMode parse_block_mode(const std::string& v, const std::string& where) {
    if (v == "paired") return BlockMode::Paired;
    if (v == "all-pairs") return BlockMode::AllPairs;
    bad_value(where, "block_mode", v);
}

MergeRule parse_merge(const std::string& v, const std::string& where) {
    if (v == "mean") return MergeRule::Mean;
    if (v == "min") return MergeRule::Min;
    if (v == "max") return MergeRule::Max;
    if (v == "product") return MergeRule::Product;
    bad_value(where, "merge", v);
}

GlobalTrainMode parse_global_mode(const std::string& v, const std::string& where) {
    if (v == "auto") return GlobalTrainMode::Auto;
    if (v == "explicit") return GlobalTrainMode::ForceExplicit;
    bad_value(where, "global_mode", v);
}

const char* global_mode_name(GlobalTrainMode m) {
    return m == GlobalTrainMode::Auto ? "auto" : "explicit";
}

std::string fmt_double(double v) { return strprintf("%.17g", v); }

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
    out.flush();
    if (!out) throw ValidationError("failed writing file: " + path);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create directory: " + dir + " (" + ec.message() + ")");
}

}  // namespace

void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                        const std::string& where) {
    if (key == "pairs") cfg.pairs_path = value;
    else if (key == "row_features") cfg.row_features_path = value;
    else if (key == "col_features") cfg.col_features_path = value;
    else if (key == "homogeneous") cfg.homogeneous = parse_bool(value, where, key);
    else if (key == "method") cfg.method = parse_method(value, where);
    else if (key == "scheme") cfg.scheme = parse_scheme(value, where);
    else if (key == "block_mode") cfg.block_mode = parse_block_mode(value, where);
    else if (key == "folds") cfg.folds = static_cast<int>(parse_int(value, where, key));
    else if (key == "repeats") cfg.repeats = static_cast<int>(parse_int(value, where, key));
    else if (key == "trees") cfg.trees.n_trees = static_cast<int>(parse_int(value, where, key));
    else if (key == "k_splits") cfg.trees.k_splits = static_cast<int>(parse_int(value, where, key));
    else if (key == "n_min") cfg.trees.n_min = static_cast<int>(parse_int(value, where, key));
    else if (key == "bootstrap") cfg.trees.bootstrap = parse_bool(value, where, key);
    else if (key == "merge") cfg.merge = parse_merge(value, where);
    else if (key == "global_mode") cfg.global_mode = parse_global_mode(value, where);
    else if (key == "seed") cfg.trees.seed = parse_u64(value, where, key);
    else if (key == "threads") cfg.trees.n_threads = static_cast<int>(parse_int(value, where, key));
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "model_path") cfg.model_path = value;
    else throw ValidationError(strprintf("%s: unknown config key '%s'", where.c_str(), key.c_str()));
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(strprintf("%s: line %d: expected key = value", path.c_str(),
                                            line_no));
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ValidationError(strprintf("%s: line %d: empty key", path.c_str(), line_no));
        }
        apply_config_entry(cfg, key, value, strprintf("%s: line %d", path.c_str(), line_no));
    }
    return cfg;
}

std::string config_echo(const ExperimentConfig& cfg) {
    // Output locations and thread counts do not change results, so they stay
    // out of the echo (and the hash): two runs of one experiment match even
    // when written to different directories.
    return strprintf(
        "pairs=%s row_features=%s col_features=%s homogeneous=%d method=%s scheme=%s "
        "block_mode=%s folds=%d repeats=%d trees=%d k_splits=%d n_min=%d bootstrap=%d "
        "merge=%s global_mode=%s seed=%llu",
        cfg.pairs_path.c_str(), cfg.row_features_path.c_str(), cfg.col_features_path.c_str(),
        cfg.homogeneous ? 1 : 0, method_name(cfg.method), scheme_name(cfg.scheme),
        block_mode_name(cfg.block_mode), cfg.folds, cfg.repeats, cfg.trees.n_trees,
        cfg.trees.k_splits, cfg.trees.n_min, cfg.trees.bootstrap ? 1 : 0, merge_name(cfg.merge),
        global_mode_name(cfg.global_mode),
        static_cast<unsigned long long>(cfg.trees.seed));
}

uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string echo = config_echo(cfg);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : echo) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

struct LoadedData {
    FeatureTable fr;
    FeatureTable fc;
    PairSample sample;
};

LoadedData load_data(const ExperimentConfig& cfg) {
    if (cfg.pairs_path.empty()) throw ValidationError("config: 'pairs' file not set");
    if (cfg.row_features_path.empty()) throw ValidationError("config: 'row_features' not set");
    LoadedData d;
    if (cfg.homogeneous) {
        if (!cfg.col_features_path.empty() &&
            cfg.col_features_path != cfg.row_features_path) {
            throw ValidationError("config: homogeneous graphs use a single feature table");
        }
        d.fr = load_feature_table(cfg.row_features_path, Side::Row);
        d.fc = d.fr;
        d.sample = load_pair_sample(cfg.pairs_path, d.fr.universe, d.fr.universe, true);
    } else {
        if (cfg.col_features_path.empty()) {
            throw ValidationError("config: 'col_features' not set for a bipartite graph");
        }
        d.fr = load_feature_table(cfg.row_features_path, Side::Row);
        d.fc = load_feature_table(cfg.col_features_path, Side::Col);
        d.sample = load_pair_sample(cfg.pairs_path, d.fr.universe, d.fc.universe, false);
    }
    return d;
}

std::string report_banner(const ExperimentConfig& cfg) {
    return strprintf("# config %s\n# config_hash %016llx\n", config_echo(cfg).c_str(),
                     static_cast<unsigned long long>(config_hash(cfg)));
}

std::string summary_text(const ExperimentConfig& cfg, const EvalReport& report) {
    std::ostringstream out;
    out << "# cross-validated pair classification summary\n" << report_banner(cfg);
    out << "family\tmetric\tmean\tsd\tblocks\tundefined\tbaseline_mean\tbaseline_sd\tpairs\tpositives\n";
    for (int f = 0; f < kNumFamilies; ++f) {
        const FamilyStats& st = report.families[f];
        const char* name = family_name(static_cast<PairFamily>(f));
        struct Row {
            const char* metric;
            const std::vector<double>* values;
            const std::vector<double>* base;
            int undefined;
        };
        const Row rows[2] = {{"AUPR", &st.aupr, &st.base_aupr, st.undefined_aupr},
                             {"AUROC", &st.auroc, &st.base_auroc, st.undefined_auroc}};
        for (const Row& row : rows) {
            out << name << '\t' << row.metric << '\t';
            if (!st.present || row.values->empty()) {
                out << "absent\tabsent\t" << row.values->size() << '\t' << row.undefined
                    << "\tabsent\tabsent\t" << st.n_pairs << '\t' << st.n_positives << '\n';
            } else {
                out << fmt_double(mean_of(*row.values)) << '\t' << fmt_double(sd_of(*row.values))
                    << '\t' << row.values->size() << '\t' << row.undefined << '\t'
                    << fmt_double(mean_of(*row.base)) << '\t' << fmt_double(sd_of(*row.base))
                    << '\t' << st.n_pairs << '\t' << st.n_positives << '\n';
            }
        }
    }
    return out.str();
}

std::string meta_text(const ExperimentConfig& cfg, const EvalReport& report) {
    std::ostringstream out;
    out << "# run metadata\n" << report_banner(cfg);
    out << "key\tvalue\n";
    out << "pairs\t" << cfg.pairs_path << '\n';
    out << "row_features\t" << cfg.row_features_path << '\n';
    out << "col_features\t" << cfg.col_features_path << '\n';
    out << "homogeneous\t" << (cfg.homogeneous ? 1 : 0) << '\n';
    out << "method\t" << method_name(cfg.method) << '\n';
    out << "scheme\t" << scheme_name(cfg.scheme) << '\n';
    out << "block_mode\t" << block_mode_name(cfg.block_mode) << '\n';
    out << "folds\t" << cfg.folds << '\n';
    out << "repeats\t" << cfg.repeats << '\n';
    out << "trees\t" << cfg.trees.n_trees << '\n';
    out << "k_splits\t" << cfg.trees.k_splits << '\n';
    out << "n_min\t" << cfg.trees.n_min << '\n';
    out << "bootstrap\t" << (cfg.trees.bootstrap ? 1 : 0) << '\n';
    out << "merge\t" << merge_name(cfg.merge) << '\n';
    out << "global_mode\t" << global_mode_name(cfg.global_mode) << '\n';
    out << "seed\t" << cfg.trees.seed << '\n';
    out << "dropped_non_lsls\t" << report.dropped_non_lsls << '\n';
    for (const CalibrationRecord& c : report.calibrations) {
        out << "calibration\trepeat=" << c.repeat << " block=" << c.fold_row << 'x' << c.fold_col
            << " side=" << c.side << " p_th=" << fmt_double(c.result.p_th)
            << " achieved=" << fmt_double(c.result.achieved)
            << " target=" << fmt_double(c.result.target)
            << " degenerate=" << (c.result.degenerate ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string curve_text(const ExperimentConfig& cfg, const Curve& curve, const char* xlab,
                       const char* ylab) {
    std::ostringstream out;
    out << report_banner(cfg);
    out << "# area " << fmt_double(curve.area) << '\n';
    out << xlab << '\t' << ylab << '\n';
    for (const CurvePoint& p : curve.points) {
        out << fmt_double(p.x) << '\t' << fmt_double(p.y) << '\n';
    }
    return out.str();
}

void write_curves(const ExperimentConfig& cfg, const EvalReport& report,
                  const std::string& dir) {
    for (int f = 0; f < kNumFamilies; ++f) {
        const FamilyStats& st = report.families[f];
        if (!st.present) continue;
        const char* name = family_name(static_cast<PairFamily>(f));
        if (auto c = pr_curve(st.pooled_scores, st.pooled_labels)) {
            write_file(dir + strprintf("/curve_%s_pr.tsv", name),
                       curve_text(cfg, *c, "recall", "precision"));
        }
        if (auto c = roc_curve(st.pooled_scores, st.pooled_labels)) {
            write_file(dir + strprintf("/curve_%s_roc.tsv", name),
                       curve_text(cfg, *c, "fpr", "tpr"));
        }
    }
}

void write_block_scores(const ExperimentConfig& cfg, const EvalReport& report,
                        const PairSample& sample, const std::string& dir) {
    for (const BlockScores& b : report.blocks) {
        std::ostringstream out;
        out << report_banner(cfg);
        out << "# repeat " << b.repeat << " block " << b.fold_row << 'x' << b.fold_col << '\n';
        out << "row_id\tcol_id\tfamily\tlabel\tscore\tbaseline\n";
        for (const ScoredPair& p : b.pairs) {
            out << sample.rows->id(p.row) << '\t' << sample.cols->id(p.col) << '\t'
                << family_name(p.family) << '\t' << static_cast<int>(p.label) << '\t'
                << fmt_double(p.score) << '\t' << fmt_double(p.baseline) << '\n';
        }
        write_file(dir + strprintf("/scores_r%d_b%dx%d.tsv", b.repeat, b.fold_row, b.fold_col),
                   out.str());
    }
}

}  // namespace

void cmd_run(const ExperimentConfig& cfg) {
    if (cfg.out_dir.empty()) throw ValidationError("run: 'out_dir' not set");
    LoadedData data = load_data(cfg);
    FoldPlan plan = make_folds(cfg.scheme, data.sample, cfg.folds, cfg.repeats, cfg.trees.seed,
                               cfg.block_mode);
    RunSettings settings;
    settings.trees = cfg.trees;
    settings.merge = cfg.merge;
    settings.global_mode = cfg.global_mode;
    settings.keep_scores = true;

    EvalReport report = run_experiment(data.sample, data.fr, data.fc, cfg.method, plan, settings);

    ensure_dir(cfg.out_dir);
    write_file(cfg.out_dir + "/summary.tsv", summary_text(cfg, report));
    write_file(cfg.out_dir + "/run_meta.tsv", meta_text(cfg, report));
    write_curves(cfg, report, cfg.out_dir);
    write_block_scores(cfg, report, data.sample, cfg.out_dir);

    // Console digest: one line per family and metric.
    std::printf("method=%s scheme=%s folds=%d repeats=%d seed=%llu\n", method_name(cfg.method),
                scheme_name(cfg.scheme), cfg.folds, cfg.repeats,
                static_cast<unsigned long long>(cfg.trees.seed));
    for (int f = 0; f < kNumFamilies; ++f) {
        const FamilyStats& st = report.families[f];
        const char* name = family_name(static_cast<PairFamily>(f));
        if (!st.present) {
            std::printf("%s: absent\n", name);
            continue;
        }
        std::printf("%s: AUPR %.4f (sd %.4f, baseline %.4f)  AUROC %.4f (sd %.4f, baseline %.4f)  pairs %lld\n",
                    name, mean_of(st.aupr), sd_of(st.aupr), mean_of(st.base_aupr),
                    mean_of(st.auroc), sd_of(st.auroc), mean_of(st.base_auroc),
                    static_cast<long long>(st.n_pairs));
    }
    if (report.dropped_non_lsls > 0) {
        std::printf("dropped %lld non-LSxLS test pairs (pairs-cv scores LSxLS only)\n",
                    static_cast<long long>(report.dropped_non_lsls));
    }
    std::printf("wrote %s\n", (cfg.out_dir + "/summary.tsv").c_str());
}

void cmd_fit(const ExperimentConfig& cfg) {
    if (cfg.model_path.empty()) throw ValidationError("fit: 'model_path' not set");
    LoadedData data = load_data(cfg);

    ModelBundle bundle;
    bundle.config_echo = config_echo(cfg);
    bundle.feature_names_row = data.fr.feature_names;
    bundle.feature_names_col = data.fc.feature_names;

    if (cfg.method == Method::Global) {
        bundle.kind = "global";
        bundle.global = fit_global(data.sample, data.fr, data.fc, cfg.trees, cfg.global_mode);
        write_model_bundle_file(cfg.model_path, bundle);
        std::printf("fitted global model (%s training), %d trees over %d virtual features\n",
                    bundle.global.lazy_trained ? "lazy" : "explicit", cfg.trees.n_trees,
                    bundle.global.p_r + bundle.global.p_c);
    } else {
        LocalVariant variant = cfg.method == Method::LocalSO ? LocalVariant::SingleOutput
                                                             : LocalVariant::MultiOutput;
        bundle.kind = cfg.method == Method::LocalSO ? "local-so" : "local-mo";
        bundle.local = fit_local(data.sample, data.fr, data.fc, variant, cfg.trees);
        fit_second_step(bundle.local, data.fr, data.fc, cfg.trees);
        write_model_bundle_file(cfg.model_path, bundle);
        std::printf("fitted %s model: %d first-step + %d second-step ensembles\n",
                    variant_name(variant), bundle.local.n_first_step_models(),
                    bundle.local.n_second_step_models());
    }
    std::printf("model written to %s\n", cfg.model_path.c_str());
}

namespace {

// Re-indexes a loaded feature table onto a model's universe: every universe
// id must be present, feature columns must match the fit exactly.
FeatureTable rebind_features(const FeatureTable& loaded, const UniversePtr& universe,
                             const std::vector<std::string>& names, const char* side) {
    if (loaded.feature_names != names) {
        throw ValidationError(strprintf(
            "predict: %s feature columns differ from the ones the model was fitted on", side));
    }
    FeatureTable out;
    out.universe = universe;
    out.p = loaded.p;
    out.feature_names = loaded.feature_names;
    out.values.resize(static_cast<size_t>(universe->size()) * loaded.p);
    for (int i = 0; i < universe->size(); ++i) {
        int src = loaded.universe->index_of(universe->id(i));
        if (src < 0) {
            throw ValidationError(strprintf("predict: %s feature table misses node '%s'", side,
                                            universe->id(i).c_str()));
        }
        std::span<const double> row = loaded.row(src);
        std::copy(row.begin(), row.end(),
                  out.values.begin() + static_cast<ptrdiff_t>(i) * out.p);
    }
    return out;
}

struct PairRequest {
    int row;
    int col;
    int line;
};

std::vector<PairRequest> read_pair_list(const std::string& path, const UniversePtr& rows,
                                        const UniversePtr& cols, bool homogeneous) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open pair list: " + path);
    std::vector<PairRequest> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() != 2 && fields.size() != 3) {
            throw ValidationError(strprintf("%s: expected 'row<TAB>col' at line %d", path.c_str(),
                                            line_no));
        }
        int r = rows->index_of(fields[0]);
        if (r < 0) {
            throw ValidationError(strprintf("%s: unknown node id '%s' at line %d", path.c_str(),
                                            fields[0].c_str(), line_no));
        }
        int c = cols->index_of(fields[1]);
        if (c < 0) {
            throw ValidationError(strprintf("%s: unknown node id '%s' at line %d", path.c_str(),
                                            fields[1].c_str(), line_no));
        }
        if (homogeneous && r == c) {
            throw ValidationError(strprintf("%s: self-pair '%s' at line %d", path.c_str(),
                                            fields[0].c_str(), line_no));
        }
        out.push_back({r, c, line_no});
    }
    if (out.empty()) throw ValidationError(path + ": no pairs to predict");
    return out;
}

}  // namespace

void cmd_predict(const std::string& model_path, const std::string& row_features_path,
                 const std::string& col_features_path, const std::string& pair_list_path,
                 const std::string& out_path) {
    ModelBundle bundle = read_model_bundle_file(model_path);
    const bool global = bundle.kind == "global";
    const bool homogeneous = global ? bundle.global.homogeneous : bundle.local.homogeneous;
    const UniversePtr& rows = global ? bundle.global.rows : bundle.local.rows;
    const UniversePtr& cols = global ? bundle.global.cols : bundle.local.cols;

    if (row_features_path.empty()) throw ValidationError("predict: row feature table not set");
    FeatureTable fr_raw = load_feature_table(row_features_path, Side::Row);
    FeatureTable fr = rebind_features(fr_raw, rows, bundle.feature_names_row, "row");
    FeatureTable fc;
    if (homogeneous) {
        if (!col_features_path.empty() && col_features_path != row_features_path) {
            throw ValidationError("predict: homogeneous models use a single feature table");
        }
        fc = fr;
    } else {
        if (col_features_path.empty()) throw ValidationError("predict: col feature table not set");
        FeatureTable fc_raw = load_feature_table(col_features_path, Side::Col);
        fc = rebind_features(fc_raw, cols, bundle.feature_names_col, "col");
    }

    std::vector<PairRequest> pairs = read_pair_list(pair_list_path, rows, cols, homogeneous);

    // Family tags come from the partition induced by the training sample.
    const std::vector<Triple>& train =
        global ? bundle.global.train_triples : bundle.local.train_triples;
    FamilyPartition part =
        partition_families(make_pair_sample(rows, cols, homogeneous, train));

    // Score everything before writing anything, so an invalid request leaves
    // no half-written output behind.
    std::vector<double> scores(pairs.size());
    std::vector<PairFamily> fams(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        fams[i] = part.family_of(pairs[i].row, pairs[i].col);
        if (global) {
            scores[i] = predict_global(bundle.global, fr, fc, pairs[i].row, pairs[i].col);
        } else {
            scores[i] = predict_local(bundle.local, fr, fc, pairs[i].row, pairs[i].col);
        }
    }

    std::ostringstream out;
    out << "# predictions from " << bundle.kind << " model\n";
    out << "row_id\tcol_id\tfamily\tscore\n";
    for (size_t i = 0; i < pairs.size(); ++i) {
        out << rows->id(pairs[i].row) << '\t' << cols->id(pairs[i].col) << '\t'
            << family_name(fams[i]) << '\t' << fmt_double(scores[i]) << '\n';
    }
    write_file(out_path, out.str());
    std::printf("wrote %zu predictions to %s\n", pairs.size(), out_path.c_str());
}

namespace {

std::string sanitize_id(const std::string& id) {
    std::string out;
    for (char c : id) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    }
    if (out.size() > 40) out.resize(40);
    return out;
}

std::string ranking_text(const ImportanceRanking& rank, const std::vector<std::string>& names) {
    std::ostringstream out;
    out << "rank\tfeature\tscore\n";
    for (size_t i = 0; i < rank.order.size(); ++i) {
        int f = rank.order[i];
        out << (i + 1) << '\t' << names[f] << '\t' << fmt_double(rank.scores[f]) << '\n';
    }
    return out.str();
}

}  // namespace

void cmd_importance(const std::string& model_path, const std::string& out_dir) {
    ModelBundle bundle = read_model_bundle_file(model_path);
    ensure_dir(out_dir);
    int files = 0;

    if (bundle.kind == "global") {
        std::vector<std::string> names;
        for (const std::string& n : bundle.feature_names_row) names.push_back("row:" + n);
        for (const std::string& n : bundle.feature_names_col) names.push_back("col:" + n);
        write_file(out_dir + "/importance.tsv",
                   ranking_text(make_importance_ranking(bundle.global.ensemble), names));
        files = 1;
    } else if (bundle.kind == "local-mo") {
        const LocalModel& l = bundle.local;
        if (l.homogeneous) {
            write_file(out_dir + "/importance_features.tsv",
                       ranking_text(make_importance_ranking(l.col_side),
                                    bundle.feature_names_row));
            files = 1;
        } else {
            // The col-side model consumes row features and vice versa.
            write_file(out_dir + "/importance_row_features.tsv",
                       ranking_text(make_importance_ranking(l.col_side),
                                    bundle.feature_names_row));
            write_file(out_dir + "/importance_col_features.tsv",
                       ranking_text(make_importance_ranking(l.row_side),
                                    bundle.feature_names_col));
            files = 2;
        }
    } else {
        const LocalModel& l = bundle.local;
        for (size_t j = 0; j < l.col_models.size(); ++j) {
            const std::string id = l.cols->id(l.ls_c[j]);
            write_file(out_dir + strprintf("/importance_%s_%zu_%s.tsv",
                                           l.homogeneous ? "node" : "col", j,
                                           sanitize_id(id).c_str()),
                       ranking_text(make_importance_ranking(l.col_models[j]),
                                    bundle.feature_names_row));
            ++files;
        }
        for (size_t j = 0; j < l.row_models.size(); ++j) {
            const std::string id = l.rows->id(l.ls_r[j]);
            write_file(out_dir + strprintf("/importance_row_%zu_%s.tsv", j,
                                           sanitize_id(id).c_str()),
                       ranking_text(make_importance_ranking(l.row_models[j]),
                                    bundle.feature_names_col));
            ++files;
        }
    }
    std::printf("wrote %d importance file(s) to %s\n", files, out_dir.c_str());
}

void cmd_export_partition(const std::string& model_path, const std::string& row_features_path,
                          const std::string& col_features_path, const std::string& out_path,
                          int max_trees) {
    ModelBundle bundle = read_model_bundle_file(model_path);
    if (bundle.kind != "global") {
        throw ValidationError("export-partition: applies to global models only");
    }
    const GlobalModel& g = bundle.global;
    PairSample sample = make_pair_sample(g.rows, g.cols, g.homogeneous, g.train_triples);
    std::optional<AdjacencySubmatrix> sub = as_complete_submatrix(sample);
    if (!sub) {
        throw ValidationError(
            "export-partition: the model was not trained on a complete rectangle");
    }
    if (row_features_path.empty() || col_features_path.empty()) {
        throw ValidationError("export-partition: feature tables not set");
    }
    FeatureTable fr = rebind_features(load_feature_table(row_features_path, Side::Row), g.rows,
                                      bundle.feature_names_row, "row");
    FeatureTable fc = rebind_features(load_feature_table(col_features_path, Side::Col), g.cols,
                                      bundle.feature_names_col, "col");

    const int n_trees = static_cast<int>(g.ensemble.trees.size());
    const int limit = max_trees > 0 && max_trees < n_trees ? max_trees : n_trees;

    std::ostringstream out;
    out << "# leaf rectangles over the training submatrix\n";
    out << "tree\tleaf\tn_rows\tn_cols\tpairs\tpositives\tfrequency\trow_ids\tcol_ids\n";
    for (int t = 0; t < limit; ++t) {
        const Tree& tree = g.ensemble.trees[t];
        struct Item {
            int node;
            std::vector<int> rows;  // positions within sub
            std::vector<int> cols;
        };
        std::vector<Item> stack;
        Item root;
        root.node = 0;
        root.rows.resize(sub->n_rows());
        root.cols.resize(sub->n_cols());
        for (int i = 0; i < sub->n_rows(); ++i) root.rows[i] = i;
        for (int j = 0; j < sub->n_cols(); ++j) root.cols[j] = j;
        stack.push_back(std::move(root));
        while (!stack.empty()) {
            Item it = std::move(stack.back());
            stack.pop_back();
            const TreeNode& nd = tree.nodes[it.node];
            if (nd.feature < 0) {
                int64_t pos = 0;
                for (int i : it.rows) {
                    for (int j : it.cols) pos += sub->label(i, j);
                }
                const int64_t n_pairs =
                    static_cast<int64_t>(it.rows.size()) * static_cast<int64_t>(it.cols.size());
                out << t << '\t' << it.node << '\t' << it.rows.size() << '\t' << it.cols.size()
                    << '\t' << n_pairs << '\t' << pos << '\t'
                    << fmt_double(tree.leaf_freq[nd.freq_offset]) << '\t';
                for (size_t i = 0; i < it.rows.size(); ++i) {
                    if (i) out << ',';
                    out << g.rows->id(sub->row_nodes[it.rows[i]]);
                }
                out << '\t';
                for (size_t j = 0; j < it.cols.size(); ++j) {
                    if (j) out << ',';
                    out << g.cols->id(sub->col_nodes[it.cols[j]]);
                }
                out << '\n';
                continue;
            }
            Item left, right;
            left.node = nd.left;
            right.node = nd.right;
            if (nd.feature < g.p_r) {
                for (int i : it.rows) {
                    double v = fr.row(sub->row_nodes[i])[nd.feature];
                    (v < nd.threshold ? left.rows : right.rows).push_back(i);
                }
                left.cols = it.cols;
                right.cols = std::move(it.cols);
            } else {
                for (int j : it.cols) {
                    double v = fc.row(sub->col_nodes[j])[nd.feature - g.p_r];
                    (v < nd.threshold ? left.cols : right.cols).push_back(j);
                }
                left.rows = it.rows;
                right.rows = std::move(it.rows);
            }
            // Depth-first, left leaf rows printed first.
            stack.push_back(std::move(right));
            stack.push_back(std::move(left));
        }
    }
    write_file(out_path, out.str());
    std::printf("wrote leaf rectangles of %d tree(s) to %s\n", limit, out_path.c_str());
}

namespace {

std::string feature_tsv(const FeatureTable& t, const std::string& banner) {
    std::ostringstream out;
    out << banner;
    out << "id";
    for (const std::string& n : t.feature_names) out << '\t' << n;
    out << '\n';
    for (int i = 0; i < t.universe->size(); ++i) {
        out << t.universe->id(i);
        for (double v : t.row(i)) out << '\t' << fmt_double(v);
        out << '\n';
    }
    return out.str();
}

std::string pairs_tsv(const PairSample& s, const std::string& banner) {
    std::ostringstream out;
    out << banner;
    out << "# row_id\tcol_id\tlabel\n";
    for (const Triple& t : s.triples) {
        out << s.rows->id(t.row) << '\t' << s.cols->id(t.col) << '\t'
            << static_cast<int>(t.label) << '\n';
    }
    return out.str();
}

}  // namespace

void cmd_synth(const SynthSpec& spec) {
    if (spec.out_dir.empty()) throw ValidationError("synth: 'out_dir' not set");
    ensure_dir(spec.out_dir);
    if (spec.type == "block") {
        SynthBlockNetwork net = synth_block_network(spec.rows, spec.cols, spec.blocks,
                                                    spec.noise, spec.seed);
        std::string banner = strprintf(
            "# synthetic block network: rows=%d cols=%d blocks=%d noise=%s seed=%llu\n",
            spec.rows, spec.cols, spec.blocks, fmt_double(spec.noise).c_str(),
            static_cast<unsigned long long>(spec.seed));
        write_file(spec.out_dir + "/row_features.tsv", feature_tsv(net.row_features, banner));
        write_file(spec.out_dir + "/col_features.tsv", feature_tsv(net.col_features, banner));
        write_file(spec.out_dir + "/pairs.tsv", pairs_tsv(net.sample, banner));
        std::printf("wrote block network (%d x %d, %lld positives) to %s\n", spec.rows, spec.cols,
                    static_cast<long long>(net.sample.n_positives()), spec.out_dir.c_str());
    } else if (spec.type == "preferential") {
        PairSample sample = synth_preferential_network(spec.n, spec.m, spec.seed);
        // Pure-noise features: the degree baseline is the only signal here.
        FeatureTable feats;
        feats.universe = sample.rows;
        feats.p = 4;
        for (int j = 0; j < feats.p; ++j) feats.feature_names.push_back(strprintf("noise%d", j));
        Rng rng(Rng::derive(spec.seed, 0x73796eu));
        feats.values.resize(static_cast<size_t>(sample.rows->size()) * feats.p);
        for (double& v : feats.values) v = rng.normal();
        std::string banner = strprintf(
            "# synthetic preferential-attachment network: n=%d m=%d seed=%llu\n", spec.n, spec.m,
            static_cast<unsigned long long>(spec.seed));
        write_file(spec.out_dir + "/features.tsv", feature_tsv(feats, banner));
        write_file(spec.out_dir + "/pairs.tsv", pairs_tsv(sample, banner));
        std::printf("wrote preferential network (%d nodes, %lld positives) to %s\n", spec.n,
                    static_cast<long long>(sample.n_positives()), spec.out_dir.c_str());
    } else {
        throw ValidationError("synth: type must be 'block' or 'preferential'");
    }
}

}  // namespace pairtrees

#include "pairtrees/model_io.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <sstream>

namespace pairtrees {

std::string double_to_hex(double v) {
    return strprintf("%016llx", static_cast<unsigned long long>(std::bit_cast<uint64_t>(v)));
}

double double_from_hex(const std::string& s) {
    uint64_t bits = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), bits, 16);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ValidationError(strprintf("model file: bad double bits '%s'", s.c_str()));
    }
    return std::bit_cast<double>(bits);
}

namespace {

class LineReader {
  public:
    LineReader(std::istream& in, const std::string& origin) : in_(in), origin_(origin) {}

    std::string raw_line() {
        std::string line;
        if (!std::getline(in_, line)) {
            throw ValidationError(strprintf("%s: unexpected end of file at line %d",
                                            origin_.c_str(), line_no_ + 1));
        }
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    std::vector<std::string> record(const std::string& keyword, int min_fields) {
        std::string line = raw_line();
        std::vector<std::string> t = split(line);
        if (t.empty() || t[0] != keyword || static_cast<int>(t.size()) < min_fields + 1) {
            throw ValidationError(strprintf("%s: line %d: expected '%s' record",
                                            origin_.c_str(), line_no_, keyword.c_str()));
        }
        return t;
    }

    int64_t to_int(const std::string& s) {
        int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw ValidationError(strprintf("%s: line %d: bad integer '%s'", origin_.c_str(),
                                            line_no_, s.c_str()));
        }
        return v;
    }

    uint64_t to_uint(const std::string& s) {
        uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw ValidationError(strprintf("%s: line %d: bad integer '%s'", origin_.c_str(),
                                            line_no_, s.c_str()));
        }
        return v;
    }

    int line_no() const { return line_no_; }
    const std::string& origin() const { return origin_; }

    static std::vector<std::string> split(const std::string& line) {
        std::vector<std::string> out;
        size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && line[i] == ' ') ++i;
            size_t j = i;
            while (j < line.size() && line[j] != ' ') ++j;
            if (j > i) out.push_back(line.substr(i, j - i));
            i = j;
        }
        return out;
    }

  private:
    std::istream& in_;
    std::string origin_;
    int line_no_ = 0;
};

void write_config(std::ostream& out, const TreesConfig& c) {
    out << "config " << c.n_trees << ' ' << c.k_splits << ' ' << c.n_min << ' '
        << (c.bootstrap ? 1 : 0) << ' ' << c.seed << ' ' << c.n_threads << '\n';
}

TreesConfig read_config(LineReader& r) {
    std::vector<std::string> t = r.record("config", 6);
    TreesConfig c;
    c.n_trees = static_cast<int>(r.to_int(t[1]));
    c.k_splits = static_cast<int>(r.to_int(t[2]));
    c.n_min = static_cast<int>(r.to_int(t[3]));
    c.bootstrap = r.to_int(t[4]) != 0;
    c.seed = r.to_uint(t[5]);
    c.n_threads = static_cast<int>(r.to_int(t[6]));
    return c;
}

void write_ensemble_body(std::ostream& out, const EnsembleModel& m) {
    out << "ensemble " << m.p << ' ' << m.n_outputs << ' ' << m.trees.size() << '\n';
    write_config(out, m.config);
    for (const Tree& t : m.trees) {
        out << "tree " << t.nodes.size() << '\n';
        for (const TreeNode& nd : t.nodes) {
            if (nd.feature >= 0) {
                out << "n " << nd.feature << ' ' << double_to_hex(nd.threshold) << ' '
                    << nd.left << ' ' << nd.right << ' ' << nd.n_samples << ' '
                    << double_to_hex(nd.split_gain) << '\n';
            } else {
                out << "l " << nd.n_samples;
                for (int o = 0; o < t.n_outputs; ++o) {
                    out << ' ' << double_to_hex(t.leaf_freq[nd.freq_offset + o]);
                }
                out << '\n';
            }
        }
    }
}

EnsembleModel read_ensemble_body(LineReader& r) {
    std::vector<std::string> head = r.record("ensemble", 3);
    EnsembleModel m;
    m.p = static_cast<int>(r.to_int(head[1]));
    m.n_outputs = static_cast<int>(r.to_int(head[2]));
    const int n_trees = static_cast<int>(r.to_int(head[3]));
    m.config = read_config(r);
    m.trees.resize(n_trees);
    for (Tree& t : m.trees) {
        t.n_outputs = m.n_outputs;
        std::vector<std::string> th = r.record("tree", 1);
        const int n_nodes = static_cast<int>(r.to_int(th[1]));
        t.nodes.resize(n_nodes);
        for (TreeNode& nd : t.nodes) {
            std::string line = r.raw_line();
            std::vector<std::string> f = LineReader::split(line);
            if (f.size() >= 7 && f[0] == "n") {
                nd.feature = static_cast<int>(r.to_int(f[1]));
                nd.threshold = double_from_hex(f[2]);
                nd.left = static_cast<int>(r.to_int(f[3]));
                nd.right = static_cast<int>(r.to_int(f[4]));
                nd.n_samples = r.to_int(f[5]);
                nd.split_gain = double_from_hex(f[6]);
            } else if (f.size() >= static_cast<size_t>(2 + m.n_outputs) && f[0] == "l") {
                nd.feature = -1;
                nd.n_samples = r.to_int(f[1]);
                nd.freq_offset = static_cast<int>(t.leaf_freq.size());
                for (int o = 0; o < m.n_outputs; ++o) {
                    t.leaf_freq.push_back(double_from_hex(f[2 + o]));
                }
            } else {
                throw ValidationError(strprintf("%s: line %d: bad tree node record",
                                                r.origin().c_str(), r.line_no()));
            }
        }
    }
    return m;
}

void write_universe(std::ostream& out, const char* key, const NodeUniverse& u) {
    out << key << ' ' << u.size() << '\n';
    for (const std::string& id : u.ids()) out << id << '\n';
}

UniversePtr read_universe(LineReader& r, const char* key, Side side) {
    std::vector<std::string> head = r.record(key, 1);
    const int n = static_cast<int>(r.to_int(head[1]));
    std::vector<std::string> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = r.raw_line();
    return NodeUniverse::make(side, std::move(ids));
}

void write_names(std::ostream& out, const char* key, const std::vector<std::string>& names) {
    out << key << ' ' << names.size() << '\n';
    for (const std::string& s : names) out << s << '\n';
}

std::vector<std::string> read_names(LineReader& r, const char* key) {
    std::vector<std::string> head = r.record(key, 1);
    const int n = static_cast<int>(r.to_int(head[1]));
    std::vector<std::string> names(n);
    for (int i = 0; i < n; ++i) names[i] = r.raw_line();
    return names;
}

void write_triples(std::ostream& out, const std::vector<Triple>& ts) {
    out << "triples " << ts.size() << '\n';
    for (const Triple& t : ts) {
        out << t.row << ' ' << t.col << ' ' << static_cast<int>(t.label) << '\n';
    }
}

std::vector<Triple> read_triples(LineReader& r) {
    std::vector<std::string> head = r.record("triples", 1);
    const int64_t n = r.to_int(head[1]);
    std::vector<Triple> ts(static_cast<size_t>(n));
    for (Triple& t : ts) {
        std::vector<std::string> f = LineReader::split(r.raw_line());
        if (f.size() < 3) {
            throw ValidationError(strprintf("%s: line %d: bad triple record",
                                            r.origin().c_str(), r.line_no()));
        }
        t.row = static_cast<int>(r.to_int(f[0]));
        t.col = static_cast<int>(r.to_int(f[1]));
        t.label = static_cast<uint8_t>(r.to_int(f[2]));
    }
    return ts;
}

void write_int_list(std::ostream& out, const char* key, const std::vector<int>& v) {
    out << key << ' ' << v.size();
    for (int x : v) out << ' ' << x;
    out << '\n';
}

std::vector<int> read_int_list(LineReader& r, const char* key) {
    std::vector<std::string> t = r.record(key, 1);
    const int n = static_cast<int>(r.to_int(t[1]));
    if (static_cast<int>(t.size()) != n + 2) {
        throw ValidationError(strprintf("%s: line %d: bad '%s' list", r.origin().c_str(),
                                        r.line_no(), key));
    }
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = static_cast<int>(r.to_int(t[i + 2]));
    return v;
}

void write_calibration(std::ostream& out, const char* key, const CalibrationResult& c) {
    out << key << ' ' << double_to_hex(c.p_th) << ' ' << double_to_hex(c.achieved) << ' '
        << double_to_hex(c.target) << ' ' << (c.degenerate ? 1 : 0) << '\n';
}

CalibrationResult read_calibration(LineReader& r, const char* key) {
    std::vector<std::string> t = r.record(key, 4);
    CalibrationResult c;
    c.p_th = double_from_hex(t[1]);
    c.achieved = double_from_hex(t[2]);
    c.target = double_from_hex(t[3]);
    c.degenerate = r.to_int(t[4]) != 0;
    return c;
}

void write_ensemble_list(std::ostream& out, const char* key,
                         const std::vector<EnsembleModel>& ms) {
    out << key << ' ' << ms.size() << '\n';
    for (const EnsembleModel& m : ms) write_ensemble_body(out, m);
}

std::vector<EnsembleModel> read_ensemble_list(LineReader& r, const char* key) {
    std::vector<std::string> head = r.record(key, 1);
    const int n = static_cast<int>(r.to_int(head[1]));
    std::vector<EnsembleModel> ms(static_cast<size_t>(n));
    for (EnsembleModel& m : ms) m = read_ensemble_body(r);
    return ms;
}

std::vector<int> slots_from(int universe_size, const std::vector<int>& nodes) {
    std::vector<int> slot(universe_size, -1);
    for (size_t i = 0; i < nodes.size(); ++i) slot[nodes[i]] = static_cast<int>(i);
    return slot;
}

}  // namespace

void write_model_bundle(std::ostream& out, const ModelBundle& bundle) {
    out << "pairtrees-model 1\n";
    out << "kind " << bundle.kind << '\n';
    out << "echo " << bundle.config_echo << '\n';

    const bool global = bundle.kind == "global";
    const bool homogeneous = global ? bundle.global.homogeneous : bundle.local.homogeneous;
    const UniversePtr& rows = global ? bundle.global.rows : bundle.local.rows;
    const UniversePtr& cols = global ? bundle.global.cols : bundle.local.cols;

    out << "homogeneous " << (homogeneous ? 1 : 0) << '\n';
    write_universe(out, "rows", *rows);
    if (homogeneous) {
        out << "cols same\n";
    } else {
        write_universe(out, "cols", *cols);
    }
    write_names(out, "row-features", bundle.feature_names_row);
    write_names(out, "col-features", bundle.feature_names_col);

    if (global) {
        const GlobalModel& g = bundle.global;
        out << "global " << g.p_r << ' ' << g.p_c << ' ' << (g.lazy_trained ? 1 : 0) << '\n';
        write_triples(out, g.train_triples);
        write_ensemble_body(out, g.ensemble);
        return;
    }

    const LocalModel& l = bundle.local;
    out << "local " << (l.variant == LocalVariant::SingleOutput ? "so" : "mo") << ' '
        << double_to_hex(l.train_positive_fraction) << ' ' << (l.has_second_step ? 1 : 0)
        << '\n';
    write_config(out, l.config);
    write_triples(out, l.train_triples);
    write_int_list(out, "ls-r", l.ls_r);
    write_int_list(out, "ls-c", l.ls_c);
    write_ensemble_list(out, "col-models", l.col_models);
    write_ensemble_list(out, "row-models", l.row_models);
    out << "col-side " << (l.col_side.trees.empty() ? 0 : 1) << '\n';
    if (!l.col_side.trees.empty()) write_ensemble_body(out, l.col_side);
    out << "row-side " << (l.row_side.trees.empty() ? 0 : 1) << '\n';
    if (!l.row_side.trees.empty()) write_ensemble_body(out, l.row_side);
    if (l.has_second_step) {
        write_int_list(out, "ts-r", l.ts_r);
        write_int_list(out, "ts-c", l.ts_c);
        write_calibration(out, "calib-r", l.calib_row);
        write_calibration(out, "calib-c", l.calib_col);
        write_ensemble_list(out, "second-col-models", l.second_col_models);
        write_ensemble_list(out, "second-row-models", l.second_row_models);
        out << "second-col-side " << (l.second_col_side.trees.empty() ? 0 : 1) << '\n';
        if (!l.second_col_side.trees.empty()) write_ensemble_body(out, l.second_col_side);
        out << "second-row-side " << (l.second_row_side.trees.empty() ? 0 : 1) << '\n';
        if (!l.second_row_side.trees.empty()) write_ensemble_body(out, l.second_row_side);
    }
}

ModelBundle read_model_bundle(std::istream& in, const std::string& origin) {
    LineReader r(in, origin);
    r.record("pairtrees-model", 1);
    ModelBundle b;
    {
        std::vector<std::string> t = r.record("kind", 1);
        b.kind = t[1];
        if (b.kind != "global" && b.kind != "local-so" && b.kind != "local-mo") {
            throw ValidationError(strprintf("%s: unknown model kind '%s'", origin.c_str(),
                                            b.kind.c_str()));
        }
    }
    {
        std::string line = r.raw_line();
        if (line.rfind("echo ", 0) != 0) {
            throw ValidationError(strprintf("%s: expected 'echo' record", origin.c_str()));
        }
        b.config_echo = line.substr(5);
    }
    bool homogeneous;
    {
        std::vector<std::string> t = r.record("homogeneous", 1);
        homogeneous = r.to_int(t[1]) != 0;
    }
    UniversePtr rows = read_universe(r, "rows", Side::Row);
    UniversePtr cols;
    if (homogeneous) {
        std::vector<std::string> t = r.record("cols", 1);
        if (t[1] != "same") {
            throw ValidationError(strprintf("%s: homogeneous model must share one universe",
                                            origin.c_str()));
        }
        cols = rows;
    } else {
        cols = read_universe(r, "cols", Side::Col);
    }
    b.feature_names_row = read_names(r, "row-features");
    b.feature_names_col = read_names(r, "col-features");

    if (b.kind == "global") {
        std::vector<std::string> t = r.record("global", 3);
        GlobalModel& g = b.global;
        g.homogeneous = homogeneous;
        g.rows = rows;
        g.cols = cols;
        g.p_r = static_cast<int>(r.to_int(t[1]));
        g.p_c = static_cast<int>(r.to_int(t[2]));
        g.lazy_trained = r.to_int(t[3]) != 0;
        g.train_triples = read_triples(r);
        g.ensemble = read_ensemble_body(r);
        return b;
    }

    std::vector<std::string> t = r.record("local", 3);
    LocalModel& l = b.local;
    l.variant = t[1] == "so" ? LocalVariant::SingleOutput : LocalVariant::MultiOutput;
    if ((b.kind == "local-so") != (l.variant == LocalVariant::SingleOutput)) {
        throw ValidationError(strprintf("%s: model kind and variant disagree", origin.c_str()));
    }
    l.homogeneous = homogeneous;
    l.rows = rows;
    l.cols = cols;
    l.train_positive_fraction = double_from_hex(t[2]);
    const bool second = r.to_int(t[3]) != 0;
    l.config = read_config(r);
    l.train_triples = read_triples(r);
    l.ls_r = read_int_list(r, "ls-r");
    l.ls_c = read_int_list(r, "ls-c");
    l.ls_r_slot = slots_from(rows->size(), l.ls_r);
    l.ls_c_slot = slots_from(cols->size(), l.ls_c);
    l.in_ls_r.assign(rows->size(), 0);
    for (int n : l.ls_r) l.in_ls_r[n] = 1;
    l.in_ls_c.assign(cols->size(), 0);
    for (int n : l.ls_c) l.in_ls_c[n] = 1;
    l.col_models = read_ensemble_list(r, "col-models");
    l.row_models = read_ensemble_list(r, "row-models");
    {
        std::vector<std::string> h = r.record("col-side", 1);
        if (r.to_int(h[1]) != 0) l.col_side = read_ensemble_body(r);
    }
    {
        std::vector<std::string> h = r.record("row-side", 1);
        if (r.to_int(h[1]) != 0) l.row_side = read_ensemble_body(r);
    }
    if (second) {
        l.has_second_step = true;
        l.ts_r = read_int_list(r, "ts-r");
        l.ts_c = read_int_list(r, "ts-c");
        l.ts_r_slot = slots_from(rows->size(), l.ts_r);
        l.ts_c_slot = slots_from(cols->size(), l.ts_c);
        l.calib_row = read_calibration(r, "calib-r");
        l.calib_col = read_calibration(r, "calib-c");
        l.second_col_models = read_ensemble_list(r, "second-col-models");
        l.second_row_models = read_ensemble_list(r, "second-row-models");
        {
            std::vector<std::string> h = r.record("second-col-side", 1);
            if (r.to_int(h[1]) != 0) l.second_col_side = read_ensemble_body(r);
        }
        {
            std::vector<std::string> h = r.record("second-row-side", 1);
            if (r.to_int(h[1]) != 0) l.second_row_side = read_ensemble_body(r);
        }
    }
    return b;
}

void write_model_bundle_file(const std::string& path, const ModelBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError(strprintf("cannot write model file '%s'", path.c_str()));
    write_model_bundle(out, bundle);
    out.flush();
    if (!out) throw ValidationError(strprintf("failed writing model file '%s'", path.c_str()));
}

ModelBundle read_model_bundle_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(strprintf("cannot open model file '%s'", path.c_str()));
    return read_model_bundle(in, path);
}

std::string ensemble_to_text(const EnsembleModel& model) {
    std::ostringstream out;
    write_ensemble_body(out, model);
    return out.str();
}

EnsembleModel ensemble_from_text(const std::string& text) {
    std::istringstream in(text);
    LineReader r(in, "<ensemble text>");
    return read_ensemble_body(r);
}

}  // namespace pairtrees

#include "pairtrees/graph_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

#include "pairtrees/common.hpp"
#include "pairtrees/rng.hpp"

namespace pairtrees {

std::shared_ptr<const NodeUniverse> NodeUniverse::make(Side side, std::vector<std::string> ids) {
    return std::shared_ptr<const NodeUniverse>(new NodeUniverse(side, std::move(ids)));
}

NodeUniverse::NodeUniverse(Side side, std::vector<std::string> ids)
    : side_(side), ids_(std::move(ids)) {
    index_.reserve(ids_.size());
    for (int i = 0; i < static_cast<int>(ids_.size()); ++i) {
        auto [it, inserted] = index_.emplace(ids_[i], i);
        if (!inserted) throw ValidationError("duplicate node id '" + ids_[i] + "' in universe");
    }
}

int NodeUniverse::index_of(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : it->second;
}

long long PairSample::n_positives() const {
    long long n = 0;
    for (const Triple& t : triples) n += t.label;
    return n;
}

const char* family_name(PairFamily f) {
    switch (f) {
        case PairFamily::LSLS: return "LSLS";
        case PairFamily::LSTS: return "LSTS";
        case PairFamily::TSLS: return "TSLS";
        case PairFamily::TSTS: return "TSTS";
    }
    return "?";
}

int64_t FamilyPartition::pair_key(int r, int c) const {
    if (homogeneous && r > c) std::swap(r, c);
    return static_cast<int64_t>(r) * cols->size() + c;
}

PairFamily FamilyPartition::family_of(int r, int c) const {
    bool lr = in_ls_r[r];
    bool lc = in_ls_c[c];
    if (lr && lc) return PairFamily::LSLS;
    if (!lr && !lc) return PairFamily::TSTS;
    if (homogeneous) return PairFamily::LSTS;
    return lr ? PairFamily::LSTS : PairFamily::TSLS;
}

bool FamilyPartition::in_sample(int r, int c) const {
    return sample_pairs.count(pair_key(r, c)) != 0;
}

std::optional<PairFamily> FamilyPartition::family_of_strict(int r, int c) const {
    if (in_sample(r, c)) return std::nullopt;
    return family_of(r, c);
}

FamilyPartition partition_families(const PairSample& sample) {
    if (sample.triples.empty()) throw ValidationError("cannot partition an empty pair sample");
    FamilyPartition part;
    part.rows = sample.rows;
    part.cols = sample.cols;
    part.homogeneous = sample.homogeneous;
    part.in_ls_r.assign(sample.rows->size(), 0);
    part.in_ls_c.assign(sample.cols->size(), 0);
    for (const Triple& t : sample.triples) {
        part.in_ls_r[t.row] = 1;
        part.in_ls_c[t.col] = 1;
        if (sample.homogeneous) {
            part.in_ls_r[t.col] = 1;
            part.in_ls_c[t.row] = 1;
        }
        part.sample_pairs.insert(part.pair_key(t.row, t.col));
    }
    for (int i = 0; i < sample.rows->size(); ++i)
        (part.in_ls_r[i] ? part.ls_r : part.ts_r).push_back(i);
    for (int j = 0; j < sample.cols->size(); ++j)
        (part.in_ls_c[j] ? part.ls_c : part.ts_c).push_back(j);
    return part;
}

int degree(const PairSample& sample, int node_index, Side side) {
    int deg = 0;
    bool seen = false;
    for (const Triple& t : sample.triples) {
        bool touches = sample.homogeneous
                           ? (t.row == node_index || t.col == node_index)
                           : (side == Side::Row ? t.row == node_index : t.col == node_index);
        if (touches) {
            seen = true;
            deg += t.label;
        }
    }
    if (!seen) {
        const auto& uni = (side == Side::Row || sample.homogeneous) ? sample.rows : sample.cols;
        throw ValidationError(strprintf("node '%s' is not in the %s learning set",
                                        uni->id(node_index).c_str(), side_name(side)));
    }
    return deg;
}

int degree(const PairSample& sample, const std::string& node_id, Side side) {
    const auto& uni = side == Side::Row ? sample.rows : sample.cols;
    int idx = uni->index_of(node_id);
    if (idx < 0) throw ValidationError("unknown node id '" + node_id + "'");
    return degree(sample, idx, side);
}

std::optional<AdjacencySubmatrix> as_complete_submatrix(const PairSample& sample) {
    if (sample.homogeneous) return std::nullopt;
    std::vector<int> rows, cols;
    {
        std::vector<char> seen_r(sample.rows->size(), 0), seen_c(sample.cols->size(), 0);
        for (const Triple& t : sample.triples) {
            seen_r[t.row] = 1;
            seen_c[t.col] = 1;
        }
        for (int i = 0; i < sample.rows->size(); ++i)
            if (seen_r[i]) rows.push_back(i);
        for (int j = 0; j < sample.cols->size(); ++j)
            if (seen_c[j]) cols.push_back(j);
    }
    if (static_cast<long long>(rows.size()) * static_cast<long long>(cols.size()) !=
        static_cast<long long>(sample.triples.size()))
        return std::nullopt;

    std::vector<int> rpos(sample.rows->size(), -1), cpos(sample.cols->size(), -1);
    for (int i = 0; i < static_cast<int>(rows.size()); ++i) rpos[rows[i]] = i;
    for (int j = 0; j < static_cast<int>(cols.size()); ++j) cpos[cols[j]] = j;

    AdjacencySubmatrix sub;
    sub.row_nodes = std::move(rows);
    sub.col_nodes = std::move(cols);
    sub.labels.assign(sub.row_nodes.size() * sub.col_nodes.size(), 0);
    std::vector<char> filled(sub.labels.size(), 0);
    for (const Triple& t : sample.triples) {
        size_t at = static_cast<size_t>(rpos[t.row]) * sub.col_nodes.size() + cpos[t.col];
        if (filled[at]) return std::nullopt;  // duplicate pair: count check no longer proves coverage
        filled[at] = 1;
        sub.labels[at] = t.label;
    }
    return sub;
}

namespace {

// Splits one line into tab-separated fields. Tolerates a trailing '\r'.
std::vector<std::string> split_tsv(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

bool skippable(const std::string& line) {
    return line.empty() || line[0] == '#' || line == "\r";
}

double parse_number(const std::string& field, const std::string& origin, int line_no) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ValidationError(strprintf("%s: non-numeric value '%s' at line %d", origin.c_str(),
                                        field.c_str(), line_no));
    if (!std::isfinite(v))
        throw ValidationError(
            strprintf("%s: non-finite value '%s' at line %d", origin.c_str(), field.c_str(), line_no));
    return v;
}

struct LineReader {
    std::istream& in;
    int line_no = 0;
    bool first = true;

    bool next(std::string& line) {
        while (std::getline(in, line)) {
            ++line_no;
            if (first) {
                // Strip a UTF-8 BOM if present.
                if (line.size() >= 3 && line.compare(0, 3, "\xef\xbb\xbf") == 0) line.erase(0, 3);
                first = false;
            }
            if (!skippable(line)) return true;
        }
        return false;
    }
};

}  // namespace

FeatureTable parse_feature_table(std::istream& in, Side side, const std::string& origin) {
    LineReader reader{in};
    std::string line;
    if (!reader.next(line)) throw ValidationError(origin + ": empty feature file");
    std::vector<std::string> header = split_tsv(line);
    if (header.size() < 2)
        throw ValidationError(strprintf("%s: header needs an id column and at least one feature "
                                        "column at line %d",
                                        origin.c_str(), reader.line_no));
    int p = static_cast<int>(header.size()) - 1;

    std::vector<std::string> ids;
    std::vector<double> values;
    std::unordered_set<std::string> seen;
    while (reader.next(line)) {
        std::vector<std::string> fields = split_tsv(line);
        if (static_cast<int>(fields.size()) != p + 1)
            throw ValidationError(strprintf("%s: expected %d fields but got %zu at line %d",
                                            origin.c_str(), p + 1, fields.size(), reader.line_no));
        if (!seen.insert(fields[0]).second)
            throw ValidationError(strprintf("%s: duplicate node id '%s' at line %d", origin.c_str(),
                                            fields[0].c_str(), reader.line_no));
        ids.push_back(fields[0]);
        for (int j = 1; j <= p; ++j) values.push_back(parse_number(fields[j], origin, reader.line_no));
    }
    if (ids.empty()) throw ValidationError(origin + ": no data rows");

    FeatureTable table;
    table.universe = NodeUniverse::make(side, std::move(ids));
    table.p = p;
    table.feature_names.assign(header.begin() + 1, header.end());
    table.values = std::move(values);
    return table;
}

FeatureTable load_feature_table(const std::string& path, Side side) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open feature file: " + path);
    return parse_feature_table(in, side, path);
}

PairSample parse_pair_sample(std::istream& in, UniversePtr rows, UniversePtr cols,
                             bool homogeneous, const std::string& origin) {
    if (homogeneous && rows != cols)
        throw ValidationError(origin + ": homogeneous sample needs a single shared universe");
    LineReader reader{in};
    std::string line;
    std::vector<Triple> triples;
    std::unordered_map<int64_t, std::pair<uint8_t, int>> seen;  // key -> (label, line)
    while (reader.next(line)) {
        std::vector<std::string> fields = split_tsv(line);
        if (fields.size() != 3)
            throw ValidationError(strprintf("%s: expected 3 fields but got %zu at line %d",
                                            origin.c_str(), fields.size(), reader.line_no));
        int r = rows->index_of(fields[0]);
        if (r < 0)
            throw ValidationError(strprintf("%s: unknown %s node id '%s' at line %d", origin.c_str(),
                                            side_name(Side::Row), fields[0].c_str(), reader.line_no));
        int c = cols->index_of(fields[1]);
        if (c < 0)
            throw ValidationError(strprintf("%s: unknown %s node id '%s' at line %d", origin.c_str(),
                                            side_name(Side::Col), fields[1].c_str(), reader.line_no));
        uint8_t label;
        if (fields[2] == "0")
            label = 0;
        else if (fields[2] == "1")
            label = 1;
        else
            throw ValidationError(strprintf("%s: label must be 0 or 1, got '%s' at line %d",
                                            origin.c_str(), fields[2].c_str(), reader.line_no));
        if (homogeneous) {
            if (r == c)
                throw ValidationError(strprintf("%s: self-pair '%s' at line %d", origin.c_str(),
                                                fields[0].c_str(), reader.line_no));
            if (r > c) std::swap(r, c);
        }
        int64_t key = static_cast<int64_t>(r) * cols->size() + c;
        auto it = seen.find(key);
        if (it != seen.end()) {
            if (it->second.first != label)
                throw ValidationError(strprintf(
                    "%s: conflicting labels for pair (%s, %s) at lines %d and %d", origin.c_str(),
                    fields[0].c_str(), fields[1].c_str(), it->second.second, reader.line_no));
            continue;  // exact duplicate
        }
        seen.emplace(key, std::make_pair(label, reader.line_no));
        triples.push_back({r, c, label});
    }
    if (triples.empty()) throw ValidationError(origin + ": no pairs");

    PairSample sample;
    sample.rows = std::move(rows);
    sample.cols = std::move(cols);
    sample.homogeneous = homogeneous;
    sample.triples = std::move(triples);
    return sample;
}

PairSample load_pair_sample(const std::string& path, UniversePtr rows, UniversePtr cols,
                            bool homogeneous) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open pair file: " + path);
    return parse_pair_sample(in, std::move(rows), std::move(cols), homogeneous, path);
}

PairSample make_pair_sample(UniversePtr rows, UniversePtr cols, bool homogeneous,
                            std::vector<Triple> triples) {
    PairSample sample;
    sample.rows = std::move(rows);
    sample.cols = std::move(cols);
    sample.homogeneous = homogeneous;
    if (homogeneous) {
        for (Triple& t : triples) {
            if (t.row == t.col) throw ValidationError("homogeneous sample may not contain self-pairs");
            if (t.row > t.col) std::swap(t.row, t.col);
        }
    }
    sample.triples = std::move(triples);
    return sample;
}

namespace {

std::vector<std::string> numbered_ids(const char* prefix, int n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (int i = 0; i < n; ++i) ids.push_back(strprintf("%s%d", prefix, i));
    return ids;
}

FeatureTable block_features(UniversePtr uni, const std::vector<int>& block, int blocks,
                            int noise_features, Rng& rng) {
    FeatureTable table;
    table.universe = std::move(uni);
    table.p = blocks + noise_features;
    for (int b = 0; b < blocks; ++b) table.feature_names.push_back(strprintf("blk%d", b));
    for (int j = 0; j < noise_features; ++j) table.feature_names.push_back(strprintf("noise%d", j));
    table.values.reserve(static_cast<size_t>(block.size()) * table.p);
    for (size_t i = 0; i < block.size(); ++i) {
        for (int b = 0; b < blocks; ++b)
            table.values.push_back((block[i] == b ? 1.0 : 0.0) + 0.35 * rng.normal());
        for (int j = 0; j < noise_features; ++j) table.values.push_back(rng.normal());
    }
    return table;
}

}  // namespace

SynthBlockNetwork synth_block_network(int n_r, int n_c, int blocks, double noise, uint64_t seed) {
    if (n_r < 1 || n_c < 1 || blocks < 1)
        throw ValidationError("synth_block_network: sizes and block count must be positive");
    if (!(noise >= 0.0 && noise < 0.5))
        throw ValidationError("synth_block_network: noise must lie in [0, 0.5)");

    SynthBlockNetwork net;
    net.row_block.resize(n_r);
    net.col_block.resize(n_c);
    for (int i = 0; i < n_r; ++i) net.row_block[i] = i % blocks;
    for (int j = 0; j < n_c; ++j) net.col_block[j] = j % blocks;

    auto row_uni = NodeUniverse::make(Side::Row, numbered_ids("r", n_r));
    auto col_uni = NodeUniverse::make(Side::Col, numbered_ids("c", n_c));

    constexpr int kNoiseFeatures = 4;
    Rng feat_rng(Rng::derive(seed, 0x666561u));  // feature stream
    net.row_features = block_features(row_uni, net.row_block, blocks, kNoiseFeatures, feat_rng);
    net.col_features = block_features(col_uni, net.col_block, blocks, kNoiseFeatures, feat_rng);

    Rng label_rng(Rng::derive(seed, 0x6c6162u));  // label stream
    std::vector<Triple> triples;
    triples.reserve(static_cast<size_t>(n_r) * n_c);
    for (int i = 0; i < n_r; ++i) {
        for (int j = 0; j < n_c; ++j) {
            uint8_t y = net.row_block[i] == net.col_block[j] ? 1 : 0;
            if (noise > 0.0 && label_rng.uniform01() < noise) y = 1 - y;
            triples.push_back({i, j, y});
        }
    }
    net.sample = make_pair_sample(row_uni, col_uni, false, std::move(triples));
    return net;
}

PairSample synth_preferential_network(int n, int m, uint64_t seed) {
    if (!(n > m && m >= 1))
        throw ValidationError("synth_preferential_network: need n > m >= 1");

    auto uni = NodeUniverse::make(Side::Row, numbered_ids("n", n));
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    std::vector<long long> deg(n, 0);
    Rng rng(Rng::derive(seed, 0x707265u));

    for (int v = m; v < n; ++v) {
        // m distinct targets among 0..v-1, weight degree + 1.
        std::vector<int> targets;
        while (static_cast<int>(targets.size()) < m) {
            long long total = 0;
            for (int u = 0; u < v; ++u)
                if (!adj[v][u]) total += deg[u] + 1;
            long long pick = static_cast<long long>(rng.index(static_cast<size_t>(total)));
            int chosen = -1;
            for (int u = 0; u < v; ++u) {
                if (adj[v][u]) continue;
                pick -= deg[u] + 1;
                if (pick < 0) {
                    chosen = u;
                    break;
                }
            }
            adj[v][chosen] = adj[chosen][v] = 1;
            targets.push_back(chosen);
        }
        for (int u : targets) {
            ++deg[u];
            ++deg[v];
        }
    }

    std::vector<Triple> triples;
    triples.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) triples.push_back({i, j, static_cast<uint8_t>(adj[i][j])});
    return make_pair_sample(uni, uni, true, std::move(triples));
}

}  // namespace pairtrees

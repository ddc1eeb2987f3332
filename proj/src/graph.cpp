#include "dymoe/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "dymoe/rng.hpp"

namespace dymoe {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no, const std::string& what) {
    throw data_error(path + ":" + std::to_string(line_no) + ": " + what);
}

std::size_t parse_index(const std::string& s, const std::string& path, std::size_t line_no,
                        const char* what) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        parse_fail(path, line_no, std::string("bad ") + what + " '" + s + "'");
    return std::stoull(s);
}

TaskKind infer_task_kind(const std::vector<NodeRecord>& nodes) {
    // A label seen in two different blocks means classes persist across blocks.
    std::vector<std::pair<int, std::size_t>> seen;
    for (const auto& n : nodes) {
        bool found = false;
        for (auto& [label, block] : seen) {
            if (label == n.label) {
                if (block != n.block) return TaskKind::instance_incremental;
                found = true;
                break;
            }
        }
        if (!found) seen.emplace_back(n.label, n.block);
    }
    return TaskKind::class_incremental;
}

}  // namespace

AccessAudit& access_audit() {
    static AccessAudit audit;
    return audit;
}

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        default: return "test";
    }
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "valid") return Split::valid;
    if (s == "test") return Split::test;
    throw data_error("unknown split tag '" + s + "'");
}

std::size_t GraphBlockSequence::block_of(std::size_t v) const {
    if (v >= nodes.size())
        throw range_error("node id " + std::to_string(v) + " outside sequence of " +
                          std::to_string(nodes.size()) + " nodes");
    return nodes[v].block;
}

int GraphBlockSequence::num_classes() const {
    int hi = -1;
    for (const auto& n : nodes) hi = std::max(hi, n.label);
    return hi + 1;
}

std::vector<std::size_t> GraphBlockSequence::nodes_in_block(std::size_t i) const {
    if (i < 1 || i > num_blocks)
        throw range_error("block index " + std::to_string(i) + " outside [1, " +
                          std::to_string(num_blocks) + "]");
    std::vector<std::size_t> out;
    for (const auto& n : nodes)
        if (n.block == i) out.push_back(n.id);
    return out;
}

void GraphBlockSequence::rebuild_index() {
    if (nodes.empty()) throw data_error("sequence has no nodes");
    feature_dim = nodes[0].features.size();
    if (feature_dim == 0) throw data_error("node 0 has no features");
    num_blocks = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.id != i)
            throw data_error("node ids must be dense and in order; position " + std::to_string(i) +
                             " holds id " + std::to_string(n.id));
        if (n.block < 1) throw invariant_error("node " + std::to_string(i) + " has block index 0");
        if (n.features.size() != feature_dim)
            throw data_error("node " + std::to_string(i) + " has " +
                             std::to_string(n.features.size()) + " features, expected " +
                             std::to_string(feature_dim));
        if (n.label < 0) throw data_error("node " + std::to_string(i) + " has negative label");
        num_blocks = std::max(num_blocks, n.block);
    }
    for (const auto& e : edges) {
        if (e.src >= nodes.size() || e.dst >= nodes.size())
            throw data_error("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                             ") references an unknown node");
        const std::size_t birth = std::max(nodes[e.src].block, nodes[e.dst].block);
        if (e.block < birth)
            throw invariant_error("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                                  ") arrives at block " + std::to_string(e.block) +
                                  " before its endpoints (block " + std::to_string(birth) + ")");
        num_blocks = std::max(num_blocks, e.block);
    }

    adj.assign(nodes.size(), {});
    for (const auto& e : edges) {
        adj[e.src].emplace_back(e.dst, e.block);
        if (e.dst != e.src) adj[e.dst].emplace_back(e.src, e.block);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());

    classes_per_block.assign(num_blocks, {});
    for (const auto& n : nodes) {
        auto& cls = classes_per_block[n.block - 1];
        if (std::find(cls.begin(), cls.end(), n.label) == cls.end()) cls.push_back(n.label);
    }
    for (auto& cls : classes_per_block) std::sort(cls.begin(), cls.end());

    if (task_kind == TaskKind::class_incremental) {
        std::set<int> all;
        for (const auto& cls : classes_per_block)
            for (int c : cls)
                if (!all.insert(c).second)
                    throw invariant_error("class " + std::to_string(c) +
                                          " appears in two blocks of a class-incremental sequence");
    }
}

const NodeRecord& SnapshotView::checked(std::size_t v) const {
    if (v >= seq_->nodes.size())
        throw range_error("node id " + std::to_string(v) + " outside sequence");
    const NodeRecord& n = seq_->nodes[v];
    access_audit().note(n.block);
    if (n.block > upto_)
        throw range_error("node " + std::to_string(v) + " (block " + std::to_string(n.block) +
                          ") not in snapshot(" + std::to_string(upto_) + ")");
    return n;
}

bool SnapshotView::contains(std::size_t v) const {
    return v < seq_->nodes.size() && seq_->nodes[v].block <= upto_;
}

std::vector<std::size_t> SnapshotView::node_ids() const {
    std::vector<std::size_t> out;
    for (const auto& n : seq_->nodes)
        if (n.block <= upto_) out.push_back(n.id);
    return out;
}

std::size_t SnapshotView::node_count() const {
    std::size_t c = 0;
    for (const auto& n : seq_->nodes)
        if (n.block <= upto_) ++c;
    return c;
}

const std::vector<double>& SnapshotView::features(std::size_t v) const {
    return checked(v).features;
}
int SnapshotView::label(std::size_t v) const { return checked(v).label; }
std::size_t SnapshotView::block(std::size_t v) const { return checked(v).block; }
Split SnapshotView::split(std::size_t v) const { return checked(v).split; }

std::vector<std::size_t> SnapshotView::neighbors(std::size_t v) const {
    checked(v);
    std::vector<std::size_t> out;
    for (const auto& [u, eb] : seq_->adj[v]) {
        if (eb > upto_) continue;
        access_audit().note(eb);
        out.push_back(u);
    }
    return out;
}

std::size_t SnapshotView::degree(std::size_t v) const {
    checked(v);
    std::size_t c = 0;
    for (const auto& [u, eb] : seq_->adj[v])
        if (eb <= upto_) ++c;
    return c;
}

GraphBlockSequence load_sequence(const std::string& node_path, const std::string& edge_path) {
    GraphBlockSequence seq;

    std::ifstream nf(node_path);
    if (!nf.is_open()) throw data_error("cannot open " + node_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(nf, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_on(line, '\t');
        if (fields.size() != 5)
            parse_fail(node_path, line_no,
                       "expected 5 tab-separated fields, got " + std::to_string(fields.size()));
        NodeRecord n;
        n.id = parse_index(fields[0], node_path, line_no, "node id");
        n.block = parse_index(fields[1], node_path, line_no, "block index");
        try {
            n.label = std::stoi(fields[2]);
        } catch (const std::exception&) {
            parse_fail(node_path, line_no, "bad label '" + fields[2] + "'");
        }
        try {
            n.split = parse_split(fields[3]);
        } catch (const data_error& e) {
            parse_fail(node_path, line_no, e.what());
        }
        for (const auto& f : split_on(fields[4], ',')) {
            const char* begin = f.c_str();
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin || *end != '\0')
                parse_fail(node_path, line_no, "bad feature value '" + f + "'");
            n.features.push_back(v);
        }
        seq.nodes.push_back(std::move(n));
    }

    std::ifstream ef(edge_path);
    if (!ef.is_open()) throw data_error("cannot open " + edge_path);
    line_no = 0;
    while (std::getline(ef, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_on(line, '\t');
        if (fields.size() != 3)
            parse_fail(edge_path, line_no,
                       "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
        EdgeRecord e;
        e.src = parse_index(fields[0], edge_path, line_no, "source id");
        e.dst = parse_index(fields[1], edge_path, line_no, "target id");
        e.block = parse_index(fields[2], edge_path, line_no, "block index");
        seq.edges.push_back(e);
    }

    seq.task_kind = infer_task_kind(seq.nodes);
    seq.rebuild_index();
    return seq;
}

void save_sequence(const GraphBlockSequence& seq, const std::string& node_path,
                   const std::string& edge_path) {
    std::ofstream nf(node_path, std::ios::trunc);
    if (!nf.is_open()) throw data_error("cannot open " + node_path + " for writing");
    for (const auto& n : seq.nodes) {
        nf << n.id << '\t' << n.block << '\t' << n.label << '\t' << split_name(n.split) << '\t';
        for (std::size_t i = 0; i < n.features.size(); ++i) {
            if (i) nf << ',';
            nf << fmt_double(n.features[i]);
        }
        nf << '\n';
    }

    std::vector<EdgeRecord> canon = seq.edges;
    for (auto& e : canon)
        if (e.src > e.dst) std::swap(e.src, e.dst);
    std::sort(canon.begin(), canon.end(), [](const EdgeRecord& a, const EdgeRecord& b) {
        return std::tie(a.src, a.dst, a.block) < std::tie(b.src, b.dst, b.block);
    });
    std::ofstream ef(edge_path, std::ios::trunc);
    if (!ef.is_open()) throw data_error("cannot open " + edge_path + " for writing");
    for (const auto& e : canon) ef << e.src << '\t' << e.dst << '\t' << e.block << '\n';
}

SnapshotView snapshot(const GraphBlockSequence& seq, std::size_t i) {
    if (i < 1 || i > seq.num_blocks)
        throw range_error("snapshot index " + std::to_string(i) + " outside [1, " +
                          std::to_string(seq.num_blocks) + "]");
    return SnapshotView(seq, i);
}

Delta delta(const GraphBlockSequence& seq, std::size_t i) {
    if (i < 1 || i > seq.num_blocks)
        throw range_error("delta index " + std::to_string(i) + " outside [1, " +
                          std::to_string(seq.num_blocks) + "]");
    Delta d;
    for (const auto& n : seq.nodes)
        if (n.block == i) d.node_ids.push_back(n.id);
    for (const auto& e : seq.edges)
        if (e.block == i) d.edges.push_back(e);
    return d;
}

std::vector<std::size_t> sample_neighbors(const SnapshotView& view, std::size_t v,
                                          std::size_t fanout, std::uint64_t seed) {
    std::vector<std::size_t> nbrs = view.neighbors(v);
    if (nbrs.size() <= fanout) return nbrs;
    auto gen = rng_stream(seed, "sample.neighbors", v, view.upto());
    for (std::size_t i = 0; i < fanout; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, nbrs.size() - 1);
        std::swap(nbrs[i], nbrs[pick(gen)]);
    }
    nbrs.resize(fanout);
    return nbrs;
}

GraphBlockSequence synth_gaussian_sequence(const SynthConfig& cfg) {
    if (cfg.blocks < 1) throw range_error("synth: blocks must be >= 1");
    if (cfg.classes_per_block < 1) throw range_error("synth: classes_per_block must be >= 1");
    if (cfg.nodes_per_block < 1) throw range_error("synth: nodes_per_block must be >= 1");
    if (cfg.feature_dim < 1) throw range_error("synth: feature_dim must be >= 1");
    if (!(cfg.sigma > 0.0)) throw range_error("synth: sigma must be positive");
    for (double p : {cfg.p_intra, cfg.p_inter})
        if (p < 0.0 || p > 1.0)
            throw range_error("synth: edge probability " + fmt_double(p) + " outside [0, 1]");
    if (cfg.train_frac < 0.0 || cfg.valid_frac < 0.0 || cfg.train_frac + cfg.valid_frac > 1.0)
        throw range_error("synth: split fractions must be nonnegative and sum to at most 1");

    const bool class_incr = cfg.task_kind == TaskKind::class_incremental;
    const std::size_t total_classes =
        class_incr ? cfg.blocks * cfg.classes_per_block : cfg.classes_per_block;
    if (total_classes > 2 * cfg.feature_dim)
        throw range_error("synth: need feature_dim >= " + std::to_string((total_classes + 1) / 2) +
                          " to place " + std::to_string(total_classes) + " class centers");

    // Class k's center sits at +mean_scale (k < dim) or -mean_scale (k >= dim)
    // along axis k mod dim, so centers never collide.
    auto center = [&](int k) {
        std::vector<double> m(cfg.feature_dim, 0.0);
        const std::size_t axis = static_cast<std::size_t>(k) % cfg.feature_dim;
        m[axis] = (static_cast<std::size_t>(k) < cfg.feature_dim) ? cfg.mean_scale : -cfg.mean_scale;
        return m;
    };

    GraphBlockSequence seq;
    seq.task_kind = cfg.task_kind;
    for (std::size_t b = 1; b <= cfg.blocks; ++b) {
        const int class_base = class_incr ? static_cast<int>((b - 1) * cfg.classes_per_block) : 0;
        for (std::size_t i = 0; i < cfg.nodes_per_block; ++i) {
            NodeRecord n;
            n.id = seq.nodes.size();
            n.block = b;
            auto lgen = rng_stream(cfg.seed, "synth.label", n.id);
            std::uniform_int_distribution<int> lab(0, static_cast<int>(cfg.classes_per_block) - 1);
            n.label = class_base + lab(lgen);
            auto fgen = rng_stream(cfg.seed, "synth.features", n.id);
            std::normal_distribution<double> z(0.0, 1.0);
            n.features = center(n.label);
            for (auto& f : n.features) f += cfg.sigma * z(fgen);
            seq.nodes.push_back(std::move(n));
        }
    }

    // Stratified split inside every (block, class) cell: shuffle, then carve
    // train/valid/test contiguously so each class keeps the configured ratios.
    for (std::size_t b = 1; b <= cfg.blocks; ++b) {
        std::vector<std::vector<std::size_t>> by_class(total_classes);
        for (const auto& n : seq.nodes)
            if (n.block == b) by_class[static_cast<std::size_t>(n.label)].push_back(n.id);
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            auto& ids = by_class[c];
            if (ids.empty()) continue;
            auto sgen = rng_stream(cfg.seed, "synth.split", b, c);
            std::shuffle(ids.begin(), ids.end(), sgen);
            const std::size_t m = ids.size();
            std::size_t n_train = static_cast<std::size_t>(std::llround(cfg.train_frac * m));
            std::size_t n_valid = static_cast<std::size_t>(std::llround(cfg.valid_frac * m));
            while (n_train + n_valid > m) (n_valid > 0 ? n_valid : n_train) -= 1;
            for (std::size_t i = 0; i < m; ++i)
                seq.nodes[ids[i]].split = i < n_train             ? Split::train
                                          : i < n_train + n_valid ? Split::valid
                                                                  : Split::test;
        }
    }

    auto egen = rng_stream(cfg.seed, "synth.edges");
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::size_t b = 1; b <= cfg.blocks; ++b) {
        const std::size_t lo = (b - 1) * cfg.nodes_per_block;
        const std::size_t hi = b * cfg.nodes_per_block;
        for (std::size_t u = lo; u < hi; ++u) {
            for (std::size_t w = u + 1; w < hi; ++w)
                if (coin(egen) < cfg.p_intra) seq.edges.push_back({u, w, b});
            // Links to earlier blocks arrive together with the new endpoint.
            for (std::size_t w = 0; w < lo; ++w)
                if (coin(egen) < cfg.p_inter) seq.edges.push_back({w, u, b});
        }
    }

    seq.rebuild_index();
    return seq;
}

EgoBatch build_ego_batch(const SnapshotView& view, const std::vector<std::size_t>& targets,
                         std::size_t depth, std::size_t fanout, std::uint64_t seed) {
    if (depth < 1) throw range_error("ego batch depth must be >= 1");
    for (std::size_t v : targets)
        if (!view.contains(v))
            throw range_error("target node " + std::to_string(v) + " not in snapshot(" +
                              std::to_string(view.upto()) + ")");

    EgoBatch batch;
    batch.depth = depth;
    batch.level_ids.assign(depth + 1, {});
    batch.neighbor_idx.assign(depth + 1, {});
    batch.self_idx.assign(depth + 1, {});
    batch.level_ids[depth] = targets;

    // Walk outward: level l-1 collects level l plus every sampled neighbor.
    std::vector<std::vector<std::vector<std::size_t>>> sampled_ids(depth + 1);
    for (std::size_t l = depth; l >= 1; --l) {
        const std::uint64_t layer_seed = stream_key(seed, "ego.layer." + std::to_string(l));
        std::set<std::size_t> below(batch.level_ids[l].begin(), batch.level_ids[l].end());
        sampled_ids[l].reserve(batch.level_ids[l].size());
        for (std::size_t v : batch.level_ids[l]) {
            auto nbrs = sample_neighbors(view, v, fanout, layer_seed);
            below.insert(nbrs.begin(), nbrs.end());
            sampled_ids[l].push_back(std::move(nbrs));
        }
        batch.level_ids[l - 1].assign(below.begin(), below.end());
    }

    for (std::size_t l = 1; l <= depth; ++l) {
        const auto& prev = batch.level_ids[l - 1];
        auto slot = [&](std::size_t id) {
            return static_cast<std::size_t>(
                std::lower_bound(prev.begin(), prev.end(), id) - prev.begin());
        };
        batch.neighbor_idx[l].resize(batch.level_ids[l].size());
        batch.self_idx[l].resize(batch.level_ids[l].size());
        for (std::size_t i = 0; i < batch.level_ids[l].size(); ++i) {
            batch.self_idx[l][i] = slot(batch.level_ids[l][i]);
            for (std::size_t id : sampled_ids[l][i]) batch.neighbor_idx[l][i].push_back(slot(id));
        }
    }
    return batch;
}

}  // namespace dymoe

#include "dymoe/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace dymoe {

std::size_t memory_quota(double p, std::size_t class_size) {
    if (p <= 0.0 || p > 1.0) throw range_error("memory fraction must be in (0, 1]");
    if (class_size == 0) return 0;
    const auto want = std::llround(p * static_cast<double>(class_size));
    const auto capped = std::min<long long>(want, static_cast<long long>(class_size));
    return static_cast<std::size_t>(std::max<long long>(1, capped));
}

std::vector<std::size_t> select_representatives(const std::vector<std::size_t>& ids,
                                                const std::vector<int>& labels,
                                                const std::vector<double>& emb, std::size_t dim,
                                                double p) {
    if (dim == 0) throw range_error("embedding dimension must be positive");
    if (labels.size() != ids.size() || emb.size() != ids.size() * dim)
        throw shape_error("ids/labels/embeddings disagree: " + std::to_string(ids.size()) + "/" +
                          std::to_string(labels.size()) + "/" + std::to_string(emb.size() / dim) +
                          " rows");

    std::map<int, std::vector<std::size_t>> rows_by_class;
    for (std::size_t r = 0; r < ids.size(); ++r) rows_by_class[labels[r]].push_back(r);

    std::vector<std::size_t> picked;
    for (auto& [label, rows] : rows_by_class) {
        std::vector<double> mean(dim, 0.0);
        for (std::size_t r : rows)
            for (std::size_t c = 0; c < dim; ++c) mean[c] += emb[r * dim + c];
        for (auto& v : mean) v /= static_cast<double>(rows.size());

        std::vector<std::pair<double, std::size_t>> scored;  // (distance, node id)
        scored.reserve(rows.size());
        for (std::size_t r : rows) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double diff = emb[r * dim + c] - mean[c];
                d2 += diff * diff;
            }
            scored.emplace_back(std::sqrt(d2), ids[r]);
        }
        std::sort(scored.begin(), scored.end());
        const std::size_t quota = memory_quota(p, rows.size());
        for (std::size_t i = 0; i < quota; ++i) picked.push_back(scored[i].second);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

std::vector<std::size_t> select_memory(const ModelState& model, const SnapshotView& view,
                                       const std::vector<std::size_t>& train_ids, double p,
                                       std::size_t fanout, std::uint64_t seed) {
    if (train_ids.empty()) return {};
    std::vector<int> labels;
    labels.reserve(train_ids.size());
    for (std::size_t id : train_ids) labels.push_back(view.label(id));

    std::vector<double> emb;
    emb.reserve(train_ids.size() * model.width);
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < train_ids.size(); start += kChunk) {
        const std::size_t stop = std::min(train_ids.size(), start + kChunk);
        std::vector<std::size_t> chunk(train_ids.begin() + start, train_ids.begin() + stop);
        auto batch = build_ego_batch(view, chunk, model.num_layers, fanout, seed);
        Tape tape(false);
        ModelForwardArgs args;
        args.mode = GateMode::sparse;
        auto fwd = model_forward(tape, model, view, batch, args);
        emb.insert(emb.end(), fwd.embeddings->data.begin(), fwd.embeddings->data.end());
    }
    return select_representatives(train_ids, labels, emb, model.width, p);
}

void MemoryBank::add_block(std::vector<std::size_t> ids) {
    std::sort(ids.begin(), ids.end());
    per_block.push_back(std::move(ids));
}

std::vector<std::size_t> MemoryBank::union_through(std::size_t t) const {
    if (t > per_block.size())
        throw range_error("memory for block " + std::to_string(t) + " of " +
                          std::to_string(per_block.size()));
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < t; ++b)
        out.insert(out.end(), per_block[b].begin(), per_block[b].end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void save_memory_manifest(const MemoryBank& bank, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error(path + ": cannot open for writing");
    for (std::size_t b = 0; b < bank.per_block.size(); ++b)
        for (std::size_t id : bank.per_block[b]) out << (b + 1) << '\t' << id << '\n';
    if (!out) throw data_error(path + ": write failed");
}

MemoryBank load_memory_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(path + ": cannot open");
    std::map<std::size_t, std::vector<std::size_t>> sets;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::size_t block = 0, id = 0;
        char tab = 0;
        if (!(row >> block) || !row.get(tab) || tab != '\t' || !(row >> id) ||
            (row >> std::ws, !row.eof()))
            throw data_error(path + ":" + std::to_string(lineno) +
                             ": expected block<TAB>node_id");
        if (block == 0)
            throw data_error(path + ":" + std::to_string(lineno) + ": block indices start at 1");
        sets[block].push_back(id);
    }
    MemoryBank bank;
    if (sets.empty()) return bank;
    const std::size_t top = sets.rbegin()->first;
    for (std::size_t b = 1; b <= top; ++b) {
        auto it = sets.find(b);
        if (it == sets.end())
            throw data_error(path + ": no rows for block " + std::to_string(b) +
                             " but later blocks are present");
        bank.add_block(std::move(it->second));
    }
    return bank;
}

}  // namespace dymoe

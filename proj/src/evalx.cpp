#include "dymoe/evalx.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "dymoe/rng.hpp"
#include "dymoe/trainer.hpp"

namespace dymoe {

namespace {

std::size_t check_horizon(const ModelState& model, const GraphBlockSequence& seq) {
    const std::size_t t = model.blocks_seen;
    if (t == 0) throw invariant_error("model has no experts");
    if (t > seq.num_blocks)
        throw range_error("model saw " + std::to_string(t) + " blocks, sequence has " +
                          std::to_string(seq.num_blocks));
    return t;
}

// Position of target i's representation at the output level of the first
// mixture layer, found by walking the self links down from the target level.
std::size_t first_layer_row(const EgoBatch& batch, std::size_t i) {
    std::size_t row = i;
    for (std::size_t ll = batch.depth; ll >= 2; --ll) row = batch.self_idx[ll][row];
    return row;
}

}  // namespace

std::vector<std::vector<double>> expert_specialization(const ModelState& model,
                                                       const GraphBlockSequence& seq,
                                                       std::size_t fanout, std::uint64_t seed) {
    const std::size_t t = check_horizon(model, seq);
    auto view = snapshot(seq, t);

    std::vector<std::vector<std::size_t>> block_test(t);
    for (const auto& node : seq.nodes)
        if (node.block <= t && node.split == Split::test)
            block_test[node.block - 1].push_back(node.id);

    std::vector<std::vector<double>> table(t, std::vector<double>(t, 0.0));
    for (std::size_t e = 1; e <= t; ++e) {
        GateOverride force;
        force.expert = e - 1;
        for (std::size_t b = 1; b <= t; ++b) {
            auto ev = evaluate(model, view, block_test[b - 1], GateMode::sparse, fanout,
                               stream_key(seed, "spec.sample", e, b), &force);
            table[e - 1][b - 1] = ev.accuracy();
        }
    }
    return table;
}

double gate_accuracy(const ModelState& model, const GraphBlockSequence& seq, std::size_t fanout,
                     std::uint64_t seed) {
    const std::size_t t = check_horizon(model, seq);
    auto view = snapshot(seq, t);
    auto ids = split_ids_through(seq, t, Split::test);
    if (ids.empty()) return 1.0;  // nothing can route wrong

    constexpr std::size_t kChunk = 256;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < ids.size(); start += kChunk) {
        const std::size_t stop = std::min(ids.size(), start + kChunk);
        std::vector<std::size_t> targets(ids.begin() + start, ids.begin() + stop);
        auto batch = build_ego_batch(view, targets, model.num_layers, fanout,
                                     stream_key(seed, "gatecheck.sample"));
        Tape tape(false);
        ModelForwardArgs args;
        auto fwd = model_forward(tape, model, view, batch, args);
        const auto& logits = fwd.traces[0].raw_logits;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const std::size_t row = first_layer_row(batch, i);
            std::size_t best = 0;
            for (std::size_t j = 1; j < logits->cols; ++j)
                if (logits->at(row, j) > logits->at(row, best)) best = j;
            if (best + 1 == view.block(targets[i])) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(ids.size());
}

void write_specialization_csv(const std::string& path,
                              const std::vector<std::vector<double>>& table) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error(path + ": cannot open for writing");
    const std::size_t t = table.size();
    out << "expert";
    for (std::size_t b = 1; b <= t; ++b) out << ",block_" << b;
    out << "\n";
    char buf[64];
    for (std::size_t e = 1; e <= t; ++e) {
        if (table[e - 1].size() != t) throw shape_error("specialization table is not square");
        out << e;
        for (double v : table[e - 1]) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace dymoe

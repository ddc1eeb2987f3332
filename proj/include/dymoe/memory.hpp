#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dymoe/model.hpp"

namespace dymoe {

// Per-class replay budget: a fraction p of the class, never less than one
// node once the class exists.
std::size_t memory_quota(double p, std::size_t class_size);

// Picks the most representative nodes of each class: those closest in
// embedding space to their class mean. emb is row-major, one row per id.
// Distance ties fall to the lower node id; the result is ascending.
std::vector<std::size_t> select_representatives(const std::vector<std::size_t>& ids,
                                                const std::vector<int>& labels,
                                                const std::vector<double>& emb, std::size_t dim,
                                                double p);

// Embeds train_ids with the trained model (final-layer representations,
// noise-free sparse gating) and delegates to select_representatives.
std::vector<std::size_t> select_memory(const ModelState& model, const SnapshotView& view,
                                       const std::vector<std::size_t>& train_ids, double p,
                                       std::size_t fanout, std::uint64_t seed);

// Replay sets, one per block in arrival order.
struct MemoryBank {
    std::vector<std::vector<std::size_t>> per_block;

    std::size_t blocks() const { return per_block.size(); }
    void add_block(std::vector<std::size_t> ids);
    // Ascending union of the sets for blocks 1..t.
    std::vector<std::size_t> union_through(std::size_t t) const;
};

// Manifest rows are "block<TAB>node_id", grouped by block.
void save_memory_manifest(const MemoryBank& bank, const std::string& path);
MemoryBank load_memory_manifest(const std::string& path);

}  // namespace dymoe

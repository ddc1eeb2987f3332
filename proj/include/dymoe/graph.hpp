#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dymoe/errors.hpp"

namespace dymoe {

enum class Split { train, valid, test };
enum class TaskKind { class_incremental, instance_incremental };

std::string split_name(Split s);
Split parse_split(const std::string& s);

struct NodeRecord {
    std::size_t id = 0;     // dense, equals position in the node table
    std::size_t block = 0;  // b(v), 1-based arrival index
    int label = 0;
    Split split = Split::train;
    std::vector<double> features;
};

struct EdgeRecord {
    std::size_t src = 0;
    std::size_t dst = 0;
    std::size_t block = 0;  // arrival index, >= both endpoints' blocks
};

// Counts every node/edge touch made through snapshot views. When a limit is
// armed, touches beyond it are tallied as violations; training at block i must
// finish with zero. Atomics so parallel evaluation workers can share it.
struct AccessAudit {
    std::atomic<std::uint64_t> accesses{0};
    std::atomic<std::uint64_t> violations{0};
    std::atomic<std::size_t> limit{0};  // 0 = disarmed

    void note(std::size_t block) {
        accesses.fetch_add(1, std::memory_order_relaxed);
        const std::size_t lim = limit.load(std::memory_order_relaxed);
        if (lim != 0 && block > lim) violations.fetch_add(1, std::memory_order_relaxed);
    }
    void arm(std::size_t block_limit) { limit.store(block_limit, std::memory_order_relaxed); }
    void disarm() { limit.store(0, std::memory_order_relaxed); }
    void reset() {
        accesses.store(0);
        violations.store(0);
        limit.store(0);
    }
};

AccessAudit& access_audit();

// The whole incremental sequence. Immutable after load/generation; snapshots
// and deltas are filters over it, never copies.
struct GraphBlockSequence {
    std::size_t num_blocks = 0;
    std::size_t feature_dim = 0;
    TaskKind task_kind = TaskKind::class_incremental;
    std::vector<NodeRecord> nodes;
    std::vector<EdgeRecord> edges;
    std::vector<std::vector<int>> classes_per_block;  // index b-1 holds block b's label set
    // adjacency: (neighbor id, edge arrival block), sorted, both directions
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj;

    std::size_t block_of(std::size_t v) const;
    int num_classes() const;
    std::vector<std::size_t> nodes_in_block(std::size_t i) const;

    // Recomputes num_blocks, feature_dim, adjacency, per-block class lists and
    // validates every invariant. Call after mutating nodes/edges by hand.
    void rebuild_index();
};

// Read-only filter: elements with arrival block <= upto. All data access in
// training and evaluation flows through these accessors so the audit sees it.
class SnapshotView {
public:
    SnapshotView(const GraphBlockSequence& seq, std::size_t upto) : seq_(&seq), upto_(upto) {}

    std::size_t upto() const { return upto_; }
    const GraphBlockSequence& sequence() const { return *seq_; }

    bool contains(std::size_t v) const;
    std::vector<std::size_t> node_ids() const;
    std::size_t node_count() const;

    const std::vector<double>& features(std::size_t v) const;
    int label(std::size_t v) const;
    std::size_t block(std::size_t v) const;
    Split split(std::size_t v) const;

    std::vector<std::size_t> neighbors(std::size_t v) const;
    std::size_t degree(std::size_t v) const;

private:
    const NodeRecord& checked(std::size_t v) const;
    const GraphBlockSequence* seq_;
    std::size_t upto_;
};

struct Delta {
    std::vector<std::size_t> node_ids;
    std::vector<EdgeRecord> edges;
};

GraphBlockSequence load_sequence(const std::string& node_path, const std::string& edge_path);
void save_sequence(const GraphBlockSequence& seq, const std::string& node_path,
                   const std::string& edge_path);

SnapshotView snapshot(const GraphBlockSequence& seq, std::size_t i);
Delta delta(const GraphBlockSequence& seq, std::size_t i);

// Uniform without replacement. Returns the full (ascending) neighbor list when
// degree <= fanout. The draw depends only on (seed, v, view.upto), not on call
// order, so parallel evaluation sees the same samples as a serial run.
std::vector<std::size_t> sample_neighbors(const SnapshotView& view, std::size_t v,
                                          std::size_t fanout, std::uint64_t seed);

struct SynthConfig {
    std::size_t blocks = 1;
    std::size_t classes_per_block = 2;
    std::size_t nodes_per_block = 100;
    std::size_t feature_dim = 8;
    double mean_scale = 1.0;  // class centers sit at +-mean_scale along axes
    double sigma = 1.0;
    double p_intra = 0.05;  // edge probability inside a block
    double p_inter = 0.01;  // edge probability toward any earlier block
    double train_frac = 0.6;
    double valid_frac = 0.2;
    TaskKind task_kind = TaskKind::class_incremental;
    std::uint64_t seed = 1;
};

GraphBlockSequence synth_gaussian_sequence(const SynthConfig& cfg);

// Multi-hop computation plan for a batch of target nodes. Level depth holds
// the targets; level l-1 holds every node whose representation level l needs.
// neighbor_idx/self_idx address positions inside level_ids[l-1].
struct EgoBatch {
    std::size_t depth = 0;
    std::vector<std::vector<std::size_t>> level_ids;
    std::vector<std::vector<std::vector<std::size_t>>> neighbor_idx;  // [l][i] -> level l-1 slots
    std::vector<std::vector<std::size_t>> self_idx;                   // [l][i] -> level l-1 slot
};

EgoBatch build_ego_batch(const SnapshotView& view, const std::vector<std::size_t>& targets,
                         std::size_t depth, std::size_t fanout, std::uint64_t seed);

}  // namespace dymoe

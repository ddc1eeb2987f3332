#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dymoe/graph.hpp"
#include "dymoe/memory.hpp"
#include "dymoe/metrics.hpp"
#include "dymoe/model.hpp"
#include "dymoe/optim.hpp"

namespace dymoe {

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 1e-3;
    std::size_t epochs = 40;
    std::size_t balancing_epochs = 10;
    std::size_t batch_size = 128;
    std::size_t embedding_dim = 128;
    std::size_t num_layers = 2;
    std::size_t fanout = 10;
    double gamma = 1.0;
    double delta = 5.0;
    double memory_fraction = 0.05;
    std::size_t k = 1;
    GateMode mode = GateMode::sparse;
    std::uint64_t seed = 1;
};

struct TrainLogRow {
    std::size_t block = 0;
    std::size_t stage = 0;  // 1 = joint training, 2 = memory balancing
    std::size_t epoch = 0;  // 1-based within the stage
    double cls = 0.0, bl = 0.0, gbl = 0.0, total = 0.0;
};

struct BlockStats {
    std::vector<TrainLogRow> log;
    double train_seconds = 0.0;
};

// Drives the incremental protocol one block at a time: grow the model with
// mean-initialized gates, train jointly on replay plus the new block, pick
// the block's replay set, then rebalance on replay alone. The access audit
// must already be armed by the caller when block isolation matters.
class Trainer {
public:
    Trainer(const GraphBlockSequence& seq, const TrainConfig& cfg);

    // t must advance one block at a time, starting at 1.
    BlockStats train_block(std::size_t t);

    const ModelState& model() const { return model_; }
    const MemoryBank& bank() const { return bank_; }
    const TrainConfig& config() const { return cfg_; }
    std::size_t blocks_done() const { return blocks_done_; }

private:
    std::vector<std::vector<double>> gate_init_means(const SnapshotView& view,
                                                     const std::vector<std::size_t>& train_ids,
                                                     std::size_t t) const;
    TrainLogRow run_epoch(const SnapshotView& view, const std::vector<std::size_t>& ids,
                          Adam& opt, std::size_t t, std::size_t stage, std::size_t epoch);

    const GraphBlockSequence& seq_;
    TrainConfig cfg_;
    ModelState model_;
    MemoryBank bank_;
    std::size_t blocks_done_ = 0;
};

// Rejects impossible settings (zero epochs, negative weights, ...) before
// any expensive work starts.
void validate_train_config(const TrainConfig& cfg);

// Number of classes present in blocks 1..t.
std::size_t classes_through(const GraphBlockSequence& seq, std::size_t t);

// Ascending ids of the requested split across blocks 1..t.
std::vector<std::size_t> split_ids_through(const GraphBlockSequence& seq, std::size_t t,
                                           Split split);

// Worker budget for evaluation: DYMOE_THREADS, clamped to at least one.
std::size_t eval_threads();

struct EvalResult {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const {
        return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    }
};

// Noise-free accuracy of argmax-readout predictions over ids. Ties in the
// logits fall to the lower class index. force, when given, is applied to
// every forward pass (used by the baselines and routing diagnostics).
EvalResult evaluate(const ModelState& model, const SnapshotView& view,
                    const std::vector<std::size_t>& ids, GateMode mode, std::size_t fanout,
                    std::uint64_t seed, const GateOverride* force = nullptr);

struct RunResult {
    MetricsMatrix matrix;
    std::vector<TrainLogRow> log;
    std::vector<double> train_seconds;  // per block
};

// Full pass over every block. After block j it scores the accumulated test
// sets of blocks 1..j on the current graph, filling column j of the matrix.
// When out_dir is set, per-block checkpoints, the replay manifest, and the
// training log land there.
RunResult run_incremental(const GraphBlockSequence& seq, const TrainConfig& cfg,
                          const std::string& out_dir = "");

// Writes the epoch log in the run's CSV layout, header included.
void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log);

}  // namespace dymoe

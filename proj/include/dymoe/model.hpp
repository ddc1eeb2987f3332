#pragma once

#include <cstdint>
#include <vector>

#include "dymoe/autodiff.hpp"
#include "dymoe/graph.hpp"
#include "dymoe/moe.hpp"

namespace dymoe {

// The full incremental classifier: a shared input projection, a stack of
// mixture layers that grow one expert per block, and a linear readout that
// widens as new classes arrive. The input projection only trains during the
// first block; afterwards it is part of the frozen substrate that keeps old
// representations reproducible.
struct ModelState {
    std::size_t feature_dim = 0;
    std::size_t width = 0;
    std::size_t num_layers = 0;
    std::size_t blocks_seen = 0;
    DiffValue w_in;  // width x feature_dim
    std::vector<DyMoELayerState> layers;
    DiffValue readout_w;  // classes x width
    DiffValue readout_b;  // 1 x classes

    static ModelState create(std::size_t feature_dim, std::size_t width, std::size_t num_layers,
                             std::size_t k, std::size_t num_classes, std::uint64_t seed);

    std::size_t num_classes() const { return readout_w ? readout_w->rows : 0; }
    std::vector<DiffValue> all_params() const;  // stable declaration order
    std::vector<DiffValue> trainable() const;
};

// Starts block t+1: appends one expert per layer (freezing the previous
// ones) and locks the input projection once a second block exists.
// gate_inits supplies one gate vector per layer; empty entries fall back to
// random initialization.
void grow_model(ModelState& model, const std::vector<std::vector<double>>& gate_inits,
                std::uint64_t seed);

// Extends the readout to new_classes outputs. Existing rows keep their
// exact values; fresh rows draw from the usual uniform fan-in bound.
void widen_readout(ModelState& model, std::size_t new_classes, std::uint64_t seed);

struct ModelForwardArgs {
    GateMode mode = GateMode::sparse;
    bool training = false;
    std::uint64_t noise_seed = 0;
    const GateOverride* force = nullptr;
};

// What the losses need from one forward pass, per mixture layer.
struct LayerTrace {
    DiffValue raw_logits;  // rows follow out_ids
    DiffValue betas;       // rows follow in_ids
    std::vector<std::size_t> out_ids;
    std::vector<std::size_t> in_ids;
    std::vector<std::vector<std::size_t>> selected;
};

struct ModelForward {
    DiffValue embeddings;  // final-layer representations of the targets
    DiffValue logits;      // readout over embeddings
    std::vector<LayerTrace> traces;
    // Input representations per mixture layer: level_inputs[l] feeds layer
    // l+1 and follows batch.level_ids[l].
    std::vector<DiffValue> level_inputs;
};

// Runs the batch plan bottom-up: project level-0 features, apply each
// mixture layer one hop at a time, then read out the targets. Feature reads
// go through the snapshot view, so the access audit sees them.
ModelForward model_forward(Tape& tape, const ModelState& model, const SnapshotView& view,
                           const EgoBatch& batch, const ModelForwardArgs& args);

}  // namespace dymoe

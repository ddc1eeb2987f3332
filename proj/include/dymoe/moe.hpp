#pragma once

#include <cstdint>
#include <vector>

#include "dymoe/autodiff.hpp"
#include "dymoe/expert.hpp"

namespace dymoe {

enum class GateMode { dense, sparse };

// One mixture layer. Experts accumulate over blocks; everything but the
// newest expert's parameters is frozen during training. Gate, noise, and
// arrival vectors stay trainable for every expert, as does the shared
// arrival projection.
struct DyMoELayerState {
    std::size_t width = 0;
    std::size_t k = 1;               // active-expert budget in sparse mode
    std::size_t frozen_below = 0;    // experts [0, frozen_below) take no updates
    std::vector<ExpertParams> experts;
    std::vector<DiffValue> gate_vectors;     // g_i, 1 x width
    std::vector<DiffValue> noise_vectors;    // q_i, 1 x width
    std::vector<DiffValue> arrival_vectors;  // p_i, 1 x width
    DiffValue shared_projection;             // width x width

    static DyMoELayerState create(std::size_t width, std::size_t k, std::uint64_t seed);

    std::size_t expert_count() const { return experts.size(); }
    std::size_t effective_k() const {
        return experts.size() < k ? experts.size() : k;
    }
};

// Routing outcome for one node. alphas has zeros outside `selected` and sums
// to one; raw_logits are the noise-free similarities feeding gate supervision.
struct GateDecision {
    std::vector<double> alphas;
    std::vector<std::size_t> selected;  // ascending
    std::vector<double> raw_logits;
};

// Diagnostic forcing: route everything through one expert, optionally with
// the arrival gates pinned to their exact multi-hot pattern (force_beta) or
// held fully open (unit_beta). force_beta wins when both are set.
struct GateOverride {
    std::size_t expert = 0;  // 0-based
    bool force_beta = false;
    bool unit_beta = false;
};

double similarity(const std::vector<double>& x, const std::vector<double>& g);
double similarity_gaussian(const std::vector<double>& x, const std::vector<double>& g,
                           double sigma);

GateDecision gate_dense(const std::vector<double>& x, const DyMoELayerState& layer);
GateDecision gate_sparse(const std::vector<double>& x, const DyMoELayerState& layer,
                         bool training, std::uint64_t rng_seed);

// sigmoid(p_j . (W^P h_u)) clamped away from {0,1} so log(beta) stays finite.
// j is 1-based.
double arrival_gate(const std::vector<double>& h_u, std::size_t j, const DyMoELayerState& layer);

// Largest-k positions of h[0..t), ties resolved toward the lower index.
// Result sorted ascending.
std::vector<std::size_t> top_k_indices(const double* h, std::size_t t, std::size_t k);

struct LayerForwardArgs {
    GateMode mode = GateMode::sparse;
    bool training = false;
    std::uint64_t noise_seed = 0;
    const GateOverride* force = nullptr;
    // Arrival blocks of the h_prev rows; required when force->force_beta.
    const std::vector<std::size_t>* input_blocks = nullptr;
};

struct LayerForward {
    DiffValue outputs;     // N x width
    DiffValue raw_logits;  // N x t, noise-free
    DiffValue alphas;      // N x t, zeros outside selection
    DiffValue betas;       // M x t over the input level
    std::vector<std::vector<std::size_t>> selected;  // per node
};

// Batched mixture forward over one computation level. h_prev holds the input
// level's representations (M rows); self_idx/neighbor_idx address rows of
// h_prev for each of the N output nodes; node_ids are the global node ids
// behind those outputs (they key the per-node noise streams, keeping results
// independent of batch composition). Unselected experts are never run.
LayerForward layer_forward(Tape& tape, const DyMoELayerState& layer, const DiffValue& h_prev,
                           const std::vector<std::size_t>& self_idx,
                           const std::vector<std::vector<std::size_t>>& neighbor_idx,
                           const std::vector<std::size_t>& node_ids, const LayerForwardArgs& args);

// Appends expert t+1. init_gate becomes g_{t+1} (random when empty); all
// earlier experts are frozen in place.
void add_expert(DyMoELayerState& layer, const std::vector<double>& init_gate, std::uint64_t seed);

// Everything the optimizer may touch at the current block: the newest
// expert's parameters, all gating apparatus, and the shared projection.
std::vector<DiffValue> trainable_params(const DyMoELayerState& layer);

}  // namespace dymoe

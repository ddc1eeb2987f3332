#pragma once

#include <cstdint>
#include <vector>

#include "dymoe/autodiff.hpp"

namespace dymoe {

// One expert: attention over sampled neighbors with the target as query,
// then a residual two-layer MLP. Everything is square in the layer width so
// experts stack into any position.
struct ExpertParams {
    DiffValue wq, wk, wv;      // width x width projections
    DiffValue mlp_w1, mlp_b1;  // width x width, 1 x width
    DiffValue mlp_w2, mlp_b2;

    static ExpertParams init(std::size_t width, std::uint64_t seed);

    std::size_t width() const { return wq ? wq->rows : 0; }
    std::vector<DiffValue> params() const;  // declaration order, stable for checkpoints
    void set_trainable(bool trainable);
};

// q = Wq h_v, K = Wk H_N, V = Wv H_N, out = softmax(q K^T / sqrt(width)) V.
// h_v is 1 x width, H_N is d x width (one row per sampled neighbor). An empty
// neighborhood yields the zero vector.
DiffValue attention(Tape& tape, const ExpertParams& e, const DiffValue& h_v, const DiffValue& h_n);

// Same with log(beta) added to the logits, one beta entry per neighbor.
// beta = 1 recovers plain attention; beta -> 0 silences the neighbor.
DiffValue masked_attention(Tape& tape, const ExpertParams& e, const DiffValue& h_v,
                           const DiffValue& h_n, const DiffValue& beta);

// MLP(h_v + masked_attention(...)). Pass an empty beta handle for no masking.
DiffValue expert_forward(Tape& tape, const ExpertParams& e, const DiffValue& h_v,
                         const DiffValue& h_n, const DiffValue& beta);

// The residual MLP alone, batched over rows.
DiffValue expert_mlp(Tape& tape, const ExpertParams& e, const DiffValue& x);

}  // namespace dymoe

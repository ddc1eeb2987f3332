#pragma once

#include <cstddef>
#include <vector>

#include "dymoe/autodiff.hpp"

namespace dymoe {

struct LossConfig {
    double gamma = 1.0;  // block-guided weight
    double delta = 5.0;  // graph block-guided weight
};

// e_j over t entries, j 1-based.
std::vector<double> one_hot(std::size_t j, std::size_t t);

// l with l_j = 1 iff j >= b: the experts allowed to see a block-b node.
std::vector<double> multi_hot_arrival(std::size_t b, std::size_t t);

// Cross-entropy of the gate distribution against the node's own block.
// raw_logits are pre-softmax similarities, one row per node; blocks are
// 1-based arrival indices. Mean over rows.
DiffValue block_guided_loss(Tape& tape, const DiffValue& raw_logits,
                            const std::vector<std::size_t>& blocks);

// Mean binary cross-entropy of arrival gates against the multi-hot arrival
// pattern; betas is rows x t, blocks give each row's b(u).
DiffValue graph_block_guided_loss(Tape& tape, const DiffValue& betas,
                                  const std::vector<std::size_t>& blocks);

// A loss term with the node count it was averaged over, so terms from
// different layers recombine into one exact global mean.
struct WeightedTerm {
    DiffValue value;
    std::size_t count = 0;
};

// L = cls + gamma * mean(BL terms) + delta * mean(GBL terms). The means run
// over every (layer, node) contribution; empty collections contribute zero.
DiffValue total_loss(Tape& tape, const DiffValue& cls, const std::vector<WeightedTerm>& bl_terms,
                     const std::vector<WeightedTerm>& gbl_terms, const LossConfig& cfg);

}  // namespace dymoe

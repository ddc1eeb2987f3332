#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dymoe/graph.hpp"
#include "dymoe/model.hpp"

namespace dymoe {

// Routing diagnostics for a trained model, scored on the graph as of the
// model's last trained block.

// Square table over t = blocks seen. Entry [e-1][b-1] is the accuracy on
// block b's own test nodes when every mixture layer routes through expert e
// alone; the arrival gates stay learned. Specialists show up as dominant
// diagonal entries.
std::vector<std::vector<double>> expert_specialization(const ModelState& model,
                                                       const GraphBlockSequence& seq,
                                                       std::size_t fanout, std::uint64_t seed);

// Fraction of test nodes through the model's horizon whose first-layer gate
// argmax names their own arrival block. Ties fall to the lower expert.
double gate_accuracy(const ModelState& model, const GraphBlockSequence& seq, std::size_t fanout,
                     std::uint64_t seed);

// One row per expert: expert,block_1,...,block_t.
void write_specialization_csv(const std::string& path,
                              const std::vector<std::vector<double>>& table);

}  // namespace dymoe

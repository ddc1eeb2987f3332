#pragma once

#include <string>
#include <vector>

#include "dymoe/graph.hpp"
#include "dymoe/trainer.hpp"

namespace dymoe {

// Reference runs for the incremental protocol. All three share the mixture
// backbone with a single expert per layer and every gate pinned open, so the
// routing machinery itself is the only thing the incremental run adds. Each
// returns the same matrix/log structure as run_incremental; when out_dir is
// set, train_log.csv lands there.

// Trains on block 1 only and never updates again. Each test set is scored
// once, when it first appears; later columns repeat that score, so the
// forgetting summary is exactly zero.
RunResult pretrain_run(const GraphBlockSequence& seq, const TrainConfig& cfg,
                       const std::string& out_dir = "");

// One model fine-tuned at every block on that block's newly arrived training
// nodes, with neighborhoods drawn from the full current graph. No replay, no
// gate supervision.
RunResult online_run(const GraphBlockSequence& seq, const TrainConfig& cfg,
                     const std::string& out_dir = "");

// A fresh model per block, trained from scratch on every training node seen
// so far. The slow upper bound.
RunResult retrain_run(const GraphBlockSequence& seq, const TrainConfig& cfg,
                      const std::string& out_dir = "");

// Parameter-isolation prediction rule: softmax(f1 + f2). Lengths must match
// and be nonzero.
std::vector<double> pi_combine(const std::vector<double>& f1, const std::vector<double>& f2);

}  // namespace dymoe
